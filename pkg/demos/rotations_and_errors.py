#!/usr/bin/env python3
"""Tour of the SO(3) toolbox: hat/vee, Euler round trips, reprojection,
and what the geometric attitude error looks like."""

import math

import numpy as np

from twinlift.se3 import (EulerAngles, euler_from_rotation, hat, reproject_so3,
                          rotation_from_euler, vee)
from twinlift.control import attitude_errors

if __name__ == "__main__":
    v = np.array([1.0, 2.0, 3.0])
    print("hat(v) =\n", hat(v))
    print("vee(hat(v)) =", vee(hat(v)))
    w = np.array([0.5, -1.0, 0.25])
    print("hat(v) @ w  =", hat(v) @ w)
    print("v x w       =", np.cross(v, w))

    e = EulerAngles(phi=math.pi / 6, theta=-math.pi / 4, psi=math.pi / 3)
    r = rotation_from_euler(e)
    print("\nR(phi=30deg, theta=-45deg, psi=60deg) =\n", np.round(r, 6))
    print("orthonormality defect:", np.abs(r @ r.T - np.eye(3)).max())
    back = euler_from_rotation(r)
    print("recovered angles:", back.phi, back.theta, back.psi)

    # integrate badly on purpose, then put the matrix back on the group
    drifted = r + 1e-3 * np.random.default_rng(0).normal(size=(3, 3))
    fixed = reproject_so3(drifted)
    print("\ndefect before reprojection:", np.abs(drifted @ drifted.T - np.eye(3)).max())
    print("defect after  reprojection:", np.abs(fixed @ fixed.T - np.eye(3)).max())

    # the attitude error of a pure yaw offset lives on the z axis and is a sine
    for theta in (0.1, 0.3, 1.0):
        r_yaw = rotation_from_euler(EulerAngles(0, 0, theta))
        e_r, _ = attitude_errors(r_yaw, np.zeros(3), np.eye(3), np.zeros(3))
        print(f"yaw offset {theta:.1f} rad -> e_R = {np.round(e_r, 6)}"
              f"  (sin = {math.sin(theta):.6f})")
