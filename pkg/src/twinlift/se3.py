"""SO(3) primitives shared by the dynamics, controller, simulator and twin.

Conventions used everywhere in this package:

* rotation matrices are body-to-world, ZYX (yaw-pitch-roll) Euler factoring,
* Euler angles are radians with phi, psi in (-pi, pi] and theta in [-pi/2, pi/2],
* gimbal lock is resolved by phi := 0 with the residual folded into psi
  (the wire protocol and the cockpit rely on this, see docs/protocol.md).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SKEW_TOL = 1e-9
GIMBAL_TOL = 1e-9
ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class EulerAngles:
    """ZYX Euler angles in radians. ``gimbal_lock`` flags a degenerate extraction."""

    phi: float
    theta: float
    psi: float
    gimbal_lock: bool = field(default=False, compare=False)

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi], dtype=float)


def hat(v) -> np.ndarray:
    """Map a 3-vector to its skew-symmetric matrix, so that hat(v) @ w == v x w."""
    x1, x2, x3 = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -x3, x2],
        [x3, 0.0, -x1],
        [-x2, x1, 0.0],
    ])


def vee(m) -> np.ndarray:
    """Inverse of :func:`hat`. Rejects matrices that are not skew within ``SKEW_TOL``."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"vee expects a 3x3 matrix, got shape {m.shape}")
    defect = np.abs(m + m.T).max()
    if defect > SKEW_TOL:
        raise ValueError(f"matrix is not skew-symmetric (max |M + M^T| = {defect:.3e})")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rotation_from_euler(e: EulerAngles) -> np.ndarray:
    """ZYX rotation matrix (body to world) from Euler angles."""
    cf, sf = math.cos(e.phi), math.sin(e.phi)
    ct, st = math.cos(e.theta), math.sin(e.theta)
    cp, sp = math.cos(e.psi), math.sin(e.psi)
    return np.array([
        [ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp],
        [ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp],
        [-st, sf * ct, cf * ct],
    ])


def euler_from_rotation(r) -> EulerAngles:
    """Extract ZYX Euler angles; theta = -asin(R[2,0]).

    Within ``GIMBAL_TOL`` of the theta = +-pi/2 singularity the returned angles
    carry ``gimbal_lock=True``, phi is fixed to 0 and the residual rotation is
    folded into psi (the matrix is still reproduced exactly).
    """
    r = np.asarray(r, dtype=float)
    _require_rotation(r)
    r31 = r[2, 0]
    if abs(r31) > 1.0 - GIMBAL_TOL:
        theta = math.pi / 2 if r31 < 0 else -math.pi / 2
        if r31 < 0:
            psi = -math.atan2(r[0, 1], r[1, 1])
        else:
            psi = math.atan2(-r[0, 1], r[1, 1])
        return EulerAngles(0.0, theta, _wrap_pi(psi), gimbal_lock=True)
    theta = -math.asin(min(1.0, max(-1.0, r31)))
    phi = math.atan2(r[2, 1], r[2, 2])
    psi = math.atan2(r[1, 0], r[0, 0])
    return EulerAngles(_wrap_pi(phi), theta, _wrap_pi(psi))


def reproject_so3(m) -> np.ndarray:
    """Nearest rotation matrix by iterated averaging X <- (X + X^-T) / 2.

    Converges quadratically to the orthonormal polar factor for inputs near
    SO(3); inputs whose polar factor has det <= 0 are rejected.
    """
    x = np.array(m, dtype=float)
    if x.shape != (3, 3):
        raise ValueError(f"reproject_so3 expects a 3x3 matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("reproject_so3: non-finite input")
    if np.linalg.det(x) <= 0.0:
        raise ValueError("reproject_so3: input has non-positive determinant")
    if np.linalg.norm(x @ x.T - np.eye(3)) > 10.0:
        raise ValueError("reproject_so3: input too far from SO(3)")
    defect = 1.0
    for _ in range(100):
        defect = np.abs(x @ x.T - np.eye(3)).max()
        if defect < 1e-15:
            break
        x = 0.5 * (x + np.linalg.inv(x).T)
    if defect > 1e-12:
        raise ValueError("reproject_so3: iteration did not converge")
    if np.linalg.det(x) <= 0.0:
        raise ValueError("reproject_so3: orthonormalization produced det <= 0")
    return x


def so3_exp(w) -> np.ndarray:
    """Rodrigues exponential of a rotation vector (axis * angle)."""
    w = np.asarray(w, dtype=float)
    angle = float(np.linalg.norm(w))
    k = hat(w)
    if angle < 1e-10:
        # second-order series, exact enough at this magnitude
        return np.eye(3) + k + 0.5 * (k @ k)
    k = k / angle
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def so3_log(r) -> np.ndarray:
    """Rotation vector of R in SO(3) (inverse of :func:`so3_exp`), |result| <= pi."""
    r = np.asarray(r, dtype=float)
    cos_angle = min(1.0, max(-1.0, 0.5 * (np.trace(r) - 1.0)))
    angle = math.acos(cos_angle)
    if angle < 1e-10:
        return 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if math.pi - angle < 1e-6:
        # near pi the antisymmetric part vanishes; recover axis from R + I
        a = 0.5 * (r + np.eye(3))
        axis = np.sqrt(np.maximum(np.diag(a), 0.0))
        # fix signs from off-diagonal terms, anchored on the largest component
        i = int(np.argmax(axis))
        if axis[i] > 0:
            for j in range(3):
                if j != i:
                    axis[j] = math.copysign(axis[j], a[i, j])
        return angle * axis / np.linalg.norm(axis)
    scale = angle / (2.0 * math.sin(angle))
    return scale * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])


def is_rotation(r, tol: float = ORTHO_TOL) -> bool:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.isfinite(r).all():
        return False
    return (
        np.abs(r @ r.T - np.eye(3)).max() <= tol
        and abs(np.linalg.det(r) - 1.0) <= tol
    )


def _require_rotation(r, tol: float = ORTHO_TOL) -> None:
    if not is_rotation(r, tol):
        raise ValueError("matrix is not orthonormal with det +1 within tolerance")


def wrap_pi(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


_wrap_pi = wrap_pi
