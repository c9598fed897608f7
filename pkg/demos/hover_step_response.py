#!/usr/bin/env python3
"""Closed-loop step response: the vehicle is commanded left, right, up, down
and through a yaw turn while the arm sweeps. Produces position/velocity and
attitude/rate trace figures under demos/out/."""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from twinlift.sim import ArmCommand, SetpointChange, SimConfig, run_scenario, summarize

OUT = Path(__file__).parent / "out"

if __name__ == "__main__":
    events = [
        (1.0, SetpointChange(position=(1.0, 0.0, -1.0))),            # right
        (5.0, SetpointChange(position=(-1.0, 0.0, -1.0))),           # left
        (9.0, SetpointChange(position=(-1.0, 0.0, -2.0))),           # up
        (13.0, SetpointChange(position=(-1.0, 0.0, -0.5))),          # down
        (17.0, SetpointChange(yaw=math.pi / 2)),                     # rotate
        (19.0, ArmCommand(joints=(0.6, 0.8, -0.4))),                 # arm sweep
    ]
    cfg = SimConfig(duration=24.0, events=events)
    log = run_scenario(cfg)
    print("summary:", summarize(log))

    OUT.mkdir(exist_ok=True)
    t = log.t

    fig, axes = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for i, lbl in enumerate("xyz"):
        axes[0].plot(t, log.position[:, i], label=lbl)
        axes[1].plot(t, log.velocity[:, i], label=f"v{lbl}")
    axes[0].set_ylabel("position [m] (NED)")
    axes[1].set_ylabel("velocity [m/s]")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        ax.legend(loc="upper right")
        ax.grid(alpha=0.3)
    fig.suptitle("Position and linear velocity under the tracking controller")
    fig.savefig(OUT / "step_position_velocity.png", dpi=120)

    fig, axes = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for i, lbl in enumerate(("phi", "theta", "psi")):
        axes[0].plot(t, np.degrees(log.euler[:, i]), label=lbl)
    for i, lbl in enumerate(("p", "q", "r")):
        axes[1].plot(t, log.body_rates[:, i], label=lbl)
    axes[0].set_ylabel("attitude [deg]")
    axes[1].set_ylabel("body rates [rad/s]")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        ax.legend(loc="upper right")
        ax.grid(alpha=0.3)
    fig.suptitle("Attitude and angular velocity")
    fig.savefig(OUT / "step_attitude_rates.png", dpi=120)
    print("figures written to", OUT)
