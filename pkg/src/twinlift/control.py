"""Geometric tracking controller for the flying base.

Thrust magnitude comes from the norm of the position-loop force vector, the
desired attitude points body z along that vector (NED: thrust opposes it
through the -R e3 term), and the attitude loop is a PD law on the SO(3)
rotation error. Arm joint commands pass through untouched; the arm is the
operator's to command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import E3, ControlInputs, VehicleParams, VehicleState, total_mass
from .se3 import vee

FORCE_DEGENERATE = 1e-6


def _cross3(a, b) -> np.ndarray:
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def _gain_vec(g) -> np.ndarray:
    """Accept a scalar or a length-3 sequence; broadcast scalars per axis."""
    a = np.asarray(g, dtype=float)
    if a.ndim == 0:
        a = np.full(3, float(a))
    a = a.reshape(3).copy()
    if not (a > 0).all():
        raise ValueError("gains must be strictly positive")
    return a


@dataclass(frozen=True)
class ControlGains:
    k_p: np.ndarray
    k_v: np.ndarray
    k_r: np.ndarray
    k_omega: np.ndarray

    @classmethod
    def make(cls, k_p, k_v, k_r, k_omega) -> "ControlGains":
        return cls(_gain_vec(k_p), _gain_vec(k_v), _gain_vec(k_r), _gain_vec(k_omega))


def default_gains() -> ControlGains:
    """Gains tuned on the default params fixture (not taken from anywhere else)."""
    return ControlGains.make(k_p=(2.0, 2.0, 4.0), k_v=(2.5, 2.5, 4.0),
                             k_r=6.0, k_omega=(0.6, 0.6, 0.8))


@dataclass(frozen=True)
class ControlSetpoint:
    position: np.ndarray
    velocity: np.ndarray
    accel: np.ndarray
    yaw: float = 0.0
    rates: np.ndarray = field(default_factory=lambda: np.zeros(3))
    arm_commands: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def make(cls, position=(0, 0, 0), velocity=(0, 0, 0), accel=(0, 0, 0),
             yaw=0.0, rates=(0, 0, 0), arm_commands=(0, 0, 0)) -> "ControlSetpoint":
        v3 = lambda v: np.asarray(v, dtype=float).reshape(3).copy()
        if not -math.pi < float(yaw) <= math.pi + 1e-12:
            raise ValueError("yaw_d must lie in (-pi, pi]")
        return cls(v3(position), v3(velocity), v3(accel), float(yaw), v3(rates),
                   v3(arm_commands))


@dataclass(frozen=True)
class ControllerMemory:
    """Explicit state for the degenerate-force fallback: the last good R_d."""
    r_d: np.ndarray


def position_errors(state: VehicleState, setpoint: ControlSetpoint):
    """e_p = x - x_d, e_v = v - v_d."""
    return state.position - setpoint.position, state.velocity - setpoint.velocity


def force_vector(e_p, e_v, accel_d, params: VehicleParams, gains: ControlGains) -> np.ndarray:
    """g e3 + K_v*e_v + K_p*e_p - xdd_d; its norm scales thrust, its direction
    is the desired body z. Callers must treat norms below FORCE_DEGENERATE as
    a free-fall command."""
    return params.gravity * E3 + gains.k_v * np.asarray(e_v, dtype=float) \
        + gains.k_p * np.asarray(e_p, dtype=float) - np.asarray(accel_d, dtype=float)


def thrust_magnitude(force, params: VehicleParams, payload_attached: bool) -> float:
    """f = m_total * |F|, clamped to [0, thrust_max]."""
    f = total_mass(params, payload_attached) * float(np.linalg.norm(force))
    return min(max(f, 0.0), params.thrust_limit(payload_attached))


def desired_attitude(force, yaw_d: float) -> np.ndarray:
    """R_d = [b1 b2 b3] with b3 along the force vector and b1 set by yaw_d."""
    f = np.asarray(force, dtype=float)
    norm = float(np.linalg.norm(f))
    if norm < FORCE_DEGENERATE:
        raise ValueError("degenerate force vector (free-fall command)")
    b3 = f / norm
    b1c = np.array([math.cos(yaw_d), math.sin(yaw_d), 0.0])
    b2 = _cross3(b3, b1c)
    n2 = float(np.linalg.norm(b2))
    if n2 < 1e-9:
        raise ValueError("thrust direction parallel to the yaw reference")
    b2 /= n2
    b1 = _cross3(b2, b3)
    return np.column_stack([b1, b2, b3])


def attitude_errors(r, omega, r_d, omega_d):
    """e_R = 0.5 vee(R_d^T R - R^T R_d); e_Omega = Omega - R^T R_d Omega_d."""
    r = np.asarray(r, dtype=float)
    r_d = np.asarray(r_d, dtype=float)
    e_r = 0.5 * vee(r_d.T @ r - r.T @ r_d)
    e_omega = np.asarray(omega, dtype=float) - r.T @ r_d @ np.asarray(omega_d, dtype=float)
    return e_r, e_omega


def attitude_torque(e_r, e_omega, gains: ControlGains) -> np.ndarray:
    """tau = -k_R e_R - K_Omega e_Omega."""
    return -gains.k_r * np.asarray(e_r, dtype=float) \
        - gains.k_omega * np.asarray(e_omega, dtype=float)


def control_step(state: VehicleState, setpoint: ControlSetpoint, params: VehicleParams,
                 gains: ControlGains, memory: ControllerMemory | None = None):
    """One control evaluation; returns (inputs, memory).

    On a degenerate force vector the previous desired attitude is held (the
    documented stateful fallback) and thrust is zero.
    """
    e_p, e_v = position_errors(state, setpoint)
    force = force_vector(e_p, e_v, setpoint.accel, params, gains)
    if float(np.linalg.norm(force)) < FORCE_DEGENERATE:
        r_d = memory.r_d if memory is not None else np.eye(3)
        thrust = 0.0
    else:
        r_d = desired_attitude(force, setpoint.yaw)
        thrust = thrust_magnitude(force, params, state.payload_attached)
    e_r, e_omega = attitude_errors(state.attitude, state.body_rates, r_d, setpoint.rates)
    tau = attitude_torque(e_r, e_omega, gains)
    inputs = ControlInputs(thrust, tau, setpoint.arm_commands.copy())
    return inputs, ControllerMemory(r_d)
