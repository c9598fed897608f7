"""Continuous-time model of the aerial manipulator.

World frame is NED (e3 points down), so weight is +g*e3 and thrust acts along
-R*e3. The flying base is a rigid body driven by collective thrust and body
torque; the 3-joint arm is a per-joint PD double integrator whose motion feeds
back on the base only through a bounded coupling wrench (quasi-static gravity
moment of the offset arm CoM plus the reaction to the arm CoM acceleration).
All functions are pure; state and parameters are plain values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .se3 import hat, is_rotation

E3 = np.array([0.0, 0.0, 1.0])


def _cross(a, b) -> np.ndarray:
    # np.cross has ~30x overhead on single 3-vectors; this path is hot
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


class SimulationDiverged(RuntimeError):
    """Raised when integration produces non-finite state."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    return a.copy()


@dataclass(frozen=True)
class VehicleParams:
    """Physical parameters. Defaults are the documented test fixture, not claims."""

    mass_base: float = 1.5                     # kg
    inertia_diag: tuple = (0.03, 0.03, 0.06)   # kg m^2
    gravity: float = 9.81                      # m/s^2
    arm_link_masses: tuple = (0.05, 0.05, 0.05)   # kg
    arm_link_lengths: tuple = (0.10, 0.10, 0.10)  # m
    arm_mount_offset: tuple = (0.0, 0.0, 0.05)    # m, body frame
    payload_mass: float = 0.160                # kg
    joint_kp: tuple = (4.0, 4.0, 4.0)
    joint_kd: tuple = (4.0, 4.0, 4.0)          # critically damped with kp=4
    force_max: float = 2.0                     # m/s^2 bound on |F_a|
    moment_max: float = 5.0                    # rad/s^2 bound on |T|
    thrust_max: float | None = None            # N; default 4 * m_total * g

    def __post_init__(self):
        if self.mass_base <= 0:
            raise ValueError("mass_base must be positive")
        if any(j <= 0 for j in self.inertia_diag):
            raise ValueError("inertia diagonal entries must be positive")
        if self.gravity <= 0:
            raise ValueError("gravity must be positive")
        if self.payload_mass < 0:
            raise ValueError("payload_mass must be non-negative")

    @cached_property
    def inertia(self) -> np.ndarray:
        return np.diag(self.inertia_diag)

    @cached_property
    def inertia_inv(self) -> np.ndarray:
        return np.diag([1.0 / j for j in self.inertia_diag])

    @cached_property
    def _j_diag(self) -> np.ndarray:
        return np.asarray(self.inertia_diag, dtype=float)

    @cached_property
    def _arm_masses(self) -> np.ndarray:
        return np.asarray(self.arm_link_masses, dtype=float)

    @cached_property
    def _arm_lengths(self) -> np.ndarray:
        return np.asarray(self.arm_link_lengths, dtype=float)

    @cached_property
    def _mount(self) -> np.ndarray:
        return np.asarray(self.arm_mount_offset, dtype=float)

    @cached_property
    def _joint_kp(self) -> np.ndarray:
        return np.asarray(self.joint_kp, dtype=float)

    @cached_property
    def _joint_kd(self) -> np.ndarray:
        return np.asarray(self.joint_kd, dtype=float)

    @cached_property
    def arm_mass(self) -> float:
        return float(self._arm_masses.sum())

    def thrust_limit(self, payload_attached: bool) -> float:
        if self.thrust_max is not None:
            return self.thrust_max
        return 4.0 * total_mass(self, payload_attached) * self.gravity


@dataclass(frozen=True)
class VehicleState:
    position: np.ndarray          # m, world NED
    velocity: np.ndarray          # m/s, world
    attitude: np.ndarray          # body->world rotation
    body_rates: np.ndarray        # rad/s, body
    arm_angles: np.ndarray        # rad
    arm_rates: np.ndarray         # rad/s
    payload_attached: bool = False

    @classmethod
    def make(cls, position=(0, 0, 0), velocity=(0, 0, 0), attitude=None,
             body_rates=(0, 0, 0), arm_angles=(0, 0, 0), arm_rates=(0, 0, 0),
             payload_attached=False) -> "VehicleState":
        r = np.eye(3) if attitude is None else np.asarray(attitude, dtype=float)
        return cls(_vec3(position), _vec3(velocity), r.copy(), _vec3(body_rates),
                   _vec3(arm_angles), _vec3(arm_rates), payload_attached)

    def validate(self) -> None:
        for name in ("position", "velocity", "body_rates", "arm_angles", "arm_rates"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"non-finite {name}")
        if not is_rotation(self.attitude):
            raise ValueError("attitude is not in SO(3) within tolerance")
        if np.abs(self.arm_angles).max() > math.pi + 1e-9:
            raise ValueError("arm angles outside [-pi, pi]")


@dataclass(frozen=True)
class ControlInputs:
    thrust: float                 # N, collective, >= 0
    torque: np.ndarray            # N m, body
    arm_commands: np.ndarray      # rad, per joint

    @classmethod
    def make(cls, thrust=0.0, torque=(0, 0, 0), arm_commands=(0, 0, 0)) -> "ControlInputs":
        return cls(float(thrust), _vec3(torque), _vec3(arm_commands))


@dataclass(frozen=True)
class CouplingWrench:
    force: np.ndarray    # m/s^2, world-frame specific force on the base
    moment: np.ndarray   # rad/s^2, body-frame angular acceleration

    @classmethod
    def zero(cls) -> "CouplingWrench":
        return cls(np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class StateDerivative:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    body_rates: np.ndarray
    arm_angles: np.ndarray
    arm_rates: np.ndarray


def total_mass(params: VehicleParams, payload_attached: bool) -> float:
    """Base plus arm links plus (when attached) the payload."""
    m = params.mass_base + params.arm_mass
    if payload_attached:
        m += params.payload_mass
    return m


def arm_joint_accel(q, q_dot, q_cmd, params: VehicleParams) -> np.ndarray:
    """Per-joint PD double integrator: qdd_i = kp_i (cmd_i - q_i) - kd_i qd_i."""
    q = np.asarray(q, dtype=float)
    q_dot = np.asarray(q_dot, dtype=float)
    q_cmd = np.asarray(q_cmd, dtype=float)
    return params._joint_kp * (q_cmd - q) - params._joint_kd * q_dot


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def arm_com_body(q, params: VehicleParams) -> np.ndarray:
    """Body-frame position of the arm's composite CoM.

    Serial chain anchored at ``arm_mount_offset``: joint 1 about body z,
    joints 2 and 3 about the successive link y axes; links extend along -z
    (stowed) at q = 0. With zero link mass the mount point is returned.

    Written in closed form (the Rz(q1) Ry(q2) Ry(q3) chain collapses to
    sines of q2 and q2+q3 swung by q1); tests check it against the explicit
    matrix-product construction.
    """
    ma, mb, mc = params._arm_masses
    m_arm = params.arm_mass
    mount = params._mount
    if m_arm <= 0.0:
        return mount.copy()
    la, lb, lc = params._arm_lengths
    c1, s1 = math.cos(q[0]), math.sin(q[0])
    s2, c2 = math.sin(q[1]), math.cos(q[1])
    q23 = q[1] + q[2]
    s23, c23 = math.sin(q23), math.cos(q23)
    # unit directions of the three links in the body frame
    d1x, d1y, d1z = 0.0, 0.0, -1.0
    d2x, d2y, d2z = -s2 * c1, -s2 * s1, -c2
    d3x, d3y, d3z = -s23 * c1, -s23 * s1, -c23
    # midpoint of link k sits at mount + sum(full links before) + half link k
    w1 = ma * 0.5 * la
    w2x = mb * (la * d1x + 0.5 * lb * d2x)
    w2y = mb * (la * d1y + 0.5 * lb * d2y)
    w2z = mb * (la * d1z + 0.5 * lb * d2z)
    w3x = mc * (la * d1x + lb * d2x + 0.5 * lc * d3x)
    w3y = mc * (la * d1y + lb * d2y + 0.5 * lc * d3y)
    w3z = mc * (la * d1z + lb * d2z + 0.5 * lc * d3z)
    return np.array([
        mount[0] + (w1 * d1x + w2x + w3x) / m_arm,
        mount[1] + (w1 * d1y + w2y + w3y) / m_arm,
        mount[2] + (w1 * d1z + w2z + w3z) / m_arm,
    ])


def _clamp_norm(v: np.ndarray, limit: float) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n <= limit or n == 0.0:
        return v
    return v * (limit / n)


def coupling_wrench(state: VehicleState, q_ddot, params: VehicleParams,
                    h: float = 0.002) -> CouplingWrench:
    """Quasi-static arm reaction on the base, clamped to the configured bounds.

    Moment: gravity acting on the offset arm CoM, mapped through J^-1 to an
    angular acceleration. Force: reaction to the arm CoM acceleration,
    estimated by a second-order difference of the CoM position across one
    integration step of length ``h``.
    """
    m_arm = params.arm_mass
    if m_arm <= 0.0:
        return CouplingWrench.zero()
    q = state.arm_angles
    q_dot = state.arm_rates
    q_ddot = np.asarray(q_ddot, dtype=float)
    r_com = arm_com_body(q, params)
    g_body = state.attitude[2, :] * (params.gravity * m_arm)   # R^T (m g e3)
    moment = _cross(r_com, g_body) / params._j_diag

    half = 0.5 * q_ddot * h * h
    q_prev = q - q_dot * h + half
    q_next = q + q_dot * h + half
    r_dd = (arm_com_body(q_prev, params) - 2.0 * r_com + arm_com_body(q_next, params)) / (h * h)
    m_total = total_mass(params, state.payload_attached)
    force = -(m_arm / m_total) * (state.attitude @ r_dd)

    return CouplingWrench(_clamp_norm(force, params.force_max),
                          _clamp_norm(moment, params.moment_max))


class ArmCoupling:
    """Default coupling source: the quasi-static model above."""

    def __init__(self, fd_step: float = 0.002):
        self.fd_step = fd_step

    def wrench(self, t, state, q_ddot, params) -> CouplingWrench:
        return coupling_wrench(state, q_ddot, params, h=self.fd_step)


class MultiSineDisturbance:
    """Seeded, bounded, smooth pseudo-random wrench (the "random" switch).

    Each of the six channels is a normalized sum of sinusoids, so the signal
    is deterministic in (seed, t), C-infinity (RK4-friendly) and bounded by
    the configured amplitudes; outputs are additionally norm-clamped to the
    params bounds like every other coupling source.
    """

    def __init__(self, seed: int, force_amp: float, moment_amp: float,
                 n_components: int = 3, freq_range=(0.1, 2.0)):
        rng = np.random.default_rng(seed)
        self.force_amp = float(force_amp)
        self.moment_amp = float(moment_amp)
        self._omega = 2.0 * math.pi * rng.uniform(*freq_range, size=(6, n_components))
        self._phase = rng.uniform(0.0, 2.0 * math.pi, size=(6, n_components))
        w = rng.uniform(0.5, 1.0, size=(6, n_components))
        self._weights = w / w.sum(axis=1, keepdims=True)

    def wrench(self, t, state, q_ddot, params) -> CouplingWrench:
        s = (self._weights * np.sin(self._omega * t + self._phase)).sum(axis=1)
        force = self.force_amp * s[:3]
        moment = self.moment_amp * s[3:]
        return CouplingWrench(_clamp_norm(force, params.force_max),
                              _clamp_norm(moment, params.moment_max))


class CompositeCoupling:
    """Sum of coupling sources (e.g. arm model plus a pulse), clamped jointly."""

    def __init__(self, *sources):
        self.sources = list(sources)

    def wrench(self, t, state, q_ddot, params) -> CouplingWrench:
        force = np.zeros(3)
        moment = np.zeros(3)
        for s in self.sources:
            w = s.wrench(t, state, q_ddot, params)
            force = force + w.force
            moment = moment + w.moment
        return CouplingWrench(_clamp_norm(force, params.force_max),
                              _clamp_norm(moment, params.moment_max))


class ConstantWrench:
    """Fixed wrench active on a time window; used for pulse events."""

    def __init__(self, force, moment, t_start=0.0, duration=math.inf):
        self.force = _vec3(force)
        self.moment = _vec3(moment)
        self.t_start = float(t_start)
        self.duration = float(duration)

    def wrench(self, t, state, q_ddot, params) -> CouplingWrench:
        if self.t_start <= t < self.t_start + self.duration:
            return CouplingWrench(self.force, self.moment)
        return CouplingWrench.zero()


def derivatives(state: VehicleState, inputs: ControlInputs, params: VehicleParams,
                t: float = 0.0, coupling=None) -> StateDerivative:
    """Right-hand side of the coupled model.

    xd = v
    vd = g e3 - (f/m) R e3 + F_a
    Rd = R hat(Omega)
    Od = -J^-1 (Omega x J Omega) + J^-1 tau + T
    plus the per-joint PD arm dynamics.
    """
    if not (np.isfinite(inputs.thrust) and np.isfinite(inputs.torque).all()
            and np.isfinite(inputs.arm_commands).all()):
        raise ValueError("non-finite control inputs")
    if inputs.thrust < 0:
        raise ValueError("thrust must be non-negative")
    if coupling is None:
        coupling = _DEFAULT_COUPLING

    m_total = total_mass(params, state.payload_attached)
    f = min(inputs.thrust, params.thrust_limit(state.payload_attached))
    q_ddot = arm_joint_accel(state.arm_angles, state.arm_rates, inputs.arm_commands, params)
    w = coupling.wrench(t, state, q_ddot, params)

    r = state.attitude
    omega = state.body_rates
    j_diag = params._j_diag
    v_dot = params.gravity * E3 - (f / m_total) * r[:, 2] + w.force
    r_dot = r @ hat(omega)
    omega_dot = (-_cross(omega, j_diag * omega) + inputs.torque) / j_diag + w.moment
    return StateDerivative(state.velocity, v_dot, r_dot, omega_dot,
                           state.arm_rates, q_ddot)


_DEFAULT_COUPLING = ArmCoupling()


def hover_state(params: VehicleParams, position=(0.0, 0.0, 0.0), yaw: float = 0.0,
                payload_attached: bool = False) -> VehicleState:
    """Level rest state at ``position`` with the arm stowed."""
    return VehicleState.make(position=position, attitude=_rot_z(yaw),
                             payload_attached=payload_attached)


def hover_inputs(params: VehicleParams, payload_attached: bool = False) -> ControlInputs:
    return ControlInputs.make(thrust=total_mass(params, payload_attached) * params.gravity)


def with_payload(state: VehicleState, attached: bool) -> VehicleState:
    """Instantaneous mass step; applied between integration steps."""
    return replace(state, payload_attached=attached)
