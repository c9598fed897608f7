"""The headless twin: mirrors /servo and /data into an interpolated state.

Ingest and render may run on different threads; a lock plus immutable samples
guarantee render always sees a consistent snapshot. Wire attitude is Euler
(protocol convention) but interpolation happens on rotations via the relative
axis-angle, so there are no gimbal artifacts between samples.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from . import se3
from .delay import DelayEstimate, estimate_delay
from .protocol import ArmMessage, BridgeFrame, PoseMessage

MAX_EXTRAPOLATION_S = 0.2


class NoDataError(RuntimeError):
    """render_state was called before any telemetry arrived."""


@dataclass(frozen=True)
class _PoseSample:
    t: float
    position: np.ndarray
    rotation: np.ndarray
    velocity: np.ndarray


@dataclass(frozen=True)
class _ArmSample:
    t: float
    joints: np.ndarray
    payload_attached: bool


@dataclass(frozen=True)
class RenderState:
    t: float
    position: np.ndarray
    euler: tuple            # phi, theta, psi
    joints: np.ndarray
    payload_attached: bool
    stale: bool


class Twin:
    def __init__(self):
        self._lock = threading.Lock()
        self._pose: list[_PoseSample] = []     # at most the two most recent
        self._arm: list[_ArmSample] = []
        self._last_seq: dict[str, int] = {}
        self.applied = 0
        self.dropped_stale = 0
        self.rejected = 0

    def apply_telemetry(self, frame: BridgeFrame, t_rx: float | None = None) -> bool:
        """Ingest one /servo or /data publish frame; returns True if applied.

        Frames whose seq is not newer than the current one are counted and
        dropped. The sample time is t_rx when given, else the frame's
        stamp_rx, else stamp_tx.
        """
        if frame.op != "publish" or frame.topic not in ("/servo", "/data"):
            self.rejected += 1
            return False
        t = t_rx if t_rx is not None else (
            frame.stamp_rx if frame.stamp_rx is not None else frame.stamp_tx)
        with self._lock:
            last = self._last_seq.get(frame.topic)
            if last is not None and frame.seq <= last:
                self.dropped_stale += 1
                return False
            self._last_seq[frame.topic] = frame.seq
            if frame.topic == "/servo":
                msg: PoseMessage = frame.msg
                rot = se3.rotation_from_euler(se3.EulerAngles(*msg.euler))
                sample = _PoseSample(float(t), np.asarray(msg.position, dtype=float),
                                     rot, np.asarray(msg.velocity, dtype=float))
                self._pose = (self._pose + [sample])[-2:]
            else:
                msg: ArmMessage = frame.msg
                sample = _ArmSample(float(t), np.asarray(msg.joints, dtype=float),
                                    msg.payload_attached)
                self._arm = (self._arm + [sample])[-2:]
            self.applied += 1
            return True

    def render_state(self, t_query: float) -> RenderState:
        """Pose and joints at t_query.

        Linear interpolation between the two most recent samples, linear
        extrapolation up to MAX_EXTRAPOLATION_S past the last one; beyond
        that the last sample is returned with the stale flag set. Attitude
        interpolates along the shortest arc of the relative rotation.
        """
        with self._lock:
            pose = list(self._pose)
            arm = list(self._arm)
        if not pose and not arm:
            raise NoDataError("no telemetry received yet")

        stale = False
        if pose:
            position, rotation, stale_p = _interp_pose(pose, t_query)
            stale = stale or stale_p
        else:
            position, rotation = np.zeros(3), np.eye(3)
        if arm:
            joints, payload, stale_a = _interp_arm(arm, t_query)
            stale = stale or stale_a
        else:
            joints, payload = np.zeros(3), False

        e = se3.euler_from_rotation(rotation)
        return RenderState(t_query, position, (e.phi, e.theta, e.psi), joints,
                           payload, stale)

    def counters(self) -> dict:
        with self._lock:
            return {"applied": self.applied, "dropped_stale": self.dropped_stale,
                    "rejected": self.rejected}


def _blend(samples, t_query):
    """(older, newer, alpha, stale): alpha may exceed 1 for extrapolation."""
    newest = samples[-1]
    if t_query > newest.t + MAX_EXTRAPOLATION_S:
        return newest, newest, 0.0, True
    if len(samples) == 1:
        return newest, newest, 0.0, False
    older = samples[-2]
    span = newest.t - older.t
    if span <= 0:
        return newest, newest, 0.0, False
    alpha = (t_query - older.t) / span
    return older, newest, max(alpha, 0.0), False


def _interp_pose(samples, t_query):
    a, b, alpha, stale = _blend(samples, t_query)
    if a is b or alpha == 1.0:
        return b.position.copy(), b.rotation.copy(), stale
    if alpha == 0.0:
        return a.position.copy(), a.rotation.copy(), stale
    position = a.position + alpha * (b.position - a.position)
    rel = se3.so3_log(a.rotation.T @ b.rotation)
    rotation = a.rotation @ se3.so3_exp(alpha * rel)
    return position, rotation, stale


def _interp_arm(samples, t_query):
    a, b, alpha, stale = _blend(samples, t_query)
    if a is b or alpha == 1.0:
        return b.joints.copy(), b.payload_attached, stale
    if alpha == 0.0:
        return a.joints.copy(), a.payload_attached, stale
    joints = a.joints + alpha * (b.joints - a.joints)
    payload = b.payload_attached if alpha >= 1.0 else a.payload_attached
    return joints, payload, stale


# ---------------------------------------------------------------------------
# fidelity reporting

@dataclass(frozen=True)
class FidelityReport:
    mean_error_m: float
    max_error_m: float
    delay_s: float
    loss_count: int
    staleness_fraction: float
    samples: int

    def to_json(self) -> str:
        """Canonical JSON (fixed key order, 17 significant digits)."""
        num = lambda x: "%.17g" % x
        return ('{"mean_error_m":%s,"max_error_m":%s,"delay_s":%s,'
                '"loss_count":%d,"staleness_fraction":%s,"samples":%d}'
                % (num(self.mean_error_m), num(self.max_error_m), num(self.delay_s),
                   self.loss_count, num(self.staleness_fraction), self.samples))


def _servo_frames(frames):
    return [f for f in frames if f.op == "publish" and f.topic == "/servo"]


def fidelity_report(robot_frames, twin_frames,
                    estimate: DelayEstimate | None = None) -> FidelityReport:
    """Residual tracking error after aligning the twin trace by the estimated
    delay, plus loss and staleness accounting.

    Alignment reuses the cross-correlation estimator so every latency number
    in the system comes from one place.
    """
    if estimate is None:
        estimate = estimate_delay(robot_frames, twin_frames)
    delay = estimate.lag_xcorr_s

    robot = _servo_frames(robot_frames)
    twin = _servo_frames(twin_frames)
    t_r = np.array([f.stamp_tx for f in robot])
    p_r = np.array([f.msg.position for f in robot])
    t_a = np.array([(f.stamp_rx if f.stamp_rx is not None else f.stamp_tx)
                    for f in twin])
    p_a = np.array([f.msg.position for f in twin])
    order_r = np.argsort(t_r, kind="stable")
    order_a = np.argsort(t_a, kind="stable")
    t_r, p_r = t_r[order_r], p_r[order_r]
    t_a, p_a = t_a[order_a], p_a[order_a]

    # residuals on robot sample times whose aligned twin time is interpolable
    mask = (t_r + delay >= t_a[0]) & (t_r + delay <= t_a[-1])
    errs = []
    for t, p in zip(t_r[mask], p_r[mask]):
        q = np.array([np.interp(t + delay, t_a, p_a[:, ax]) for ax in range(3)])
        errs.append(float(np.linalg.norm(q - p)))
    if not errs:
        raise ValueError("no overlapping window after delay alignment")

    seqs = sorted(f.seq for f in twin)
    loss = (seqs[-1] - seqs[0] + 1 - len(seqs)) if seqs else 0

    gaps = np.diff(t_a)
    window = t_a[-1] - t_a[0]
    stale_time = float(np.sum(np.maximum(gaps - MAX_EXTRAPOLATION_S, 0.0)))
    staleness = stale_time / window if window > 0 else 0.0

    return FidelityReport(float(np.mean(errs)), float(np.max(errs)), float(delay),
                          int(loss), staleness, len(errs))


def write_paired_csv(path, robot_frames, twin_frames, resample_dt: float = 0.02) -> None:
    """Unaligned robot/twin traces on a common grid (a Fig-8-style overlay)."""
    robot = _servo_frames(robot_frames)
    twin = _servo_frames(twin_frames)
    t_r = np.array([f.stamp_tx for f in robot])
    p_r = np.array([f.msg.position for f in robot])
    t_a = np.array([(f.stamp_rx if f.stamp_rx is not None else f.stamp_tx)
                    for f in twin])
    p_a = np.array([f.msg.position for f in twin])
    lo = min(t_r[0], t_a[0])
    hi = max(t_r[-1], t_a[-1])
    grid = np.arange(lo, hi, resample_dt)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,robot_x,robot_y,robot_z,twin_x,twin_y,twin_z\n")
        for t in grid:
            r = [np.interp(t, t_r, p_r[:, ax]) for ax in range(3)]
            a = [np.interp(t, t_a, p_a[:, ax]) for ax in range(3)]
            fh.write(",".join("%.10g" % v for v in (t, *r, *a)) + "\n")
