"""Delay injection and one-way-delay estimation.

The delay line is time-explicit (push/pop take timestamps), so it works both
under a wall clock in the live bridge and under a virtual clock in tests.
Estimation combines two independent routes: trace cross-correlation of the
position signals and stamp differencing of matched frames; their disagreement
is reported rather than hidden.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np



class InsufficientExcitationError(ValueError):
    """Position signal too flat to estimate a lag from."""


class DelayLine:
    """FIFO channel releasing items delay + jitter*u seconds after entry.

    u is uniform in [-1, 1] from a seeded generator; release times are
    monotonized so reordering is impossible by construction.
    """

    def __init__(self, delay_s: float, jitter_s: float = 0.0, seed: int = 0):
        if delay_s < 0:
            raise ValueError("delay must be non-negative")
        if jitter_s < 0:
            raise ValueError("jitter must be non-negative")
        self.delay_s = float(delay_s)
        self.jitter_s = float(jitter_s)
        self._rng = np.random.default_rng(seed)
        self._queue: deque = deque()
        self._last_release = -math.inf

    def push(self, t_in: float, item) -> float:
        """Queue an item that entered at t_in; returns its release time."""
        jitter = self.jitter_s * float(self._rng.uniform(-1.0, 1.0)) if self.jitter_s else 0.0
        release = max(t_in + self.delay_s + jitter, self._last_release)
        self._last_release = release
        self._queue.append((release, item))
        return release

    def pop_ready(self, now: float) -> list:
        """All items whose release time has passed, in FIFO order."""
        out = []
        while self._queue and self._queue[0][0] <= now:
            out.append(self._queue.popleft()[1])
        return out

    def next_release(self) -> float | None:
        return self._queue[0][0] if self._queue else None

    def __len__(self) -> int:
        return len(self._queue)


# ---------------------------------------------------------------------------
# estimation

@dataclass(frozen=True)
class DelayEstimate:
    lag_xcorr_s: float            # combined cross-correlation estimate
    per_axis_lag_s: tuple         # (x, y, z); nan where axis lacked excitation
    mean_owd_s: float | None      # stamp_rx - stamp_tx over matched seq
    p95_owd_s: float | None
    matched_frames: int
    disagreement_s: float | None  # |xcorr - mean stamp delay|
    resample_dt_s: float


def _pose_series(frames, use_rx: bool):
    ts, ps = [], []
    for f in frames:
        if f.op != "publish" or f.topic != "/servo":
            continue
        if use_rx:
            # receive stamps when the capture has them, else the tx stamps
            t = f.stamp_rx if f.stamp_rx is not None else f.stamp_tx
        else:
            t = f.stamp_tx
        ts.append(float(t))
        ps.append(f.msg.position)
    if not ts:
        raise ValueError("no /servo publish frames in capture")
    t = np.asarray(ts)
    p = np.asarray(ps)
    order = np.argsort(t, kind="stable")
    return t[order], p[order]


def _xcorr_lag(x: np.ndarray, y: np.ndarray, dt: float, max_lag_s: float) -> float | None:
    """Lag (s) maximizing the normalized correlation of y against x shifted
    forward; parabolic refinement around the discrete peak. None if flat."""
    x = x - x.mean()
    y = y - y.mean()
    if float(np.std(x)) < 1e-6 or float(np.std(y)) < 1e-6:
        return None
    n = len(x)
    k_max = min(int(round(max_lag_s / dt)), n - 2)
    k_min = -min(int(round(0.25 * max_lag_s / dt)), n - 2)
    lags = range(k_min, k_max + 1)
    rho = np.full(len(lags), -np.inf)
    for i, k in enumerate(lags):
        if k >= 0:
            a, b = x[: n - k], y[k:]
        else:
            a, b = x[-k:], y[: n + k]
        if len(a) < 8:
            continue
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na < 1e-12 or nb < 1e-12:
            continue
        rho[i] = float(np.dot(a, b) / (na * nb))
    best = int(np.argmax(rho))
    if not np.isfinite(rho[best]):
        return None
    k_best = k_min + best
    # sub-sample parabolic fit through the peak and its neighbors
    if 0 < best < len(rho) - 1 and np.isfinite(rho[best - 1]) and np.isfinite(rho[best + 1]):
        y0, y1, y2 = rho[best - 1], rho[best], rho[best + 1]
        denom = y0 - 2.0 * y1 + y2
        if abs(denom) > 1e-12:
            frac = 0.5 * (y0 - y2) / denom
            if abs(frac) <= 1.0:
                return (k_best + frac) * dt
    return k_best * dt


def estimate_delay(robot_frames, avatar_frames, resample_dt: float | None = None,
                   max_lag_s: float = 2.5, min_std_m: float = 1e-3) -> DelayEstimate:
    """One-way delay between a robot-side and a mirror-side /servo capture.

    Cross-correlates each position axis on a common uniform grid (robot uses
    stamp_tx, mirror uses stamp_rx) and weights the per-axis lags by signal
    variance; separately averages stamp_rx - stamp_tx over seq-matched frames.
    Raises InsufficientExcitationError when no axis moves more than
    ``min_std_m``.
    """
    t_r, p_r = _pose_series(robot_frames, use_rx=False)
    t_a, p_a = _pose_series(avatar_frames, use_rx=True)

    if len(t_r) < 8 or len(t_a) < 8:
        raise ValueError("captures too short to estimate a delay")
    if resample_dt is None:
        resample_dt = float(np.median(np.diff(t_r)))
        if not (resample_dt > 0):
            raise ValueError("robot capture timestamps are not increasing")

    lo = max(t_r[0], t_a[0])
    hi = min(t_r[-1], t_a[-1])
    if hi - lo < 10 * resample_dt:
        raise ValueError("captures do not overlap long enough")
    grid = np.arange(lo, hi, resample_dt)

    per_axis = []
    weights = []
    for ax in range(3):
        xr = np.interp(grid, t_r, p_r[:, ax])
        xa = np.interp(grid, t_a, p_a[:, ax])
        std = float(np.std(xr))
        if std < min_std_m:
            per_axis.append(math.nan)
            weights.append(0.0)
            continue
        lag = _xcorr_lag(xr, xa, resample_dt, max_lag_s)
        if lag is None:
            per_axis.append(math.nan)
            weights.append(0.0)
        else:
            per_axis.append(lag)
            weights.append(std * std)
    if sum(weights) <= 0.0:
        raise InsufficientExcitationError(
            "insufficient excitation: no position axis moved more than "
            f"{min_std_m} m in the overlap window")
    lag_combined = float(np.average([l for l in per_axis if not math.isnan(l)],
                                    weights=[w for w in weights if w > 0.0]))

    # stamp-based route over seq-matched frames
    tx_by_seq = {f.seq: f.stamp_tx for f in robot_frames
                 if f.op == "publish" and f.topic == "/servo"}
    owds = [f.stamp_rx - tx_by_seq[f.seq] for f in avatar_frames
            if f.op == "publish" and f.topic == "/servo"
            and f.stamp_rx is not None and f.seq in tx_by_seq]
    if owds:
        mean_owd = float(np.mean(owds))
        p95_owd = float(np.percentile(owds, 95))
        disagreement = abs(lag_combined - mean_owd)
    else:
        mean_owd = p95_owd = disagreement = None

    return DelayEstimate(lag_combined, tuple(per_axis), mean_owd, p95_owd,
                         len(owds), disagreement, resample_dt)
