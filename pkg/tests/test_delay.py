import math

import numpy as np
import pytest

from twinlift.delay import (DelayLine, InsufficientExcitationError, estimate_delay)
from twinlift.protocol import BridgeFrame, PoseMessage


def _servo(seq, t, pos, rx=None):
    return BridgeFrame("publish", "/servo", seq, t,
                       PoseMessage(tuple(pos), (0, 0, 0), (0, 0, 0)), stamp_rx=rx)


def _trace(fn, t0=0.0, t1=20.0, rate=50.0, shift=0.0, rx_shift=None):
    """Synthetic /servo capture: position fn(t), stamped at t+shift."""
    frames = []
    for i, t in enumerate(np.arange(t0, t1, 1.0 / rate)):
        rx = None if rx_shift is None else t + rx_shift
        frames.append(_servo(i, t + shift, fn(t), rx=rx))
    return frames


def _wiggle(t):
    return (0.5 * math.sin(2 * math.pi * 0.2 * t),
            0.3 * math.sin(2 * math.pi * 0.31 * t + 1.0),
            -1.0 + 0.2 * math.sin(2 * math.pi * 0.13 * t))


class TestDelayLine:
    def test_zero_delay_pass_through(self):
        line = DelayLine(0.0)
        for i in range(5):
            assert line.push(i * 0.1, i) == pytest.approx(i * 0.1)
        assert line.pop_ready(0.41) == [0, 1, 2, 3, 4]

    def test_fixed_delay_release_times(self):
        # closed-form oracle: release = t_in + delay
        line = DelayLine(0.5)
        releases = [line.push(t, t) for t in (0.0, 0.02, 0.04)]
        assert releases == pytest.approx([0.5, 0.52, 0.54])
        assert line.pop_ready(0.51) == [0.0]
        assert line.pop_ready(0.55) == [0.02, 0.04]

    def test_jitter_preserves_fifo(self):
        line = DelayLine(0.1, jitter_s=0.09, seed=3)
        items = list(range(200))
        for i in items:
            line.push(i * 0.001, i)   # pushes 1 ms apart, jitter 90 ms
        out = line.pop_ready(math.inf)
        assert out == items

    def test_jitter_deterministic_for_seed(self):
        a = DelayLine(0.2, jitter_s=0.05, seed=11)
        b = DelayLine(0.2, jitter_s=0.05, seed=11)
        ra = [a.push(i * 0.01, i) for i in range(50)]
        rb = [b.push(i * 0.01, i) for i in range(50)]
        assert ra == rb

    def test_jitter_bounded(self):
        line = DelayLine(0.5, jitter_s=0.1, seed=1)
        for i in range(500):
            r = line.push(i * 1.0, i)
            assert 0.4 - 1e-12 <= r - i * 1.0 <= 0.6 + 1e-12

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            DelayLine(-0.1)
        with pytest.raises(ValueError):
            DelayLine(0.1, jitter_s=-1)


class TestEstimateDelay:
    def test_identical_logs_zero_lag(self):
        robot = _trace(_wiggle)
        avatar = _trace(_wiggle, rx_shift=0.0)
        est = estimate_delay(robot, avatar)
        assert abs(est.lag_xcorr_s) <= est.resample_dt_s
        assert est.mean_owd_s == pytest.approx(0.0, abs=1e-12)

    def test_half_second_shift_recovered(self):
        robot = _trace(_wiggle)
        avatar = _trace(_wiggle, rx_shift=0.5)
        est = estimate_delay(robot, avatar)
        assert est.lag_xcorr_s == pytest.approx(0.5, abs=est.resample_dt_s)
        assert est.mean_owd_s == pytest.approx(0.5, abs=1e-9)
        assert est.p95_owd_s == pytest.approx(0.5, abs=1e-9)
        assert est.disagreement_s < est.resample_dt_s

    @pytest.mark.parametrize("shift", [0.05, 0.1, 0.3, 0.7, 1.0, 1.5, 2.0])
    def test_shift_sweep_within_one_resample_interval(self, shift):
        robot = _trace(_wiggle, t1=30.0)
        avatar = _trace(_wiggle, t1=30.0, rx_shift=shift)
        est = estimate_delay(robot, avatar)
        assert est.lag_xcorr_s == pytest.approx(shift, abs=est.resample_dt_s)

    def test_constant_position_raises(self):
        flat = lambda t: (0.0, 0.0, -1.0)
        robot = _trace(flat)
        avatar = _trace(flat, rx_shift=0.5)
        with pytest.raises(InsufficientExcitationError):
            estimate_delay(robot, avatar)

    def test_single_axis_excitation_is_enough(self):
        fn = lambda t: (math.sin(0.8 * t), 0.0, -1.0)
        robot = _trace(fn)
        avatar = _trace(fn, rx_shift=0.25)
        est = estimate_delay(robot, avatar)
        assert est.lag_xcorr_s == pytest.approx(0.25, abs=est.resample_dt_s)
        assert math.isnan(est.per_axis_lag_s[1])
        assert math.isnan(est.per_axis_lag_s[2])

    def test_too_short_capture_rejected(self):
        robot = _trace(_wiggle, t1=0.1)
        avatar = _trace(_wiggle, t1=0.1, rx_shift=0.0)
        with pytest.raises(ValueError, match="short|overlap"):
            estimate_delay(robot, avatar)

    def test_missing_rx_stamps_skip_owd_route(self):
        robot = _trace(_wiggle)
        avatar = _trace(_wiggle, shift=0.5)   # tx-stamped mirror, no stamp_rx
        est = estimate_delay(robot, avatar)
        assert est.mean_owd_s is None
        assert est.lag_xcorr_s == pytest.approx(0.5, abs=est.resample_dt_s)
