import math

import numpy as np
import pytest

from twinlift.control import (ControlGains, ControlSetpoint, ControllerMemory,
                              attitude_errors, attitude_torque, control_step,
                              default_gains, desired_attitude, force_vector,
                              position_errors, thrust_magnitude)
from twinlift.dynamics import VehicleParams, VehicleState, hover_state, total_mass
from twinlift.se3 import EulerAngles, is_rotation, rotation_from_euler, so3_exp


def _rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


class TestGains:
    def test_scalar_broadcast(self):
        g = ControlGains.make(k_p=2.0, k_v=(1, 2, 3), k_r=6.0, k_omega=0.5)
        assert np.array_equal(g.k_p, [2, 2, 2])
        assert np.array_equal(g.k_v, [1, 2, 3])
        assert np.array_equal(g.k_r, [6, 6, 6])

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            ControlGains.make(k_p=0.0, k_v=1, k_r=1, k_omega=1)
        with pytest.raises(ValueError):
            ControlGains.make(k_p=(1, -1, 1), k_v=1, k_r=1, k_omega=1)


class TestPositionErrors:
    def test_zero_at_setpoint(self):
        p = VehicleParams()
        s = hover_state(p, (1, 2, 3))
        sp = ControlSetpoint.make(position=(1, 2, 3))
        e_p, e_v = position_errors(s, sp)
        assert np.array_equal(e_p, np.zeros(3))
        assert np.array_equal(e_v, np.zeros(3))

    def test_arithmetic(self):
        s = VehicleState.make(position=(1, 2, 3), velocity=(0.5, 0, 0))
        sp = ControlSetpoint.make(position=(0, 2, 3), velocity=(0.5, 0, 0))
        e_p, e_v = position_errors(s, sp)
        assert np.array_equal(e_p, [1, 0, 0])
        assert np.array_equal(e_v, np.zeros(3))

    def test_antisymmetry(self):
        a = VehicleState.make(position=(1, -2, 0.5), velocity=(0.1, 0.2, -0.3))
        b = VehicleState.make(position=(-1, 0, 2), velocity=(0, 1, 0))
        sp_a = ControlSetpoint.make(position=a.position, velocity=a.velocity)
        sp_b = ControlSetpoint.make(position=b.position, velocity=b.velocity)
        e_p1, e_v1 = position_errors(a, sp_b)
        e_p2, e_v2 = position_errors(b, sp_a)
        assert np.allclose(e_p1, -e_p2)
        assert np.allclose(e_v1, -e_v2)


class TestForceVector:
    def test_hover_direction(self):
        p = VehicleParams()
        f = force_vector(np.zeros(3), np.zeros(3), np.zeros(3), p, default_gains())
        assert np.allclose(f, [0, 0, p.gravity])

    def test_arithmetic(self):
        p = VehicleParams()
        g = ControlGains.make(k_p=(2, 2, 2), k_v=1, k_r=1, k_omega=1)
        f = force_vector((1, 0, 0), np.zeros(3), np.zeros(3), p, g)
        assert np.allclose(f, [2, 0, 9.81])

    def test_free_fall_command_degenerates(self):
        p = VehicleParams()
        f = force_vector(np.zeros(3), np.zeros(3), (0, 0, p.gravity), p, default_gains())
        assert np.linalg.norm(f) < 1e-12


class TestThrustMagnitude:
    def test_hover_no_payload(self):
        p = VehicleParams()
        f = thrust_magnitude((0, 0, 9.81), p, payload_attached=False)
        assert f == pytest.approx(16.1865)

    def test_hover_with_160g_payload(self):
        p = VehicleParams()
        f = thrust_magnitude((0, 0, 9.81), p, payload_attached=True)
        assert f == pytest.approx(17.7561)

    def test_zero_force(self):
        assert thrust_magnitude(np.zeros(3), VehicleParams(), False) == 0.0

    def test_clamped_to_limit(self):
        p = VehicleParams()
        f = thrust_magnitude((0, 0, 1000.0), p, False)
        assert f == p.thrust_limit(False)


class TestDesiredAttitude:
    def test_level_hover(self):
        r = desired_attitude((0, 0, 9.81), 0.0)
        assert np.allclose(r, np.eye(3), atol=1e-15)

    def test_pure_yaw_matches_euler_matrix(self):
        r = desired_attitude((0, 0, 9.81), math.pi / 2)
        oracle = rotation_from_euler(EulerAngles(0, 0, math.pi / 2))
        assert np.allclose(r, oracle, atol=1e-15)

    def test_orthonormal_and_aligned(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            f = rng.uniform(-3, 3, 3) + np.array([0, 0, 9.81])
            yaw = rng.uniform(-math.pi, math.pi)
            r = desired_attitude(f, yaw)
            assert is_rotation(r, tol=1e-9)
            b3 = r[:, 2]
            assert np.allclose(b3, f / np.linalg.norm(f), atol=1e-9)

    def test_degenerate_force_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            desired_attitude((0, 0, 1e-9), 0.0)

    def test_parallel_yaw_reference_rejected(self):
        with pytest.raises(ValueError, match="parallel"):
            desired_attitude((9.81, 0, 0), 0.0)


class TestAttitudeErrors:
    def test_zero_when_aligned(self):
        r = _rz(0.4)
        e_r, e_o = attitude_errors(r, (0.1, 0, 0), r, (0.1, 0, 0))
        assert np.allclose(e_r, np.zeros(3), atol=1e-15)
        assert np.allclose(e_o, np.zeros(3), atol=1e-15)

    def test_yaw_error_is_sine(self):
        theta = 0.3
        e_r, _ = attitude_errors(_rz(theta), np.zeros(3), np.eye(3), np.zeros(3))
        assert np.allclose(e_r, [0, 0, math.sin(theta)], atol=1e-12)
        assert e_r[2] == pytest.approx(0.29552020666133955, abs=1e-12)

    def test_swap_negates(self):
        a = so3_exp((0.2, -0.1, 0.5))
        b = so3_exp((-0.3, 0.4, 0.1))
        e1, _ = attitude_errors(a, np.zeros(3), b, np.zeros(3))
        e2, _ = attitude_errors(b, np.zeros(3), a, np.zeros(3))
        assert np.allclose(e1, -e2, atol=1e-14)

    def test_norm_bounded_by_one(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = so3_exp(rng.uniform(-math.pi, math.pi, 3))
            b = so3_exp(rng.uniform(-math.pi, math.pi, 3))
            e_r, _ = attitude_errors(a, np.zeros(3), b, np.zeros(3))
            assert np.linalg.norm(e_r) <= 1.0 + 1e-12

    def test_zero_error_implies_equal_rotation(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            w = rng.uniform(-0.7, 0.7, 3)   # geodesic distance < pi/2
            r_d = so3_exp(rng.uniform(-math.pi, math.pi, 3))
            r = r_d @ so3_exp(w)
            e_r, _ = attitude_errors(r, np.zeros(3), r_d, np.zeros(3))
            if np.linalg.norm(e_r) < 1e-12:
                assert np.abs(r - r_d).max() < 1e-9

    def test_rate_error_frame_transport(self):
        r, r_d = np.eye(3), _rz(0.5)
        omega, omega_d = np.array([0.1, 0.2, 0.3]), np.array([0.0, 0.0, 1.0])
        _, e_o = attitude_errors(r, omega, r_d, omega_d)
        assert np.allclose(e_o, omega - r.T @ r_d @ omega_d)


class TestAttitudeTorque:
    def test_zero_errors(self):
        tau = attitude_torque(np.zeros(3), np.zeros(3), default_gains())
        assert np.array_equal(tau, np.zeros(3))

    def test_arithmetic(self):
        g = ControlGains.make(k_p=1, k_v=1, k_r=2.0, k_omega=1)
        tau = attitude_torque((0, 0, 0.5), np.zeros(3), g)
        assert np.allclose(tau, [0, 0, -1.0])

    def test_linearity_in_kr(self):
        e_r = np.array([0.1, -0.2, 0.3])
        g1 = ControlGains.make(k_p=1, k_v=1, k_r=2.0, k_omega=1)
        g2 = ControlGains.make(k_p=1, k_v=1, k_r=4.0, k_omega=1)
        assert np.allclose(attitude_torque(e_r, np.zeros(3), g2),
                           2 * attitude_torque(e_r, np.zeros(3), g1))

    def test_linearity_in_error(self):
        g = default_gains()
        e_r = np.array([0.1, -0.2, 0.3])
        assert np.allclose(attitude_torque(3 * e_r, np.zeros(3), g),
                           3 * attitude_torque(e_r, np.zeros(3), g))


class TestControlStep:
    def test_hover_equilibrium(self):
        p = VehicleParams()
        s = hover_state(p, (0, 0, -1))
        sp = ControlSetpoint.make(position=(0, 0, -1))
        inputs, _ = control_step(s, sp, p, default_gains())
        assert inputs.thrust == pytest.approx(total_mass(p, False) * p.gravity)
        assert np.allclose(inputs.torque, np.zeros(3), atol=1e-15)

    def test_below_setpoint_raises_thrust(self):
        # 1 m below in NED means e_p = (0,0,1); with K_p=(2,2,2), F=(0,0,11.81)
        p = VehicleParams()
        g = ControlGains.make(k_p=(2, 2, 2), k_v=(2.5, 2.5, 2.5), k_r=6, k_omega=0.6)
        s = hover_state(p, (0, 0, 0))
        sp = ControlSetpoint.make(position=(0, 0, -1))
        inputs, _ = control_step(s, sp, p, g)
        assert inputs.thrust == pytest.approx(total_mass(p, False) * 11.81)

    def test_arm_commands_pass_through(self):
        p = VehicleParams()
        sp = ControlSetpoint.make(position=(0, 0, -1), arm_commands=(0.1, -0.5, 0.25))
        inputs, _ = control_step(hover_state(p, (0, 0, -1)), sp, p, default_gains())
        assert np.array_equal(inputs.arm_commands, [0.1, -0.5, 0.25])

    def test_degenerate_force_holds_previous_attitude(self):
        p = VehicleParams()
        s = hover_state(p)
        prev = ControllerMemory(r_d=_rz(0.7))
        sp = ControlSetpoint.make(accel=(0, 0, p.gravity))   # cancels gravity exactly
        inputs, mem = control_step(s, sp, p, default_gains(), memory=prev)
        assert inputs.thrust == 0.0
        assert np.array_equal(mem.r_d, prev.r_d)

    def test_degenerate_without_memory_uses_identity(self):
        p = VehicleParams()
        sp = ControlSetpoint.make(accel=(0, 0, p.gravity))
        inputs, mem = control_step(hover_state(p), sp, p, default_gains())
        assert np.array_equal(mem.r_d, np.eye(3))
