import time
from math import pi

import numpy as np
import pytest
from scipy.linalg import lstsq

from morphusv.control import (TABLE_III, NmpcConfig, NmpcController, PidState, ShootingProblem,
                              allocate_forces, build_reference, control_effort, hold_reference,
                              move_reference, nmpc_step, pid_step, polyline_reference, retune,
                              shooting_cost, shooting_gradient, tracking_metrics, ziegler_nichols)
from morphusv.control.reference import hourglass_vertices, segment_intersections, square_vertices
from morphusv.errors import ConfigError, MisalignedError
from morphusv.vessel.params import TABLE_II, eval_params, thruster_arm
from morphusv.vessel.propulsion import allocation_matrix

P0 = eval_params(TABLE_II, 0.0)
ARM0 = thruster_arm(0.0)
CFG = NmpcConfig()


# references

def test_circle_period():
    ref = build_reference("circle", 1.5, 0.2)
    assert ref.duration == pytest.approx(2 * pi * 1.5 / 0.2, abs=0.1)
    assert ref.duration == pytest.approx(47.12, abs=0.1)
    assert np.allclose(ref.q[0, :2], ref.q[-1, :2], atol=1e-9)


def test_square_corners_equally_spaced():
    ref = build_reference("square", 2.0, 0.2)
    assert len(ref.corners) == 3  # interior vertices; the fourth corner closes the lap
    events = ref.corners + [ref.duration]
    assert np.allclose(np.diff([0.0] + events), 10.0)
    assert np.allclose(ref.q[-1, :2], [0.0, 0.0])


def test_hourglass_single_self_intersection():
    v = hourglass_vertices(1.5)
    pts = segment_intersections(v)
    assert len(pts) == 1 and np.allclose(pts[0], [0.0, 0.0])
    assert segment_intersections(square_vertices(2.0)) == []


def test_reference_window_holds_end():
    ref = move_reference((0, 0, 0), (1, 0, 0), 0.5)
    win = ref.window(ref.t[-1] - 0.1, 20)
    assert win.shape == (21, 6)
    assert np.allclose(win[2:, :3], [1, 0, 0]) and np.all(win[2:, 3:] == 0)


def test_reference_body_velocities():
    ref = polyline_reference([[0, 0], [0, 1]], 0.2, heading=0.0)
    assert np.allclose(ref.q[:-1, 3:], [0.0, 0.2, 0.0])


def test_reference_validation():
    with pytest.raises(ValueError):
        build_reference("triangle", 1.0, 0.2)
    with pytest.raises(ValueError):
        build_reference("square", 1.0, 0.0)
    with pytest.raises(ValueError):
        polyline_reference([[0, 0], [0, 0]], 0.2)


# allocation

def test_allocate_symmetric():
    u, res = allocate_forces([2, 2, 0], 0.4435)
    assert np.allclose(u, [1, 1, 1, 1]) and res < 1e-12


def test_allocate_matches_least_squares_solvers():
    rng = np.random.default_rng(0)
    for _ in range(20):
        F = rng.uniform(-3, 3, 3)
        E = allocation_matrix(0.6)
        ref1 = np.linalg.pinv(E) @ F
        ref2 = lstsq(E, F, lapack_driver="gelsd")[0]
        u, _ = allocate_forces(F, 0.6, f_max=100.0)
        assert np.allclose(u, ref1, atol=1e-12) and np.allclose(u, ref2, atol=1e-12)


def test_allocate_zero():
    assert np.array_equal(allocate_forces(np.zeros(3), 0.5)[0], np.zeros(4))


def test_allocate_identity():
    rng = np.random.default_rng(1)
    for _ in range(100):
        arm = thruster_arm(rng.uniform(0, 0.5))
        F = rng.uniform(-2, 2, 3)
        u, _ = allocate_forces(F, arm, f_max=1e9)
        assert np.allclose(allocation_matrix(arm) @ u, F, atol=1e-10)


def test_allocate_clamped_residual():
    u, res = allocate_forces([30, 0, 0], 0.4435)
    assert np.all(np.abs(u) <= 6.0) and res == pytest.approx(18.0)


# PID

def test_pid_zero_error():
    u, st, _ = pid_step(np.zeros(6), np.zeros(6), TABLE_III["contracted"], 0.1, PidState(), ARM0)
    assert np.array_equal(u, np.zeros(4))


def test_pid_forward_offset_proportional():
    q_ref = np.array([0.01, 0, 0, 0, 0, 0])
    u, _, info = pid_step(np.zeros(6), q_ref, TABLE_III["contracted"], 0.1, PidState(), ARM0)
    assert info["force"][0] == pytest.approx(349 * 0.01)
    assert info["force"][1] == 0 and info["force"][2] == 0
    assert np.allclose(allocation_matrix(ARM0) @ u, info["force"])


def test_pid_saturation_freezes_integrator():
    st = PidState(integral=np.array([0.1, 0.0, 0.0]))
    q_ref = np.array([1.0, 0, 0, 0, 0, 0])
    u, st2, info = pid_step(np.zeros(6), q_ref, TABLE_III["contracted"], 0.1, st, ARM0)
    assert info["saturated"] and np.max(np.abs(u)) == 6.0
    assert np.array_equal(st2.integral, st.integral)


def test_pid_integral_clamped():
    g = TABLE_III["contracted"]
    st = PidState()
    for _ in range(200):
        _, st, _ = pid_step(np.zeros(6), [0.001, 0, 0, 0, 0, 0], g, 0.1, st, ARM0)
    assert np.all(np.abs(st.integral) <= g.windup_limit)


def test_pid_yaw_error_wraps():
    q = np.array([0, 0, pi - 0.01, 0, 0, 0])
    q_ref = np.array([0, 0, -pi + 0.01, 0, 0, 0])
    _, _, info = pid_step(q, q_ref, TABLE_III["contracted"], 0.1, PidState(), ARM0)
    assert info["force"][2] == pytest.approx(67 * 0.02)


def test_ziegler_nichols_rule():
    g = ziegler_nichols(10.0, 2.0)
    assert (g.kp, g.ki, g.kd) == pytest.approx((6.0, 6.0, 1.5))


def test_retune_positive_gains():
    g = retune(P0, ARM0, duration=40.0)
    for a in (g.longitudinal, g.lateral, g.rotational):
        assert a.kp > 0 and a.ki > 0 and a.kd > 0


# NMPC

def _random_instance(rng):
    q = np.concatenate([rng.normal(0, 0.3, 3), rng.normal(0, 0.1, 3)])
    ref = move_reference((0, 0, 0), rng.uniform(-1, 1, 3), 0.2).window(0.0, CFG.horizon)
    last_u = rng.uniform(-3, 3, 4)
    return q, ref, last_u


def test_nmpc_at_rest_on_reference():
    ref = hold_reference((1.0, 2.0, 0.3), 5.0).window(0.0, 20)
    sol = nmpc_step(np.array([1.0, 2.0, 0.3, 0, 0, 0]), ref, np.zeros(4), CFG, P0, ARM0)
    assert np.max(np.abs(sol.u)) <= 1e-3 and sol.cost <= 1e-6


def test_nmpc_rate_penalty_monotone():
    rng = np.random.default_rng(0)
    heavy = NmpcConfig(H=tuple(100 * np.array(CFG.H)))
    for _ in range(20):
        q, ref, last_u = _random_instance(rng)
        a = nmpc_step(q, ref, last_u, CFG, P0, ARM0)
        b = nmpc_step(q, ref, last_u, heavy, P0, ARM0)
        assert np.linalg.norm(b.u[0] - last_u) <= np.linalg.norm(a.u[0] - last_u) + 1e-6


def test_nmpc_beats_zero_control():
    rng = np.random.default_rng(1)
    for _ in range(10):
        q, ref, last_u = _random_instance(rng)
        sol = nmpc_step(q, ref, last_u, CFG, P0, ARM0)
        assert sol.cost <= shooting_cost(np.zeros(80), q, ref, last_u, CFG, P0, ARM0) + 1e-9


def test_nmpc_gradient_finite_difference():
    rng = np.random.default_rng(2)
    for _ in range(10):
        q, ref, last_u = _random_instance(rng)
        U = rng.uniform(-5, 5, 80)
        g = shooting_gradient(U, q, ref, last_u, CFG, P0, ARM0)
        h = 1e-5
        fd = np.empty(80)
        for j in range(80):
            e = np.zeros(80)
            e[j] = h
            fd[j] = (shooting_cost(U + e, q, ref, last_u, CFG, P0, ARM0)
                     - shooting_cost(U - e, q, ref, last_u, CFG, P0, ARM0)) / (2 * h)
        assert np.linalg.norm(g - fd) <= 1e-4 * np.linalg.norm(fd)


def test_gauss_newton_consistent_with_jacobian():
    rng = np.random.default_rng(3)
    q, ref, last_u = _random_instance(rng)
    prob = ShootingProblem(q, ref, last_u, CFG, P0, ARM0)
    U = rng.uniform(-5, 5, 80)
    r, J, _ = prob.residual_jacobian(U)
    r2, g, G, _ = prob.gauss_newton(U)
    assert np.allclose(r, r2)
    # the initial-state rows of J are zero, the rest must match
    assert np.allclose(g, J.T @ r, rtol=1e-10, atol=1e-8)
    assert np.allclose(G, J.T @ J, rtol=1e-10, atol=1e-8)


def test_nmpc_bounds_exact():
    rng = np.random.default_rng(4)
    cfg = NmpcConfig.with_f_max(2.0)
    for _ in range(10):
        q, ref, last_u = _random_instance(rng)
        ref = ref.copy()
        ref[:, :2] += 3.0  # far target drives the solver into the bounds
        sol = nmpc_step(q, ref, np.clip(last_u, -2, 2), cfg, P0, ARM0)
        assert np.all(sol.u <= 2.0) and np.all(sol.u >= -2.0)
        assert np.any(np.abs(sol.u) == 2.0)


def test_nmpc_state_bounds_penalised():
    cfg = NmpcConfig(q_max=(np.inf, np.inf, np.inf, 0.1, np.inf, np.inf))
    ref = move_reference((0, 0, 0), (2, 0, 0), 0.3).window(0.0, 20)
    free = nmpc_step(np.zeros(6), ref, np.zeros(4), CFG, P0, ARM0)
    capped = nmpc_step(np.zeros(6), ref, np.zeros(4), cfg, P0, ARM0)
    assert capped.states[:, 3].max() < free.states[:, 3].max()
    assert capped.states[:, 3].max() <= 0.1 + 5e-3


def test_nmpc_solve_time():
    ctl = NmpcController(CFG, build_reference("square", 2.0, 0.2))
    q = np.zeros(6)
    times = []
    for k in range(30):
        t0 = time.perf_counter()
        ctl.command(0.1 * k, q, 0.0, P0, ARM0)
        times.append(time.perf_counter() - t0)
    assert max(times) <= 0.1


def test_nmpc_config_validation():
    with pytest.raises(ConfigError):
        NmpcConfig(horizon=1)
    with pytest.raises(ConfigError):
        NmpcConfig(Q=(1, 1, 1))
    with pytest.raises(ConfigError):
        NmpcConfig(u_min=(1,) * 4, u_max=(0,) * 4)


# metrics

class _Log:
    def __init__(self, t, q, u):
        self.t, self.q, self.u = t, q, u


def _ref():
    return build_reference("square", 1.0, 0.2)


def test_metrics_perfect():
    ref = _ref()
    m = tracking_metrics(_Log(ref.t, ref.q, np.zeros((len(ref.t), 4))), ref)
    assert m["mae_position"] == 0 and m["mae_yaw"] == 0 and m["effort"] == 0


def test_metrics_constant_offset():
    ref = _ref()
    q = ref.q.copy()
    q[:, 0] += 0.06
    q[:, 1] -= 0.08
    m = tracking_metrics(_Log(ref.t, q, np.zeros((len(ref.t), 4))), ref)
    assert m["mae_position"] == pytest.approx(0.1)


def test_metrics_effort():
    t = np.arange(0, 10.0 + 1e-9, 0.02)
    assert control_effort(t, np.ones((len(t), 4))) == pytest.approx(40.0)


def test_metrics_misaligned():
    ref = _ref()
    with pytest.raises(MisalignedError):
        tracking_metrics(_Log(ref.t + 0.05, ref.q, np.zeros((len(ref.t), 4))), ref)
