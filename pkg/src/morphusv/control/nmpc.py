"""Nonlinear MPC by single shooting with a Gauss-Newton SQP.

Decision variables are the N thruster-force vectors of the horizon. States are
predicted with one RK4 step per control interval; their exact first-order
sensitivities come from the integration kernel. Each SQP iteration solves a
box-constrained QP (projected Newton) and accepts the step by backtracking on
the true cost, so every iterate satisfies the thrust bounds exactly.

Cost over the horizon, with ``e_q = q - q_ref`` (yaw difference wrapped) and
``e_u(k) = u(k) - u(k-1)`` (``u(-1)`` is the last applied command)::

    J = sum_{k<N} e_q(k)' Q e_q(k) + e_q(N)' Q_N e_q(N) + sum_{k<N} e_u(k)' H e_u(k)
"""
from dataclasses import dataclass, field
from functools import lru_cache
from math import radians
from time import perf_counter

import numpy as np

from .. import kernels
from ..errors import ConfigError
from ..vessel.dynamics import param_vector
from ..vessel.propulsion import F_MAX
from ..vessel.state import wrap_angle

Q_DEFAULT = (8000.0, 8000.0, 4000.0, 0.01, 0.01, 0.01)
H_DEFAULT = (0.01, 0.01, 0.01, 0.01)


@dataclass(frozen=True)
class NmpcConfig:
    horizon: int = 20
    dt: float = 0.1
    Q: tuple = Q_DEFAULT
    H: tuple = H_DEFAULT
    QN: tuple = Q_DEFAULT
    q_min: tuple = (-np.inf,) * 6
    q_max: tuple = (np.inf,) * 6
    u_min: tuple = (-F_MAX,) * 4
    u_max: tuple = (F_MAX,) * 4
    pos_threshold: float = 0.05
    yaw_threshold: float = radians(5.0)
    max_iter: int = 12
    warm_start: bool = True
    state_penalty: float = 1e6
    tol: float = 1e-6

    def __post_init__(self):
        if self.horizon < 2:
            raise ConfigError("horizon must be at least 2", key="nmpc.horizon")
        if not self.dt > 0:
            raise ConfigError("must be positive", key="nmpc.dt")
        for name, n in (("Q", 6), ("H", 4), ("QN", 6)):
            w = np.asarray(getattr(self, name), dtype=float)
            if w.shape != (n,) or np.any(w <= 0):
                raise ConfigError(f"must be {n} positive diagonal weights", key=f"nmpc.{name}")
        if np.any(np.asarray(self.u_min) > np.asarray(self.u_max)):
            raise ConfigError("infeasible control bounds u_min > u_max", key="nmpc.u_min")
        if np.any(np.asarray(self.q_min) > np.asarray(self.q_max)):
            raise ConfigError("infeasible state bounds q_min > q_max", key="nmpc.q_min")
        if self.max_iter < 1:
            raise ConfigError("must be at least 1", key="nmpc.max_iter")

    @classmethod
    def with_f_max(cls, f_max, **kw):
        return cls(u_min=(-f_max,) * 4, u_max=(f_max,) * 4, **kw)


@dataclass
class NmpcSolution:
    u: np.ndarray            # (N, 4) optimal sequence
    states: np.ndarray       # (N+1, 6) predicted states
    cost: float
    iterations: int
    stationarity: float      # infinity norm of the projected gradient
    status: str              # "converged" | "max_iter"
    solve_time: float = 0.0
    history: list = field(default_factory=list)

    @property
    def first(self):
        return self.u[0]


@lru_cache(maxsize=32)
def _structure(cfg):
    """Weights, bounds and the constant input-increment Jacobian of one configuration."""
    n = cfg.horizon
    wq = np.tile(np.sqrt(np.asarray(cfg.Q, dtype=float)), (n + 1, 1))
    wq[n] = np.sqrt(np.asarray(cfg.QN, dtype=float))
    wu = np.sqrt(np.asarray(cfg.H, dtype=float))
    q_min = np.asarray(cfg.q_min, dtype=float)
    q_max = np.asarray(cfg.q_max, dtype=float)
    # e_u = D U - [last_u, 0, ...]; D is block lower bidiagonal
    d = np.eye(4 * n)
    d[np.arange(4, 4 * n), np.arange(0, 4 * n - 4)] = -1.0
    du_jac = np.tile(wu, n)[:, None] * d
    out = {"wq": wq, "wu": wu, "q_min": q_min, "q_max": q_max,
           "lo": np.tile(np.asarray(cfg.u_min, dtype=float), n),
           "hi": np.tile(np.asarray(cfg.u_max, dtype=float), n),
           "has_state_bounds": bool(np.any(np.isfinite(q_min)) or np.any(np.isfinite(q_max))),
           "du_jac": du_jac, "du_gram": du_jac.T @ du_jac}
    for v in out.values():
        if isinstance(v, np.ndarray):
            v.setflags(write=False)
    return out


class ShootingProblem:
    """Residual form ``J(U) = |r(U)|^2`` of the horizon cost for one solve."""

    def __init__(self, q0, ref, last_u, cfg, params, arm):
        self.q0 = np.asarray(q0, dtype=float)
        self.ref = np.asarray(ref, dtype=float)
        if self.ref.shape != (cfg.horizon + 1, 6):
            raise ValueError(f"reference window must be ({cfg.horizon + 1}, 6), got {self.ref.shape}")
        self.last_u = np.asarray(last_u, dtype=float)
        self.cfg = cfg
        self.p = param_vector(params)
        self.arm = float(arm)
        self.n = cfg.horizon
        st = _structure(cfg)
        self.wq, self.wu, self.lo, self.hi = st["wq"], st["wu"], st["lo"], st["hi"]
        self.q_min, self.q_max = st["q_min"], st["q_max"]
        self.has_state_bounds = st["has_state_bounds"]
        self.du_jac, self.du_gram = st["du_jac"], st["du_gram"]

    def _state_residual(self, Q):
        e = Q - self.ref
        e[:, 2] = wrap_angle(e[:, 2])
        return e

    def residual(self, U, Q=None):
        U = np.asarray(U, dtype=float).reshape(self.n, 4)
        if Q is None:
            Q = kernels.rollout(self.q0, U, self.p, self.arm, self.cfg.dt, 1)
        e = self._state_residual(Q)
        du = np.diff(np.vstack([self.last_u, U]), axis=0)
        parts = [(self.wq * e).ravel(), (self.wu * du).ravel()]
        if self.has_state_bounds:
            parts.append(self._bound_violation(Q).ravel())
        return np.concatenate(parts), Q

    def _bound_violation(self, Q):
        over = np.maximum(Q[1:] - self.q_max, 0.0) + np.minimum(Q[1:] - self.q_min, 0.0)
        return np.sqrt(self.cfg.state_penalty) * over

    def residual_jacobian(self, U):
        U = np.asarray(U, dtype=float).reshape(self.n, 4)
        Q, S = kernels.rollout_sensitivity(self.q0, U, self.p, self.arm, self.cfg.dt)
        r, _ = self.residual(U, Q)
        n = self.n
        Jq = (self.wq[:, :, None] * S.reshape(n + 1, 6, 4 * n)).reshape(6 * (n + 1), 4 * n)
        blocks = [Jq, self.du_jac]
        if self.has_state_bounds:
            active = (Q[1:] > self.q_max) | (Q[1:] < self.q_min)
            Jb = np.sqrt(self.cfg.state_penalty) * S[1:].reshape(n, 6, 4 * n) * active[:, :, None]
            blocks.append(Jb.reshape(6 * n, 4 * n))
        return r, np.vstack(blocks), Q

    def gauss_newton(self, U):
        """Residual, half gradient ``J'r``, Gauss-Newton matrix ``J'J`` and the predicted states."""
        U = np.asarray(U, dtype=float).reshape(self.n, 4)
        Q, S = kernels.rollout_sensitivity(self.q0, U, self.p, self.arm, self.cfg.dt)
        r, _ = self.residual(U, Q)
        n = self.n
        m = 6 * (n + 1)
        Jq = (self.wq[1:, :, None] * S[1:].reshape(n, 6, 4 * n)).reshape(6 * n, 4 * n)
        G = Jq.T @ Jq + self.du_gram
        g = Jq.T @ r[6:m] + self.du_jac.T @ r[m:m + 4 * n]
        if self.has_state_bounds:
            active = (Q[1:] > self.q_max) | (Q[1:] < self.q_min)
            Jb = (np.sqrt(self.cfg.state_penalty) * S[1:].reshape(n, 6, 4 * n)
                  * active[:, :, None]).reshape(6 * n, 4 * n)
            G += Jb.T @ Jb
            g += Jb.T @ r[m + 4 * n:]
        return r, g, G, Q

    def cost(self, U):
        r, _ = self.residual(U)
        return float(r @ r)

    def gradient(self, U):
        r, J, _ = self.residual_jacobian(U)
        return 2.0 * (J.T @ r)


def shooting_cost(U, q0, ref, last_u, cfg, params, arm):
    return ShootingProblem(q0, ref, last_u, cfg, params, arm).cost(U)


def shooting_gradient(U, q0, ref, last_u, cfg, params, arm):
    return ShootingProblem(q0, ref, last_u, cfg, params, arm).gradient(U)


def box_qp(G, g, lo, hi, x0=None, max_iter=50, tol=1e-10):
    """Minimise ``0.5 x'Gx + g'x`` subject to ``lo <= x <= hi`` (G positive definite).

    Projected Newton with projected backtracking, run by the active kernel
    backend. Returns ``(x, iterations)``.
    """
    return kernels.box_qp(G, g, lo, hi, x0, max_iter, tol)


def nmpc_step(q, ref_window, last_u, cfg, params, arm, u_init=None):
    """Solve one horizon problem; only ``solution.u[0]`` is meant to be applied."""
    t_start = perf_counter()
    prob = ShootingProblem(q, ref_window, last_u, cfg, params, arm)
    n = cfg.horizon
    if u_init is None:
        U = np.zeros(4 * n)
    else:
        U = np.asarray(u_init, dtype=float).reshape(4 * n)
    U = np.clip(U, prob.lo, prob.hi)

    status = "max_iter"
    history = []
    stationarity = np.inf
    iterations = 0
    r, g, G, Q = prob.gauss_newton(U)  # g is half the cost gradient
    cost = float(r @ r)
    for iterations in range(1, cfg.max_iter + 1):
        pg = U - np.clip(U - g, prob.lo, prob.hi)
        stationarity = 2.0 * float(np.max(np.abs(pg)))
        history.append(cost)
        if stationarity <= 1e-8 * max(1.0, cost):
            status = "converged"
            iterations -= 1
            break
        G.flat[::len(G) + 1] += 1e-10 * (1.0 + np.trace(G) / len(G))
        delta, _ = box_qp(G, g, prob.lo - U, prob.hi - U)
        predicted = -(g @ delta + 0.5 * delta @ G @ delta)
        if predicted <= cfg.tol * max(1.0, cost):
            status = "converged"
            break
        alpha = 1.0
        accepted = False
        for _ in range(12):
            U_try = np.clip(U + alpha * delta, prob.lo, prob.hi)
            r_try, _ = prob.residual(U_try)
            c_try = float(r_try @ r_try)
            if c_try <= cost - 1e-4 * alpha * 2.0 * predicted:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            status = "converged"  # no descent left at machine precision
            break
        rel = (cost - c_try) / max(cost, 1e-300)
        U = U_try
        r, g, G, Q = prob.gauss_newton(U)
        cost = float(r @ r)
        if rel < cfg.tol:
            status = "converged"
            break
    else:
        pg = U - np.clip(U - g, prob.lo, prob.hi)
        stationarity = 2.0 * float(np.max(np.abs(pg)))

    U = np.clip(U, prob.lo, prob.hi).reshape(n, 4)
    return NmpcSolution(U, Q, cost, iterations, stationarity, status,
                        perf_counter() - t_start, history)


class NmpcController:
    """Receding-horizon wrapper: warm starts, last-command memory, diagnostics."""

    name = "nmpc"

    def __init__(self, cfg=None, reference=None):
        self.cfg = cfg or NmpcConfig()
        self.reference = reference
        self.reset()

    def reset(self):
        self.last_u = np.zeros(4)
        self._prev = None
        self.last_solution = None

    def set_reference(self, reference):
        self.reference = reference

    def command(self, t, q, expansion, params, arm):
        cfg = self.cfg
        ref = self.reference.window(t, cfg.horizon)
        init = None
        if cfg.warm_start and self._prev is not None:
            init = np.vstack([self._prev[1:], self._prev[-1:]])
        sol = nmpc_step(q, ref, self.last_u, cfg, params, arm, u_init=init)
        self._prev = sol.u
        self.last_u = sol.u[0].copy()
        self.last_solution = sol
        info = {"cost": sol.cost, "iterations": sol.iterations,
                "stationarity": sol.stationarity, "status": sol.status,
                "solve_time": sol.solve_time}
        return self.last_u.copy(), info


def target_reached(q, target, pos_threshold, yaw_threshold):
    """Termination test: position and yaw errors below their thresholds."""
    dp = np.hypot(q[0] - target[0], q[1] - target[1])
    return bool(dp < pos_threshold and abs(wrap_angle(q[2] - target[2])) < yaw_threshold)
