"""Three-axis PID baseline and minimum-norm thrust allocation."""
from dataclasses import dataclass, field, replace

import numpy as np

from ..vessel.propulsion import F_MAX, allocation, allocation_matrix
from ..vessel.state import wrap_angle

AXES = ("longitudinal", "lateral", "rotational")


@dataclass(frozen=True)
class AxisGains:
    kp: float
    ki: float
    kd: float

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError(f"PID gains must be nonnegative: {self}")


@dataclass(frozen=True)
class PidGains:
    """Per-axis gains for one hull form, plus the integral clamp."""

    longitudinal: AxisGains
    lateral: AxisGains
    rotational: AxisGains
    windup_limit: float = 1.0

    def as_arrays(self):
        g = (self.longitudinal, self.lateral, self.rotational)
        return (np.array([a.kp for a in g]), np.array([a.ki for a in g]),
                np.array([a.kd for a in g]))


# Ziegler-Nichols tuned gains of the prototype, one set per extreme form
TABLE_III = {
    "contracted": PidGains(AxisGains(349, 1.4, 0.9), AxisGains(349, 1.5, 1.0), AxisGains(67, 1.6, 1.1)),
    "expanded": PidGains(AxisGains(433, 1.4, 0.9), AxisGains(349, 1.6, 1.1), AxisGains(107, 1.5, 1.0)),
}


def allocate_forces(force, arm, f_max=F_MAX):
    """Minimum-norm thruster forces for a desired ``[Fx, Fy, Mz]``, then clamped.

    Uses ``u = E'(E E')^-1 F``; for this layout ``E E' = diag(2, 2, 4 L^2)``.
    Returns ``(u, residual)`` with ``residual = |E u_clamped - F|``.
    """
    force = np.asarray(force, dtype=float)
    E = allocation_matrix(arm)
    u = E.T @ np.linalg.solve(E @ E.T, force)
    u_c = np.clip(u, -f_max, f_max)
    return u_c, float(np.linalg.norm(allocation(u_c, arm) - force))


@dataclass
class PidState:
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_error: np.ndarray = None
    derivative: np.ndarray = field(default_factory=lambda: np.zeros(3))


def body_errors(q, q_ref):
    """Longitudinal/lateral error in the body frame and the wrapped yaw error."""
    c, s = np.cos(q[2]), np.sin(q[2])
    dx, dy = q_ref[0] - q[0], q_ref[1] - q[1]
    return np.array([c * dx + s * dy, -s * dx + c * dy, wrap_angle(q_ref[2] - q[2])])


def pid_step(q, q_ref, gains, dt, state, arm, f_max=F_MAX, filter_tau=None):
    """One control period of the three independent PID loops.

    The integral contributes its value from previous periods; it is advanced
    afterwards unless a thruster saturates (conditional integration), and is
    clamped to ``gains.windup_limit``. The derivative of the error is low-pass
    filtered with time constant ``filter_tau`` (default ``2 dt``).

    Returns ``(u, new_state, info)``; ``info["force"]`` is the pre-saturation demand.
    """
    kp, ki, kd = gains.as_arrays()
    e = body_errors(q, q_ref)
    tau = 2.0 * dt if filter_tau is None else filter_tau
    if state.prev_error is None:
        deriv = np.zeros(3)
    else:
        raw = (e - state.prev_error) / dt
        raw[2] = wrap_angle(e[2] - state.prev_error[2]) / dt
        a = dt / (tau + dt)
        deriv = state.derivative + a * (raw - state.derivative)
    force = kp * e + ki * state.integral + kd * deriv
    E = allocation_matrix(arm)
    u_raw = E.T @ np.linalg.solve(E @ E.T, force)
    saturated = bool(np.any(np.abs(u_raw) > f_max))
    u = np.clip(u_raw, -f_max, f_max)
    integral = state.integral
    if not saturated:
        lim = gains.windup_limit
        integral = np.clip(state.integral + e * dt, -lim, lim)
    new = PidState(integral=integral, prev_error=e, derivative=deriv)
    return u, new, {"force": force, "saturated": saturated}


class PidController:
    """PID baseline; picks the contracted or expanded gain set from the expansion."""

    name = "pid"

    def __init__(self, gains=None, reference=None, dt=0.1, f_max=F_MAX, switch_at=0.25):
        self.gains = gains or TABLE_III
        self.reference = reference
        self.dt = dt
        self.f_max = f_max
        self.switch_at = switch_at
        self.reset()

    def reset(self):
        self.state = PidState()

    def set_reference(self, reference):
        self.reference = reference

    def gains_for(self, expansion):
        return self.gains["expanded" if expansion >= self.switch_at else "contracted"]

    def command(self, t, q, expansion, params, arm):
        q_ref = self.reference.at(t)
        u, self.state, info = pid_step(q, q_ref, self.gains_for(expansion), self.dt,
                                       self.state, arm, self.f_max)
        return u, {"saturated": info["saturated"]}


def ziegler_nichols(ku, tu):
    """Classic Ziegler-Nichols PID rule from ultimate gain and period."""
    kp = 0.6 * ku
    return AxisGains(kp, 1.2 * ku / tu, 0.075 * ku * tu)


def relay_ultimate(axis, params, arm, relay=3.0, dt=0.1, substeps=5, duration=60.0, f_max=F_MAX):
    """Estimate ultimate gain and period of one axis with a relay experiment.

    The sampled loop (zero-order hold at ``dt``) is driven by a relay of
    amplitude ``relay`` [N or N m]; after the transient, ``Ku = 4 d / (pi a)``
    and ``Tu`` is the mean oscillation period.
    """
    from .. import kernels
    from ..vessel.dynamics import param_vector

    p = param_vector(params)
    idx = {"longitudinal": 0, "lateral": 1, "rotational": 2}[axis]
    E = allocation_matrix(arm)
    pinv = E.T @ np.linalg.inv(E @ E.T)
    q = np.zeros(6)
    err_hist = []
    n = int(duration / dt)
    for _ in range(n):
        e = body_errors(q, np.zeros(6))[idx]
        demand = np.zeros(3)
        demand[idx] = relay if e > 0 else -relay
        u = np.clip(pinv @ demand, -f_max, f_max)
        for _ in range(substeps):
            q = kernels.rk4_step(q, u, p, arm, dt / substeps, np.zeros(3))
        err_hist.append(e)
    tail = np.array(err_hist[n // 2:])
    amp = 0.5 * (tail.max() - tail.min())
    crossings = np.flatnonzero(np.diff(np.sign(tail)) > 0)
    if len(crossings) < 2 or amp <= 0:
        raise RuntimeError(f"relay experiment on {axis} did not oscillate")
    tu = float(np.mean(np.diff(crossings))) * dt
    ku = 4.0 * relay / (np.pi * amp)
    return ku, tu


def retune(params, arm, relay=3.0, **kw):
    """Ziegler-Nichols gains for all three axes from relay experiments."""
    axes = {a: ziegler_nichols(*relay_ultimate(a, params, arm, relay, **kw)) for a in AXES}
    return PidGains(**axes)


def with_windup(gains, limit):
    return replace(gains, windup_limit=limit)
