"""Continuous planar dynamics and the fixed-step RK4 integrator.

    eta_dot = R(psi) v
    M v_dot + C(v) v + D v = F,   F = E u (+ disturbance)

with ``M = diag(m1, m2, m3)``, ``D = diag(Xu, Yv, Nr)`` and the skew-symmetric
Coriolis/centripetal matrix ``C(v)``.
"""
import numpy as np

from .. import kernels
from ..errors import NumericalError, ParameterError
from .params import HydroParams
from .state import VesselState, wrap_angle

STATE_NAMES = ("x", "y", "psi", "u", "v", "r")
_ZERO3 = np.zeros(3)


def param_vector(params):
    """Coerce HydroParams or a 6-sequence to a validated ``[m1, m2, m3, Xu, Yv, Nr]`` array."""
    if isinstance(params, HydroParams):
        return params.as_array()
    p = np.asarray(params, dtype=float)
    if p.shape != (6,):
        raise ParameterError(f"expected 6 parameters, got shape {p.shape}")
    if np.any(p[:3] <= 0.0):
        raise ParameterError(f"mass matrix is singular or indefinite: {p[:3]}")
    return p


def mass_matrix(params):
    p = param_vector(params)
    return np.diag(p[:3])


def damping_matrix(params):
    p = param_vector(params)
    return np.diag(p[3:])


def coriolis_matrix(vel, params):
    u, v, _ = vel
    m1, m2 = param_vector(params)[:2]
    return np.array([
        [0.0, 0.0, -m2 * v],
        [0.0, 0.0, m1 * u],
        [m2 * v, -m1 * u, 0.0],
    ])


def kinetic_energy(vel, params):
    m = param_vector(params)[:3]
    vel = np.asarray(vel, dtype=float)
    return 0.5 * float(np.sum(m * vel * vel))


def _as_q(state):
    if isinstance(state, VesselState):
        return state.as_array()
    return np.asarray(state, dtype=float)


def dynamics_derivative(state, u, params, arm, disturbance=None):
    """State derivative ``dq/dt`` (6-vector) for thruster forces ``u``."""
    p = param_vector(params)
    d = _ZERO3 if disturbance is None else np.asarray(disturbance, dtype=float)
    return kernels.qdot(_as_q(state), np.asarray(u, dtype=float), p, float(arm), d)


def integrate_rk4(state, u, params, arm, dt, disturbance=None):
    """Advance one classical RK4 step with the controls held constant.

    Accepts a VesselState (returns one, expansion unchanged) or a raw 6-vector
    (returns an array). Yaw is wrapped after the step.
    """
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    q = _as_q(state)
    if dt == 0:
        return state if isinstance(state, VesselState) else q.copy()
    p = param_vector(params)
    d = _ZERO3 if disturbance is None else np.asarray(disturbance, dtype=float)
    q_next = kernels.rk4_step(q, np.asarray(u, dtype=float), p, float(arm), float(dt), d)
    bad = ~np.isfinite(q_next)
    if bad.any():
        names = ", ".join(STATE_NAMES[i] for i in np.flatnonzero(bad))
        raise NumericalError(f"non-finite state after RK4 step in component(s): {names}")
    q_next[2] = wrap_angle(q_next[2])
    if isinstance(state, VesselState):
        return VesselState.from_array(q_next, state.expansion)
    return q_next
