"""Pure-Python reference kernels.

Same call signatures and results as the compiled ``_ckernels`` module. The
state is ``q = [x, y, psi, u, v, r]``, controls are the four thruster forces
and ``p = [m1, m2, m3, Xu, Yv, Nr]``. Yaw is never wrapped here.
"""
from math import cos, sin

import numpy as np

NAME = "python"


def _f(x, y, psi, u, v, r, f1, f2, f3, f4, m1, m2, m3, xu, yv, nr, arm, dx, dy, dm):
    c = cos(psi)
    s = sin(psi)
    fx = f2 + f4 + dx
    fy = f1 + f3 + dy
    mz = arm * (f3 + f4 - f1 - f2) + dm
    return (
        c * u - s * v,
        s * u + c * v,
        r,
        (fx + m2 * v * r - xu * u) / m1,
        (fy - m1 * u * r - yv * v) / m2,
        (mz - (m2 - m1) * u * v - nr * r) / m3,
    )


def qdot(q, u, p, arm, d):
    return np.array(_f(*q, *u, *p, arm, *d))


def _rk4(q, uc, p, arm, h, d):
    k1 = _f(*q, *uc, *p, arm, *d)
    q2 = [q[i] + 0.5 * h * k1[i] for i in range(6)]
    k2 = _f(*q2, *uc, *p, arm, *d)
    q3 = [q[i] + 0.5 * h * k2[i] for i in range(6)]
    k3 = _f(*q3, *uc, *p, arm, *d)
    q4 = [q[i] + h * k3[i] for i in range(6)]
    k4 = _f(*q4, *uc, *p, arm, *d)
    return [q[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(6)]


def rk4_step(q, u, p, arm, dt, d):
    return np.array(_rk4([float(a) for a in q], [float(a) for a in u],
                         [float(a) for a in p], float(arm), float(dt),
                         [float(a) for a in d]))


def rollout(q0, U, p, arm, dt, substeps):
    """Integrate with zero-order-hold controls ``U`` (N x 4); returns N+1 states."""
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    out = np.empty((n + 1, 6))
    q = [float(a) for a in q0]
    pl = [float(a) for a in p]
    h = float(dt) / substeps
    zero = (0.0, 0.0, 0.0)
    out[0] = q
    for k in range(n):
        uc = U[k].tolist()
        for _ in range(substeps):
            q = _rk4(q, uc, pl, arm, h, zero)
        out[k + 1] = q
    return out


def _jac_q(q, p):
    # d qdot / d q, controls enter affinely so they do not appear here
    _, _, psi, u, v, r = q
    m1, m2, m3, xu, yv, nr = p
    c = cos(psi)
    s = sin(psi)
    a = np.zeros((6, 6))
    a[0, 2] = -s * u - c * v
    a[0, 3] = c
    a[0, 4] = -s
    a[1, 2] = c * u - s * v
    a[1, 3] = s
    a[1, 4] = c
    a[2, 5] = 1.0
    a[3, 3] = -xu / m1
    a[3, 4] = m2 * r / m1
    a[3, 5] = m2 * v / m1
    a[4, 3] = -m1 * r / m2
    a[4, 4] = -yv / m2
    a[4, 5] = -m1 * u / m2
    a[5, 3] = -(m2 - m1) * v / m3
    a[5, 4] = -(m2 - m1) * u / m3
    a[5, 5] = -nr / m3
    return a


def _jac_u(p, arm):
    m1, m2, m3 = p[0], p[1], p[2]
    b = np.zeros((6, 4))
    b[3, 1] = b[3, 3] = 1.0 / m1
    b[4, 0] = b[4, 2] = 1.0 / m2
    b[5, 0] = b[5, 1] = -arm / m3
    b[5, 2] = b[5, 3] = arm / m3
    return b


def _rk4_with_jac(q, uc, p, arm, h):
    """One RK4 step plus its Jacobians with respect to state and control."""
    zero = (0.0, 0.0, 0.0)
    eye = np.eye(6)
    b = _jac_u(p, arm)
    k1 = _f(*q, *uc, *p, arm, *zero)
    a1 = _jac_q(q, p)
    q2 = [q[i] + 0.5 * h * k1[i] for i in range(6)]
    k2 = _f(*q2, *uc, *p, arm, *zero)
    a2 = _jac_q(q2, p)
    q3 = [q[i] + 0.5 * h * k2[i] for i in range(6)]
    k3 = _f(*q3, *uc, *p, arm, *zero)
    a3 = _jac_q(q3, p)
    q4 = [q[i] + h * k3[i] for i in range(6)]
    k4 = _f(*q4, *uc, *p, arm, *zero)
    a4 = _jac_q(q4, p)

    dk1q = a1
    dk1u = b
    dk2q = a2 @ (eye + 0.5 * h * dk1q)
    dk2u = 0.5 * h * (a2 @ dk1u) + b
    dk3q = a3 @ (eye + 0.5 * h * dk2q)
    dk3u = 0.5 * h * (a3 @ dk2u) + b
    dk4q = a4 @ (eye + h * dk3q)
    dk4u = h * (a4 @ dk3u) + b

    qn = [q[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(6)]
    jq = eye + h / 6.0 * (dk1q + 2.0 * dk2q + 2.0 * dk3q + dk4q)
    ju = h / 6.0 * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u)
    return qn, jq, ju


def rollout_sensitivity(q0, U, p, arm, dt):
    """Single-shooting rollout (one RK4 step per interval) with forward sensitivities.

    Returns ``Q`` with shape (N+1, 6) and ``S`` with shape (N+1, 6, N, 4) where
    ``S[k, :, j, :] = d q_k / d u_j``.
    """
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    Q = np.empty((n + 1, 6))
    S = np.zeros((n + 1, 6, n, 4))
    q = [float(a) for a in q0]
    pl = [float(a) for a in p]
    Q[0] = q
    for k in range(n):
        q, jq, ju = _rk4_with_jac(q, U[k].tolist(), pl, float(arm), float(dt))
        Q[k + 1] = q
        if k > 0:
            S[k + 1, :, :k, :] = np.einsum("ab,bjc->ajc", jq, S[k, :, :k, :])
        S[k + 1, :, k, :] = ju
    return Q, S


def box_qp(G, g, lo, hi, x0=None, max_iter=50, tol=1e-10):
    """Minimise ``0.5 x'Gx + g'x`` subject to ``lo <= x <= hi`` (G positive definite).

    Projected Newton: Newton steps on the free set, projected backtracking
    search on the full box. Returns ``(x, iterations)``.
    """
    from scipy.linalg import LinAlgError, cho_factor, cho_solve

    G = np.asarray(G, dtype=float)
    g = np.asarray(g, dtype=float)
    x = np.clip(np.zeros_like(g) if x0 is None else np.array(x0, dtype=float), lo, hi)
    scale = max(1.0, float(np.max(np.abs(g))))
    it = 0
    for it in range(1, max_iter + 1):
        grad = G @ x + g
        pg = x - np.clip(x - grad, lo, hi)
        pgmax = float(np.max(np.abs(pg)))
        if pgmax <= tol * scale:
            break
        eps = min(1e-9, 0.5 * pgmax)
        active = ((x <= lo + eps) & (grad > 0)) | ((x >= hi - eps) & (grad < 0))
        free = np.flatnonzero(~active)
        d = np.zeros_like(x)
        if len(free):
            Gf = G[np.ix_(free, free)]
            try:
                d[free] = -cho_solve(cho_factor(Gf, lower=True, check_finite=False), grad[free],
                                     check_finite=False)
            except LinAlgError:
                d[free] = -grad[free] / np.maximum(np.diag(Gf), 1e-12)
        f0 = x @ (0.5 * (G @ x) + g)
        alpha = 1.0
        while True:
            xn = np.clip(x + alpha * d, lo, hi)
            fn = xn @ (0.5 * (G @ xn) + g)
            if fn <= f0 + 1e-4 * (grad @ (xn - x)) or alpha < 1e-10:
                break
            alpha *= 0.5
        done = np.max(np.abs(xn - x)) < 1e-14
        x = xn
        if done:
            break
    return x, it
