# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Mirrors ``_pykernels`` call for call."""
from libc.math cimport cos, fabs, sin, sqrt
from libc.string cimport memset

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"


cdef inline void _f(const double* q, const double* uc, const double* p, double arm,
                    const double* d, double* out) noexcept nogil:
    cdef double c = cos(q[2])
    cdef double s = sin(q[2])
    cdef double u = q[3]
    cdef double v = q[4]
    cdef double r = q[5]
    cdef double fx = uc[1] + uc[3] + d[0]
    cdef double fy = uc[0] + uc[2] + d[1]
    cdef double mz = arm * (uc[2] + uc[3] - uc[0] - uc[1]) + d[2]
    out[0] = c * u - s * v
    out[1] = s * u + c * v
    out[2] = r
    out[3] = (fx + p[1] * v * r - p[3] * u) / p[0]
    out[4] = (fy - p[0] * u * r - p[4] * v) / p[1]
    out[5] = (mz - (p[1] - p[0]) * u * v - p[5] * r) / p[2]


cdef inline void _rk4(double* q, const double* uc, const double* p, double arm,
                      double h, const double* d) noexcept nogil:
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double tmp[6]
    cdef int i
    _f(q, uc, p, arm, d, k1)
    for i in range(6):
        tmp[i] = q[i] + 0.5 * h * k1[i]
    _f(tmp, uc, p, arm, d, k2)
    for i in range(6):
        tmp[i] = q[i] + 0.5 * h * k2[i]
    _f(tmp, uc, p, arm, d, k3)
    for i in range(6):
        tmp[i] = q[i] + h * k3[i]
    _f(tmp, uc, p, arm, d, k4)
    for i in range(6):
        q[i] = q[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def qdot(q, u, p, double arm, d):
    cdef double qq[6]
    cdef double uu[4]
    cdef double pp[6]
    cdef double dd[3]
    cdef double out[6]
    cdef int i
    for i in range(6):
        qq[i] = q[i]
        pp[i] = p[i]
    for i in range(4):
        uu[i] = u[i]
    for i in range(3):
        dd[i] = d[i]
    _f(qq, uu, pp, arm, dd, out)
    return np.array([out[0], out[1], out[2], out[3], out[4], out[5]])


def rk4_step(q, u, p, double arm, double dt, d):
    cdef double qq[6]
    cdef double uu[4]
    cdef double pp[6]
    cdef double dd[3]
    cdef int i
    for i in range(6):
        qq[i] = q[i]
        pp[i] = p[i]
    for i in range(4):
        uu[i] = u[i]
    for i in range(3):
        dd[i] = d[i]
    _rk4(qq, uu, pp, arm, dt, dd)
    return np.array([qq[0], qq[1], qq[2], qq[3], qq[4], qq[5]])


def rollout(q0, U, p, double arm, double dt, int substeps):
    cdef double[:, ::1] uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    out_arr = np.empty((n + 1, 6))
    cdef double[:, ::1] out = out_arr
    cdef double q[6]
    cdef double pp[6]
    cdef double zero[3]
    cdef double h = dt / substeps
    cdef Py_ssize_t k
    cdef int i, s
    zero[0] = zero[1] = zero[2] = 0.0
    for i in range(6):
        q[i] = q0[i]
        pp[i] = p[i]
        out[0, i] = q[i]
    with nogil:
        for k in range(n):
            for s in range(substeps):
                _rk4(q, &uv[k, 0], pp, arm, h, zero)
            for i in range(6):
                out[k + 1, i] = q[i]
    return out_arr


cdef inline void _jac_q(const double* q, const double* p, double* a) noexcept nogil:
    # row-major 6x6
    cdef double c = cos(q[2])
    cdef double s = sin(q[2])
    cdef double u = q[3]
    cdef double v = q[4]
    cdef double r = q[5]
    memset(a, 0, 36 * sizeof(double))
    a[0 * 6 + 2] = -s * u - c * v
    a[0 * 6 + 3] = c
    a[0 * 6 + 4] = -s
    a[1 * 6 + 2] = c * u - s * v
    a[1 * 6 + 3] = s
    a[1 * 6 + 4] = c
    a[2 * 6 + 5] = 1.0
    a[3 * 6 + 3] = -p[3] / p[0]
    a[3 * 6 + 4] = p[1] * r / p[0]
    a[3 * 6 + 5] = p[1] * v / p[0]
    a[4 * 6 + 3] = -p[0] * r / p[1]
    a[4 * 6 + 4] = -p[4] / p[1]
    a[4 * 6 + 5] = -p[0] * u / p[1]
    a[5 * 6 + 3] = -(p[1] - p[0]) * v / p[2]
    a[5 * 6 + 4] = -(p[1] - p[0]) * u / p[2]
    a[5 * 6 + 5] = -p[5] / p[2]


cdef inline void _stage(const double* a, const double* dprev_q, const double* dprev_u,
                        double scale, const double* b, double* dq, double* du) noexcept nogil:
    # dq = a (I + scale*dprev_q), du = scale * a dprev_u + b
    cdef int i, j, m
    cdef double acc
    for i in range(6):
        for j in range(6):
            acc = a[i * 6 + j]
            for m in range(6):
                acc += scale * a[i * 6 + m] * dprev_q[m * 6 + j]
            dq[i * 6 + j] = acc
        for j in range(4):
            acc = b[i * 4 + j]
            for m in range(6):
                acc += scale * a[i * 6 + m] * dprev_u[m * 4 + j]
            du[i * 4 + j] = acc


cdef void _rk4_jac(double* q, const double* uc, const double* p, double arm, double h,
                   const double* b, double* jq, double* ju) noexcept nogil:
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double tmp[6]
    cdef double a[36]
    cdef double zq[36]
    cdef double zu[24]
    cdef double d1q[36]
    cdef double d1u[24]
    cdef double d2q[36]
    cdef double d2u[24]
    cdef double d3q[36]
    cdef double d3u[24]
    cdef double d4q[36]
    cdef double d4u[24]
    cdef double zero[3]
    cdef int i, j
    zero[0] = zero[1] = zero[2] = 0.0
    memset(zq, 0, 36 * sizeof(double))
    memset(zu, 0, 24 * sizeof(double))

    _f(q, uc, p, arm, zero, k1)
    _jac_q(q, p, a)
    _stage(a, zq, zu, 0.0, b, d1q, d1u)
    for i in range(6):
        tmp[i] = q[i] + 0.5 * h * k1[i]
    _f(tmp, uc, p, arm, zero, k2)
    _jac_q(tmp, p, a)
    _stage(a, d1q, d1u, 0.5 * h, b, d2q, d2u)
    for i in range(6):
        tmp[i] = q[i] + 0.5 * h * k2[i]
    _f(tmp, uc, p, arm, zero, k3)
    _jac_q(tmp, p, a)
    _stage(a, d2q, d2u, 0.5 * h, b, d3q, d3u)
    for i in range(6):
        tmp[i] = q[i] + h * k3[i]
    _f(tmp, uc, p, arm, zero, k4)
    _jac_q(tmp, p, a)
    _stage(a, d3q, d3u, h, b, d4q, d4u)

    for i in range(6):
        q[i] = q[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        for j in range(6):
            jq[i * 6 + j] = h / 6.0 * (d1q[i * 6 + j] + 2.0 * d2q[i * 6 + j]
                                       + 2.0 * d3q[i * 6 + j] + d4q[i * 6 + j])
        jq[i * 6 + i] += 1.0
        for j in range(4):
            ju[i * 4 + j] = h / 6.0 * (d1u[i * 4 + j] + 2.0 * d2u[i * 4 + j]
                                       + 2.0 * d3u[i * 4 + j] + d4u[i * 4 + j])


def rollout_sensitivity(q0, U, p, double arm, double dt):
    cdef double[:, ::1] uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    Q_arr = np.empty((n + 1, 6))
    S_arr = np.zeros((n + 1, 6, n, 4))
    cdef double[:, ::1] Q = Q_arr
    cdef double[:, :, :, ::1] S = S_arr
    cdef double q[6]
    cdef double pp[6]
    cdef double b[24]
    cdef double jq[36]
    cdef double ju[24]
    cdef Py_ssize_t k, j
    cdef int i, m, c
    cdef double acc
    for i in range(6):
        q[i] = q0[i]
        pp[i] = p[i]
        Q[0, i] = q[i]
    memset(b, 0, 24 * sizeof(double))
    b[3 * 4 + 1] = 1.0 / pp[0]
    b[3 * 4 + 3] = 1.0 / pp[0]
    b[4 * 4 + 0] = 1.0 / pp[1]
    b[4 * 4 + 2] = 1.0 / pp[1]
    b[5 * 4 + 0] = -arm / pp[2]
    b[5 * 4 + 1] = -arm / pp[2]
    b[5 * 4 + 2] = arm / pp[2]
    b[5 * 4 + 3] = arm / pp[2]
    with nogil:
        for k in range(n):
            _rk4_jac(q, &uv[k, 0], pp, arm, dt, b, jq, ju)
            for i in range(6):
                Q[k + 1, i] = q[i]
            for j in range(k):
                for i in range(6):
                    for c in range(4):
                        acc = 0.0
                        for m in range(6):
                            acc += jq[i * 6 + m] * S[k, m, j, c]
                        S[k + 1, i, j, c] = acc
            for i in range(6):
                for c in range(4):
                    S[k + 1, i, k, c] = ju[i * 4 + c]
    return Q_arr, S_arr


cdef double _quad(const double[:, ::1] G, const double* x, const double* g, Py_ssize_t n) noexcept nogil:
    # 0.5 x'Gx + g'x
    cdef double f = 0.0, acc
    cdef Py_ssize_t i, j
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += G[i, j] * x[j]
        f += x[i] * (0.5 * acc + g[i])
    return f


cdef int _chol_solve(double* a, double* b, Py_ssize_t m) noexcept nogil:
    # in-place lower Cholesky of the m x m row-major a, then b <- a^-1 b; 0 on success
    cdef Py_ssize_t i, j, k
    cdef double s, acc
    for j in range(m):
        s = a[j * m + j]
        for k in range(j):
            s -= a[j * m + k] * a[j * m + k]
        if not s > 0.0:
            return -1
        s = sqrt(s)
        a[j * m + j] = s
        for i in range(j + 1, m):
            acc = a[i * m + j]
            for k in range(j):
                acc -= a[i * m + k] * a[j * m + k]
            a[i * m + j] = acc / s
    for i in range(m):
        s = b[i]
        for k in range(i):
            s -= a[i * m + k] * b[k]
        b[i] = s / a[i * m + i]
    for i in range(m - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, m):
            s -= a[k * m + i] * b[k]
        b[i] = s / a[i * m + i]
    return 0


def box_qp(G, g, lo, hi, x0=None, int max_iter=50, double tol=1e-10):
    cdef double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = gv.shape[0]
    x_arr = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    x_arr = np.minimum(np.maximum(x_arr, lo), hi)
    cdef double[::1] x = x_arr
    cdef double[::1] grad = np.empty(n)
    cdef double[::1] d = np.empty(n)
    cdef double[::1] xn = np.empty(n)
    cdef double[::1] rhs = np.empty(n)
    cdef double[::1] a = np.empty(n * n)
    cdef Py_ssize_t[::1] free = np.empty(n, dtype=np.intp)
    cdef double scale = 1.0, pgmax, eps, t, f0, fn, alpha, slope, dmax
    cdef Py_ssize_t i, j, m
    cdef int it = 0
    with nogil:
        for i in range(n):
            if fabs(gv[i]) > scale:
                scale = fabs(gv[i])
        for it in range(1, max_iter + 1):
            pgmax = 0.0
            for i in range(n):
                t = gv[i]
                for j in range(n):
                    t += Gv[i, j] * x[j]
                grad[i] = t
                t = x[i] - grad[i]
                if t < lov[i]:
                    t = lov[i]
                elif t > hiv[i]:
                    t = hiv[i]
                t = fabs(x[i] - t)
                if t > pgmax:
                    pgmax = t
            if pgmax <= tol * scale:
                break
            eps = 0.5 * pgmax
            if eps > 1e-9:
                eps = 1e-9
            m = 0
            for i in range(n):
                d[i] = 0.0
                if not ((x[i] <= lov[i] + eps and grad[i] > 0) or (x[i] >= hiv[i] - eps and grad[i] < 0)):
                    free[m] = i
                    m += 1
            if m > 0:
                for i in range(m):
                    rhs[i] = grad[free[i]]
                    for j in range(m):
                        a[i * m + j] = Gv[free[i], free[j]]
                if _chol_solve(&a[0], &rhs[0], m) == 0:
                    for i in range(m):
                        d[free[i]] = -rhs[i]
                else:
                    for i in range(m):
                        t = Gv[free[i], free[i]]
                        if t < 1e-12:
                            t = 1e-12
                        d[free[i]] = -grad[free[i]] / t
            f0 = _quad(Gv, &x[0], &gv[0], n)
            alpha = 1.0
            while True:
                slope = 0.0
                for i in range(n):
                    t = x[i] + alpha * d[i]
                    if t < lov[i]:
                        t = lov[i]
                    elif t > hiv[i]:
                        t = hiv[i]
                    xn[i] = t
                    slope += grad[i] * (t - x[i])
                fn = _quad(Gv, &xn[0], &gv[0], n)
                if fn <= f0 + 1e-4 * slope or alpha < 1e-10:
                    break
                alpha *= 0.5
            dmax = 0.0
            for i in range(n):
                t = fabs(xn[i] - x[i])
                if t > dmax:
                    dmax = t
                x[i] = xn[i]
            if dmax < 1e-14:
                break
    return np.asarray(x_arr), it
