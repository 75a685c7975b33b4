# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch of damped-Newton row solves (hot kernel).

Same contract and status codes as newton_py.newton_rows: independent small
Newton problems sharing one design matrix, Armijo backtracking, optional
offset / weights / proximal term. Problems are solved sequentially with
plain C loops; q is small (a handful of score columns) so the q x q
Cholesky is hand rolled.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p, sqrt

cnp.import_array()

cdef enum:
    KIND_GAUSSIAN = 0
    KIND_BINOMIAL = 1

cdef enum:
    ST_OK = 0
    ST_MAXITER = 1
    ST_STALLED = 2
    ST_HESSIAN = 3

STATUS_OK = ST_OK
STATUS_MAXITER = ST_MAXITER
STATUS_STALLED = ST_STALLED
STATUS_HESSIAN = ST_HESSIAN


cdef inline double _b_val(int kind, double m, double th) noexcept nogil:
    cdef double u
    if kind == KIND_GAUSSIAN:
        return 0.5 * th * th
    u = th / m
    if u > 0:
        return m * (u + log1p(exp(-u)))
    return m * log1p(exp(u))


cdef inline double _b_mean(int kind, double m, double th) noexcept nogil:
    cdef double u, e
    if kind == KIND_GAUSSIAN:
        return th
    u = th / m
    if u >= 0:
        return 1.0 / (1.0 + exp(-u))
    e = exp(u)
    return e / (1.0 + e)


cdef int _cholesky(double[:, ::1] a, int q) noexcept nogil:
    """In-place lower Cholesky; returns nonzero when not positive definite."""
    cdef int i, j, k
    cdef double s
    for j in range(q):
        s = a[j, j]
        for k in range(j):
            s -= a[j, k] * a[j, k]
        if s <= 0.0:
            return 1
        a[j, j] = sqrt(s)
        for i in range(j + 1, q):
            s = a[i, j]
            for k in range(j):
                s -= a[i, k] * a[j, k]
            a[i, j] = s / a[j, j]
    return 0


cdef void _chol_solve(double[:, ::1] l, double[::1] rhs, double[::1] out, int q) noexcept nogil:
    cdef int i, k
    cdef double s
    for i in range(q):
        s = rhs[i]
        for k in range(i):
            s -= l[i, k] * out[k]
        out[i] = s / l[i, i]
    for i in range(q - 1, -1, -1):
        s = out[i]
        for k in range(i + 1, q):
            s -= l[k, i] * out[k]
        out[i] = s / l[i, i]


def newton_rows(x, design, t0, int kind, double trials, offset=None,
                weights=None, double prox_weight=0.0, prox_center=None,
                double grad_tol=1e-8, int max_iter=100, double c1=1e-4,
                double shrink=0.5, double min_step=1e-12):
    x = np.ascontiguousarray(x, dtype=np.float64)
    design = np.ascontiguousarray(design, dtype=np.float64)
    t_out = np.array(t0, dtype=np.float64, copy=True, order="C")
    cdef Py_ssize_t n_prob = x.shape[0]
    cdef Py_ssize_t n_obs = x.shape[1]
    cdef Py_ssize_t q = design.shape[1]
    iters = np.zeros(n_prob, dtype=np.int64)
    status = np.zeros(n_prob, dtype=np.int64)
    if n_prob == 0 or q == 0:
        return t_out, iters, status

    cdef bint has_offset = offset is not None
    cdef bint has_weights = weights is not None
    cdef bint has_center = prox_center is not None and prox_weight > 0.0
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] dv = design
    cdef double[:, ::1] tv = t_out
    cdef double[:, ::1] ov = np.ascontiguousarray(offset, dtype=np.float64) \
        if has_offset else np.zeros((1, 1))
    cdef double[:, ::1] wv = np.ascontiguousarray(weights, dtype=np.float64) \
        if has_weights else np.zeros((1, 1))
    cdef double[:, ::1] cv = np.ascontiguousarray(prox_center, dtype=np.float64) \
        if has_center else np.zeros((1, 1))
    cdef cnp.int64_t[::1] it_v = iters
    cdef cnp.int64_t[::1] st_v = status

    cdef double[::1] theta = np.empty(n_obs)
    cdef double[::1] tcur = np.empty(q)
    cdef double[::1] ttrial = np.empty(q)
    cdef double[::1] grad = np.empty(q)
    cdef double[::1] step_dir = np.empty(q)
    cdef double[:, ::1] hess = np.empty((q, q))

    cdef Py_ssize_t p, i, j, k
    cdef int it
    cdef double gamma = prox_weight
    cdef double m = trials
    cdef double f_cur, f_try, gnorm2, gtd, s, w, r, b2, ridge, diff, th

    with nogil:
        for p in range(n_prob):
            for j in range(q):
                tcur[j] = tv[p, j]
            f_cur = 0.0
            for i in range(n_obs):
                th = ov[p, i] if has_offset else 0.0
                for j in range(q):
                    th += dv[i, j] * tcur[j]
                theta[i] = th
                w = wv[p, i] if has_weights else 1.0
                f_cur += w * (_b_val(kind, m, th) - xv[p, i] * th)
            if has_center:
                for j in range(q):
                    diff = tcur[j] - cv[p, j]
                    f_cur += 0.5 * gamma * diff * diff
            elif gamma > 0.0:
                for j in range(q):
                    f_cur += 0.5 * gamma * tcur[j] * tcur[j]

            st_v[p] = ST_MAXITER
            it_v[p] = max_iter
            for it in range(max_iter):
                # gradient and Hessian at the current point
                for j in range(q):
                    grad[j] = 0.0
                    for k in range(q):
                        hess[j, k] = 0.0
                for i in range(n_obs):
                    w = wv[p, i] if has_weights else 1.0
                    r = w * (_b_mean(kind, m, theta[i]) - xv[p, i])
                    if kind == KIND_GAUSSIAN:
                        b2 = w
                    else:
                        b2 = _b_mean(kind, m, theta[i])
                        b2 = w * b2 * (1.0 - b2) / m
                    for j in range(q):
                        grad[j] += r * dv[i, j]
                        for k in range(j, q):
                            hess[j, k] += b2 * dv[i, j] * dv[i, k]
                if has_center:
                    for j in range(q):
                        grad[j] += gamma * (tcur[j] - cv[p, j])
                elif gamma > 0.0:
                    for j in range(q):
                        grad[j] += gamma * tcur[j]
                gnorm2 = 0.0
                for j in range(q):
                    gnorm2 += grad[j] * grad[j]
                if gnorm2 <= grad_tol * grad_tol:
                    st_v[p] = ST_OK
                    it_v[p] = it
                    break
                for j in range(q):
                    for k in range(j, q):
                        if k == j and gamma > 0.0:
                            hess[j, j] += gamma
                        hess[k, j] = hess[j, k]
                if _cholesky(hess, <int> q):
                    # ridge fallback: rebuild the diagonal-damped Hessian once
                    ridge = 0.0
                    for j in range(q):
                        for k in range(q):
                            hess[j, k] = 0.0
                    for i in range(n_obs):
                        w = wv[p, i] if has_weights else 1.0
                        if kind == KIND_GAUSSIAN:
                            b2 = w
                        else:
                            b2 = _b_mean(kind, m, theta[i])
                            b2 = w * b2 * (1.0 - b2) / m
                        for j in range(q):
                            for k in range(j, q):
                                hess[j, k] += b2 * dv[i, j] * dv[i, k]
                    for j in range(q):
                        hess[j, j] += gamma
                        ridge += hess[j, j]
                    ridge = 1e-8 * ridge / q
                    for j in range(q):
                        hess[j, j] += ridge
                        for k in range(j, q):
                            hess[k, j] = hess[j, k]
                    if _cholesky(hess, <int> q):
                        st_v[p] = ST_HESSIAN
                        it_v[p] = it
                        break
                for j in range(q):
                    step_dir[j] = -grad[j]
                _chol_solve(hess, step_dir, step_dir, <int> q)
                gtd = 0.0
                for j in range(q):
                    gtd += grad[j] * step_dir[j]
                if gtd >= 0.0:
                    st_v[p] = ST_OK
                    it_v[p] = it
                    break

                # Armijo backtracking from unit step
                s = 1.0
                while True:
                    f_try = 0.0
                    for j in range(q):
                        ttrial[j] = tcur[j] + s * step_dir[j]
                    for i in range(n_obs):
                        th = ov[p, i] if has_offset else 0.0
                        for j in range(q):
                            th += dv[i, j] * ttrial[j]
                        w = wv[p, i] if has_weights else 1.0
                        f_try += w * (_b_val(kind, m, th) - xv[p, i] * th)
                    if has_center:
                        for j in range(q):
                            diff = ttrial[j] - cv[p, j]
                            f_try += 0.5 * gamma * diff * diff
                    elif gamma > 0.0:
                        for j in range(q):
                            f_try += 0.5 * gamma * ttrial[j] * ttrial[j]
                    if f_try <= f_cur + c1 * s * gtd:
                        break
                    s *= shrink
                    if s < min_step:
                        st_v[p] = ST_STALLED
                        it_v[p] = it
                        break
                if st_v[p] == ST_STALLED:
                    break
                for j in range(q):
                    tcur[j] = ttrial[j]
                for i in range(n_obs):
                    th = ov[p, i] if has_offset else 0.0
                    for j in range(q):
                        th += dv[i, j] * tcur[j]
                    theta[i] = th
                if f_try >= f_cur:
                    # accepted step with no measurable decrease: minimized to
                    # floating-point resolution, report as not-converged
                    st_v[p] = ST_MAXITER
                    it_v[p] = it
                    f_cur = f_try
                    break
                f_cur = f_try

            for j in range(q):
                tv[p, j] = tcur[j]

    return t_out, iters, status
