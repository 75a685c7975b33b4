"""Pure-NumPy batch of damped-Newton row solves (fallback kernel).

Solves, independently for each problem p (a row of ``x``),

    min_t  sum_j w_pj * [ b(o_pj + d_j.t) - x_pj * (o_pj + d_j.t) ]
           + (gamma/2) * ||t - c_p||^2

where d_j is row j of the shared design matrix, o is an optional offset,
w an optional 0/1 (or general nonnegative) weight matrix, and c an optional
proximal center. Newton direction from the exact Hessian, Armijo
backtracking from unit step. Problems are vectorized together with an
active-set mask; per-problem decisions match the compiled kernel.

Status codes per problem: 0 converged (gradient norm <= grad_tol);
1 stopped short of grad_tol, either out of iterations or because an accepted
step no longer decreases the objective in floating point (iterate valid,
objective monotone); 2 line search stalled below min_step (iterate kept);
3 Hessian not positive definite after the ridge retry.
"""

import numpy as np

KIND_GAUSSIAN = 0
KIND_BINOMIAL = 1

STATUS_OK = 0
STATUS_MAXITER = 1
STATUS_STALLED = 2
STATUS_HESSIAN = 3


def _b_terms(kind, m, theta):
    if kind == KIND_GAUSSIAN:
        return 0.5 * theta * theta, theta, np.ones_like(theta)
    u = theta / m
    b = m * (np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u))))
    p = np.empty_like(u)
    pos = u >= 0
    p[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    p[~pos] = eu / (1.0 + eu)
    return b, p, p * (1.0 - p) / m


def _b_value(kind, m, theta):
    if kind == KIND_GAUSSIAN:
        return 0.5 * theta * theta
    u = theta / m
    return m * (np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u))))


def newton_rows(x, design, t0, kind, trials, offset=None, weights=None,
                prox_weight=0.0, prox_center=None, grad_tol=1e-8,
                max_iter=100, c1=1e-4, shrink=0.5, min_step=1e-12):
    x = np.ascontiguousarray(x, dtype=float)
    design = np.ascontiguousarray(design, dtype=float)
    t = np.array(t0, dtype=float, copy=True)
    n_prob, n_obs = x.shape
    q = design.shape[1]
    iters = np.zeros(n_prob, dtype=np.int64)
    status = np.zeros(n_prob, dtype=np.int64)
    if n_prob == 0 or q == 0:
        return t, iters, status

    m = float(trials)
    gamma = float(prox_weight)
    center = None if prox_center is None else np.asarray(prox_center, dtype=float)
    if gamma > 0.0 and center is None:
        center = np.zeros((n_prob, q))

    def theta_for(rows, tt):
        th = tt @ design.T
        if offset is not None:
            th = th + offset[rows]
        return th

    def fval(rows, tt, th):
        terms = _b_value(kind, m, th) - x[rows] * th
        if weights is not None:
            terms = terms * weights[rows]
        f = terms.sum(axis=1)
        if gamma > 0.0:
            diff = tt - center[rows]
            f = f + 0.5 * gamma * np.einsum("pi,pi->p", diff, diff)
        return f

    full = np.arange(n_prob)
    theta = theta_for(full, t)
    f = fval(full, t, theta)
    status[:] = STATUS_MAXITER
    iters[:] = max_iter
    active = full

    for it in range(max_iter):
        if active.size == 0:
            break
        th_a = theta[active]
        _, b1, b2 = _b_terms(kind, m, th_a)
        resid = b1 - x[active]
        if weights is not None:
            resid = resid * weights[active]
            b2 = b2 * weights[active]
        g = resid @ design
        if gamma > 0.0:
            g = g + gamma * (t[active] - center[active])
        gnorm = np.linalg.norm(g, axis=1)
        done = gnorm <= grad_tol
        if done.any():
            status[active[done]] = STATUS_OK
            iters[active[done]] = it
            active = active[~done]
            if active.size == 0:
                break
            g = g[~done]
            b2 = b2[~done]

        hess = np.einsum("ni,pn,nj->pij", design, b2, design, optimize=True)
        if gamma > 0.0:
            idx = np.arange(q)
            hess[:, idx, idx] += gamma
        chol, ok_pd = _chol_stack(hess)
        if not ok_pd.all():
            # ridge fallback once per failing problem: add 1e-8 * trace/q
            bad = np.where(~ok_pd)[0]
            idx = np.arange(q)
            for j in bad:
                ridge = 1e-8 * np.trace(hess[j]) / q
                hess[j, idx, idx] += ridge
            chol_bad, ok_bad = _chol_stack(hess[bad])
            chol[bad[ok_bad]] = chol_bad[ok_bad]
            if not ok_bad.all():
                fail = bad[~ok_bad]
                status[active[fail]] = STATUS_HESSIAN
                iters[active[fail]] = it
                keep = np.ones(active.size, dtype=bool)
                keep[fail] = False
                active = active[keep]
                g = g[keep]
                chol = chol[keep]
                if active.size == 0:
                    break

        # solve through the factors; a successful Cholesky guarantees a
        # strictly positive diagonal even for near-singular Hessians
        half = np.linalg.solve(chol, -g[:, :, None])
        d = np.linalg.solve(np.swapaxes(chol, 1, 2), half)[:, :, 0]
        gtd = np.einsum("pi,pi->p", g, d)
        flat = gtd >= 0.0
        if flat.any():
            # numerically zero gradient: nothing left to gain
            status[active[flat]] = STATUS_OK
            iters[active[flat]] = it
            keep = ~flat
            active = active[keep]
            if active.size == 0:
                break
            d = d[keep]
            gtd = gtd[keep]

        # vectorized Armijo backtracking, per-problem step size
        step = np.ones(active.size)
        f_cur = f[active]
        pend = np.arange(active.size)
        drop = np.zeros(active.size, dtype=bool)
        while pend.size:
            rows = active[pend]
            trial_t = t[rows] + step[pend, None] * d[pend]
            trial_th = theta_for(rows, trial_t)
            trial_f = fval(rows, trial_t, trial_th)
            ok = trial_f <= f_cur[pend] + c1 * step[pend] * gtd[pend]
            acc = pend[ok]
            if acc.size:
                t[active[acc]] = trial_t[ok]
                theta[active[acc]] = trial_th[ok]
                f[active[acc]] = trial_f[ok]
                # an accepted step with no measurable decrease means the
                # objective is minimized to floating-point resolution
                flat_acc = acc[trial_f[ok] >= f_cur[acc]]
                if flat_acc.size:
                    status[active[flat_acc]] = STATUS_MAXITER
                    iters[active[flat_acc]] = it
                    drop[flat_acc] = True
            pend = pend[~ok]
            step[pend] *= shrink
            stalled = step[pend] < min_step
            if stalled.any():
                dead = pend[stalled]
                status[active[dead]] = STATUS_STALLED
                iters[active[dead]] = it
                drop[dead] = True
                pend = pend[~stalled]
        active = active[~drop]

    return t, iters, status


def _chol_stack(hess):
    """Lower Cholesky factors per stacked matrix plus a success mask; failed
    slots hold the identity so the stack stays solvable."""
    try:
        return np.linalg.cholesky(hess), np.ones(hess.shape[0], dtype=bool)
    except np.linalg.LinAlgError:
        q = hess.shape[1]
        chol = np.tile(np.eye(q), (hess.shape[0], 1, 1))
        ok = np.zeros(hess.shape[0], dtype=bool)
        for j in range(hess.shape[0]):
            try:
                chol[j] = np.linalg.cholesky(hess[j])
                ok[j] = True
            except np.linalg.LinAlgError:
                pass
        return chol, ok
