"""Damped Newton solves for the unconstrained blocks.

Each subproblem is a generalized-linear fit of one row (or feature) against a
fixed design of score columns, optionally with a quadratic proximal term.
Gradients and Hessians follow from the entrywise likelihood: for a row t with
design S and data x, grad = S'(b'(St) - x) + gamma (t - c) and
hess = S' diag(b''(St)) S + gamma I. The heavy lifting happens in the kernel
backend (compiled when available); this module adds the public, validated
surface plus the Gaussian closed form for the loadings update.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import HessianError, InvalidInputError, StalledStepError
from .families import BINOMIAL, Family


@dataclass
class NewtonOptions:
    grad_tol: float = 1e-8
    max_iter: int = 100
    c1: float = 1e-4        # Armijo sufficient-decrease constant
    shrink: float = 0.5     # backtracking factor
    min_step: float = 1e-12


@dataclass
class RowProblem:
    """One row subproblem: design S (n x q), data x (n,), family, and an
    optional proximal pull of weight prox_weight toward prox_target."""

    s: np.ndarray
    x: np.ndarray
    fam: Family
    prox_weight: float = 0.0
    prox_target: np.ndarray | None = None
    offset: np.ndarray | None = None

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.x = np.asarray(self.x, dtype=float).ravel()
        if not np.all(np.isfinite(self.s)):
            raise InvalidInputError("design must be finite")
        if self.prox_weight < 0.0:
            raise InvalidInputError("prox_weight must be >= 0")


def _kind_of(fam):
    return _kernels.KIND_BINOMIAL if fam.kind == BINOMIAL else _kernels.KIND_GAUSSIAN


def _theta(prob, t):
    th = prob.s @ t
    if prob.offset is not None:
        th = th + np.asarray(prob.offset, dtype=float).ravel()
    return th


def row_objective(prob, t):
    """f(t) = sum_i [b(theta_i) - x_i theta_i] + (gamma/2)||t - target||^2."""
    from .families import cumulant

    t = np.asarray(t, dtype=float).ravel()
    th = _theta(prob, t)
    f = float(np.sum(cumulant(prob.fam, th) - prob.x * th))
    if prob.prox_weight > 0.0:
        target = np.zeros_like(t) if prob.prox_target is None \
            else np.asarray(prob.prox_target, dtype=float).ravel()
        f += 0.5 * prob.prox_weight * float(np.sum((t - target) ** 2))
    return f


def row_gradient(prob, t):
    """Analytic gradient S'(b'(St) - x) + gamma (t - target)."""
    from .families import mean

    t = np.asarray(t, dtype=float).ravel()
    g = prob.s.T @ (mean(prob.fam, _theta(prob, t)) - prob.x)
    if prob.prox_weight > 0.0:
        target = np.zeros_like(t) if prob.prox_target is None \
            else np.asarray(prob.prox_target, dtype=float).ravel()
        g = g + prob.prox_weight * (t - target)
    return g


def row_hessian(prob, t):
    """Analytic Hessian S' diag(b''(St)) S + gamma I."""
    from .families import variance

    t = np.asarray(t, dtype=float).ravel()
    d = variance(prob.fam, _theta(prob, t))
    h = prob.s.T @ (d[:, None] * prob.s)
    if prob.prox_weight > 0.0:
        h = h + prob.prox_weight * np.eye(t.size)
    return h


def solve_rows(x_rows, design, t0, fam, offset=None, weights=None,
               prox_weight=0.0, prox_center=None, opts=None):
    """Batched kernel call; returns (T, iters, status) without raising.

    Rows of x_rows are independent problems sharing `design`. Status codes:
    0 converged, 1 stopped short of grad_tol (budget exhausted or objective
    at floating-point resolution; iterate valid and monotone), 2 stalled
    line search, 3 Hessian failure.
    """
    opts = opts or NewtonOptions()
    return _kernels.newton_rows(
        np.asarray(x_rows, dtype=float),
        np.asarray(design, dtype=float),
        np.asarray(t0, dtype=float),
        _kind_of(fam), float(fam.trials),
        offset=None if offset is None else np.asarray(offset, dtype=float),
        weights=None if weights is None else np.asarray(weights, dtype=float),
        prox_weight=float(prox_weight),
        prox_center=None if prox_center is None else np.asarray(prox_center, dtype=float),
        grad_tol=opts.grad_tol, max_iter=opts.max_iter, c1=opts.c1,
        shrink=opts.shrink, min_step=opts.min_step)


def newton_solve_row(prob, t0, opts=None):
    """Solve a single RowProblem from t0; returns the iterate.

    Raises StalledStepError (carrying the last iterate) when the line search
    shrinks below min_step, HessianError when the damped Hessian is not
    positive definite after the ridge retry. Hitting max_iter returns the
    current iterate.
    """
    t0 = np.asarray(t0, dtype=float).ravel()
    if not np.all(np.isfinite(t0)):
        raise InvalidInputError("t0 must be finite")
    center = None
    if prob.prox_weight > 0.0 and prob.prox_target is not None:
        center = np.asarray(prob.prox_target, dtype=float).reshape(1, -1)
    t, _, status = solve_rows(
        prob.x.reshape(1, -1), prob.s, t0.reshape(1, -1), prob.fam,
        offset=None if prob.offset is None else np.asarray(prob.offset, float).reshape(1, -1),
        prox_weight=prob.prox_weight, prox_center=center, opts=opts)
    if status[0] == _kernels.STATUS_STALLED:
        raise StalledStepError("line search stalled below the minimum step",
                               iterate=t[0])
    if status[0] == _kernels.STATUS_HESSIAN:
        raise HessianError("Hessian not positive definite after ridge fallback")
    return t[0]


def update_loadings(x, fam, s, t0, opts=None, strict=True):
    """Update the per-feature loading rows T (p x q) given scores S (n x q).

    Gaussian: exact closed form (S^+ X)'. Otherwise one damped-Newton solve
    per feature, warm-started at t0; the objective never increases. With
    strict=True a stalled or non-PD row raises with its row index; with
    strict=False stalled/max-iter rows keep their (monotone) iterates and
    only Hessian failures raise.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    t0 = np.asarray(t0, dtype=float)
    if x.shape[0] != s.shape[0]:
        raise InvalidInputError("data and design row counts differ")
    if t0.shape != (x.shape[1], s.shape[1]):
        raise InvalidInputError("warm start has the wrong shape")
    if s.shape[1] == 0:
        return t0.copy()
    if fam.is_gaussian:
        sol, *_ = np.linalg.lstsq(s, x, rcond=1e-12)
        return sol.T
    t, _, status = solve_rows(x.T, s, t0, fam, opts=opts)
    bad_hess = np.where(status == _kernels.STATUS_HESSIAN)[0]
    if bad_hess.size:
        raise HessianError(f"Hessian failure updating loading row {bad_hess[0]}")
    if strict:
        stalled = np.where(status == _kernels.STATUS_STALLED)[0]
        if stalled.size:
            raise StalledStepError(
                f"line search stalled updating loading row {stalled[0]}",
                iterate=t)
    return t
