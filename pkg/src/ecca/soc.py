"""Splitting solvers for the orthogonality-constrained score updates.

Both score blocks are updated by the same alternating scheme: an
unconstrained proximal solve of the likelihood (closed form for Gaussian
views, damped Newton rows otherwise), an SVD projection of the shifted
iterate onto the constraint set {P : C'P = 0, P'P = I}, and a running
multiplier update B <- B + Z - P. The projection output is exactly feasible,
so the returned blocks are the final auxiliary P, not the smooth iterate Z.

Convergence is monitored through the primal residual ||Z - P||_F and the
dual residual ||P(t) - P(t-1)||_F. The inverse step size gamma trades
stability for speed; the default 1000 is conservative.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, HessianError
from .families import nll
from .linalg import orthonormal_basis
from .newton import NewtonOptions, solve_rows


@dataclass
class SocOptions:
    gamma: float = 1000.0
    max_iter: int = 500
    primal_tol: float = 1e-6
    dual_tol: float = 1e-6
    # inner proximal Newton solves run looser than the outer loop
    newton_grad_tol: float = 1e-6
    newton_max_iter: int = 50

    def newton_options(self):
        return NewtonOptions(grad_tol=self.newton_grad_tol,
                             max_iter=self.newton_max_iter)


@dataclass
class SocTrace:
    primal: list = field(default_factory=list)
    dual: list = field(default_factory=list)
    objective: list = field(default_factory=list)  # nll at the feasible P
    n_iter: int = 0
    converged: bool = True
    diverged: bool = False


class _View:
    """Per-view state for one splitting solve: data, family, fixed offset
    part of theta, and the design the scores multiply."""

    def __init__(self, x, fam, base, design, scores):
        self.x = np.asarray(x, dtype=float)
        self.fam = fam
        self.base = np.asarray(base, dtype=float)
        self.design = np.asarray(design, dtype=float)
        self.scores = np.array(scores, dtype=float, copy=True)

    @property
    def width(self):
        return self.design.shape[1]

    def objective(self, scores):
        return nll(self.fam, self.x, self.base + scores @ self.design.T)

    def prox(self, center, gamma, newton_opts):
        """argmin nll(base + S design') + gamma/2 ||S - center||_F^2."""
        if self.fam.is_gaussian:
            y = self.x - self.base
            return gaussian_prox_scores(y, self.design, gamma, -center)
        t, _, status = solve_rows(
            self.x, self.design, self.scores, self.fam, offset=self.base,
            prox_weight=gamma, prox_center=center, opts=newton_opts)
        if np.any(status == 3):
            raise HessianError("proximal Newton failed inside SOC")
        # stalled / max-iter rows keep monotone iterates; acceptable inside
        # the splitting loop, which only needs approximate proximal points
        return t


def gaussian_prox_scores(y, a, gamma, w):
    """Exact minimizer of ||Y - Z A'||_F^2 + gamma ||Z + W||_F^2:
    Z = (Y A - gamma W)(A'A + gamma I)^{-1}."""
    a = np.asarray(a, dtype=float)
    q = a.shape[1]
    rhs = y @ a - gamma * w
    return np.linalg.solve(a.T @ a + gamma * np.eye(q), rhs.T).T


def _project(blocks, basis):
    """SVD projection of hstacked blocks onto {P : basis'P = 0, P'P = I}."""
    c = np.hstack(blocks)
    scale = np.linalg.norm(c)  # pre-projection scale: catches full absorption
    if basis.shape[1]:
        c = c - basis @ (basis.T @ c)
    m, s, nt = np.linalg.svd(c, full_matrices=False)
    if s.size == 0 or scale == 0.0 or s[-1] <= 1e-12 * scale:
        raise DegenerateInputError(
            "rank-deficient projection inside the splitting step")
    return m @ nt


def _run_splitting(views, constraint, opts, joint_projection):
    """Shared engine for the Z-update (joint projection across views) and the
    U-update (independent projection per view)."""
    widths = [v.width for v in views]
    total = sum(widths)
    trace = SocTrace()
    if total == 0:
        return [v.scores for v in views], trace

    basis = orthonormal_basis(constraint) if constraint.shape[1] else \
        np.zeros((views[0].scores.shape[0], 0))
    newton_opts = opts.newton_options()

    p_blocks = [v.scores.copy() for v in views]
    duals = [np.zeros_like(b) for b in p_blocks]

    def total_objective(blocks):
        return sum(v.objective(b) for v, b in zip(views, blocks))

    obj = total_objective(p_blocks)
    trace.objective.append(obj)
    best_obj, best_blocks = obj, [b.copy() for b in p_blocks]
    min_resid = np.inf

    for it in range(1, opts.max_iter + 1):
        for v, p, b in zip(views, p_blocks, duals):
            v.scores = v.prox(p - b, opts.gamma, newton_opts)
        shifted = [v.scores + b for v, b in zip(views, duals)]
        if joint_projection:
            proj = _project(shifted, basis)
            new_p = np.split(proj, np.cumsum(widths)[:-1], axis=1)
        else:
            new_p = [_project([s], basis) if s.shape[1] else s.copy()
                     for s in shifted]

        primal = np.sqrt(sum(
            np.linalg.norm(v.scores - pn) ** 2 for v, pn in zip(views, new_p)))
        dual = np.sqrt(sum(
            np.linalg.norm(pn - po) ** 2 for pn, po in zip(new_p, p_blocks)))
        p_blocks = new_p
        for v, p, b in zip(views, p_blocks, duals):
            b += v.scores - p

        obj = total_objective(p_blocks)
        trace.primal.append(primal)
        trace.dual.append(dual)
        trace.objective.append(obj)
        trace.n_iter = it
        if obj < best_obj:
            best_obj = obj
            best_blocks = [b.copy() for b in p_blocks]

        resid = max(primal, dual)
        min_resid = min(min_resid, resid)
        if min_resid > 0 and resid > 10.0 * min_resid:
            trace.diverged = True
            trace.converged = False
            break
        if primal <= opts.primal_tol and dual <= opts.dual_tol:
            break
    else:
        trace.converged = False

    return best_blocks, trace


def soc_update_z(x1, x2, fam1, fam2, base1, base2, a1, a2, constraint,
                 z1, z2, opts=None):
    """Update both individual score blocks jointly (shared orthonormality).

    base_k is the fixed part 1 mu_k' + U_k V_k' of theta_k; `constraint`
    stacks the columns every Z must stay orthogonal to (ones and both U
    blocks). Returns the exactly feasible blocks plus the trace.
    """
    opts = opts or SocOptions()
    views = [_View(x1, fam1, base1, a1, z1), _View(x2, fam2, base2, a2, z2)]
    blocks, trace = _run_splitting(views, np.asarray(constraint, dtype=float),
                                   opts, joint_projection=True)
    return blocks[0], blocks[1], trace


def soc_update_u(x1, x2, fam1, fam2, base1, base2, v1, v2, z_full,
                 u1, u2, opts=None):
    """Update both correlated score blocks; the two views separate, so each
    block is projected independently against z_full = (1 Z1 Z2). The returned
    blocks need not have a diagonal cross product: rotation happens later.
    """
    opts = opts or SocOptions()
    views = [_View(x1, fam1, base1, v1, u1), _View(x2, fam2, base2, v2, u2)]
    blocks, trace = _run_splitting(views, np.asarray(z_full, dtype=float),
                                   opts, joint_projection=False)
    return blocks[0], blocks[1], trace


def soc_update_scores_single(x, fam, base, design, constraint, scores0,
                             opts=None):
    """One-view splitting solve (used for the non-Gaussian view of a mixed
    correlated-score update)."""
    opts = opts or SocOptions()
    views = [_View(x, fam, base, design, scores0)]
    blocks, trace = _run_splitting(views, np.asarray(constraint, dtype=float),
                                   opts, joint_projection=False)
    return blocks[0], trace


def gaussian_z_closed_form(y, a, constraint):
    """Exact all-Gaussian Z update: argmin ||Y - Z A'||_F^2 subject to
    constraint'Z = 0 and Z'Z = I, via the thin SVD of the projected Y A."""
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    basis = orthonormal_basis(np.asarray(constraint, dtype=float))
    return _project([y @ a], basis)


def gaussian_u_closed_form(resid, v, z_full):
    """Exact Gaussian correlated-score update for one view: argmin
    ||R - U V'||_F^2 subject to z_full'U = 0, U'U = I."""
    return gaussian_z_closed_form(resid, v, z_full)
