"""Outer alternating estimation: initialization, block updates, rotation.

One outer iteration updates, in order: the unconstrained loadings
(mu_k, V_k, A_k), the individual scores Z (joint splitting solve, or the
exact closed form when both views are Gaussian), the correlated scores U
(per view: Gaussian closed form or a one-view splitting solve), and finally
the rotation that restores a diagonal, descending U1'U2 without changing
any natural parameters. The loop stops when the total negative
log-likelihood changes by at most eps, or after t_max iterations.
"""

import contextlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .families import nll, saturated_theta
from .linalg import orthonormal_basis, project_complement
from .model import EccaModel, assemble_theta, constraint_residuals
from .newton import NewtonOptions, update_loadings
from .soc import (SocOptions, gaussian_u_closed_form, gaussian_z_closed_form,
                  soc_update_scores_single, soc_update_z)


@dataclass
class FitOptions:
    eps: float | None = None      # default resolves to 1e-6 * n * (p1 + p2)
    t_max: int = 100
    soc: SocOptions = field(default_factory=SocOptions)
    newton: NewtonOptions = field(default_factory=NewtonOptions)
    intercept: bool = True


@dataclass
class FitTrace:
    nll_initial: float = 0.0
    nll_loadings: list = field(default_factory=list)
    nll_scores_z: list = field(default_factory=list)
    nll_scores_u: list = field(default_factory=list)
    nll_total: list = field(default_factory=list)
    max_residual: list = field(default_factory=list)
    z_soc: list = field(default_factory=list)  # SocTrace per outer iteration
    u_soc: list = field(default_factory=list)
    converged: bool = False
    diverged: bool = False

    @property
    def n_iter(self):
        return len(self.nll_total)


def _validate_ranks(n, p1, p2, r0, r1, r2, intercept):
    cap = n - 1 if intercept else n
    if not (0 <= r0 <= min(r1, r2)):
        raise InvalidInputError("need 0 <= r0 <= min(r1, r2)")
    if r1 > min(cap, p1) or r2 > min(cap, p2):
        raise InvalidInputError(
            f"total ranks must satisfy r_k <= min({cap}, p_k)")


def initialize(x1, x2, fam1, fam2, r0, r1, r2, intercept=True):
    """Starting point from the saturated natural parameters.

    The correlated scores are the first r0 canonical-variable pairs between
    the column spaces of the centered saturated parameters; the individual
    scores are leading left singular vectors of the residual after projecting
    those (and, for view 2, also the view-1 individual scores) out, which
    makes the start exactly feasible. Loadings are score regressions.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n = x1.shape[0]
    if x2.shape[0] != n:
        raise InvalidInputError("views must share the sample dimension")
    _validate_ranks(n, x1.shape[1], x2.shape[1], r0, r1, r2, intercept)

    th1 = saturated_theta(fam1, x1)
    th2 = saturated_theta(fam2, x2)
    if intercept:
        mu1, mu2 = th1.mean(axis=0), th2.mean(axis=0)
    else:
        mu1, mu2 = np.zeros(x1.shape[1]), np.zeros(x2.shape[1])
    tc1 = th1 - mu1
    tc2 = th2 - mu2

    # each view is first reduced to its top r_k principal directions; taking
    # canonical pairs between the full (min(n-1, p_k)-dimensional) saturated
    # column spaces would pick up spurious geometric intersections whenever
    # r_saturated_1 + r_saturated_2 approaches n
    if r0 > 0:
        q1 = orthonormal_basis(tc1)[:, :r1]
        q2 = orthonormal_basis(tc2)[:, :r2]
        if min(q1.shape[1], q2.shape[1]) < r0:
            raise InvalidInputError(
                "saturated parameters too degenerate for the requested joint rank")
        w1, rho, w2t = np.linalg.svd(q1.T @ q2)
        u1 = q1 @ w1[:, :r0]
        u2 = q2 @ w2t.T[:, :r0]
        lead = np.abs(u1).argmax(axis=0)
        signs = np.sign(u1[lead, np.arange(r0)])
        signs[signs == 0] = 1.0
        u1 *= signs
        u2 *= signs
        corrs = np.clip(rho[:r0], 0.0, 1.0)
    else:
        u1 = np.zeros((n, 0))
        u2 = np.zeros((n, 0))
        corrs = np.zeros(0)

    u_both = np.hstack([u1, u2])
    g1 = project_complement(u_both, tc1) if u_both.shape[1] else tc1
    b1 = orthonormal_basis(g1)
    if b1.shape[1] < r1 - r0:
        raise InvalidInputError("view 1 too degenerate for the requested rank")
    z1 = b1[:, :r1 - r0]

    block = np.hstack([u_both, z1])
    g2 = project_complement(block, tc2) if block.shape[1] else tc2
    b2 = orthonormal_basis(g2)
    if b2.shape[1] < r2 - r0:
        raise InvalidInputError("view 2 too degenerate for the requested rank")
    z2 = b2[:, :r2 - r0]

    model = EccaModel(
        mu1=mu1, mu2=mu2, u1=u1, u2=u2,
        v1=tc1.T @ u1, v2=tc2.T @ u2,
        z1=z1, z2=z2, a1=tc1.T @ z1, a2=tc2.T @ z2,
        corrs=corrs, fam1=fam1, fam2=fam2, intercept=intercept)
    if constraint_residuals(model).max() > 1e-8:
        raise InvalidInputError("initialization failed to satisfy constraints")
    return model


def rotate_correlated_scores(u1, u2, v1, v2):
    """Rotate scores and loadings so U1'U2 is diagonal with descending
    nonnegative entries; the products U_k V_k' are unchanged.

    The rotations are the singular-vector pairs of U1'U2; its singular values
    are the recomputed canonical correlations.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape[1] == 0:
        return u1, u2, np.asarray(v1, float), np.asarray(v2, float), np.zeros(0)
    g1, lam, g2t = np.linalg.svd(u1.T @ u2)
    g2 = g2t.T
    return u1 @ g1, u2 @ g2, np.asarray(v1, float) @ g1, \
        np.asarray(v2, float) @ g2, lam


def _total_nll(x1, x2, model):
    return nll(model.fam1, x1, assemble_theta(model, 1)) + \
        nll(model.fam2, x2, assemble_theta(model, 2))


@contextlib.contextmanager
def _stage(outer_iter, name):
    """Annotate block-solver failures with the outer iteration and stage."""
    try:
        yield
    except Exception as exc:
        if exc.args and isinstance(exc.args[0], str):
            exc.args = (f"outer iteration {outer_iter}, {name} stage: "
                        f"{exc.args[0]}",) + exc.args[1:]
        raise


def fit_ecca(x1, x2, fam1, fam2, r0, r1, r2, opts=None, init=None):
    """Alternating minimization of the two-view negative log-likelihood.

    Returns (model, trace). The model satisfies the orthogonality
    constraints at every outer iteration by construction. With two Gaussian
    views every block update is an exact minimizer, so the objective is
    non-increasing; otherwise small increases are tolerated and flagged.
    `init` overrides the default saturated-parameter initialization.
    """
    opts = opts or FitOptions()
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n, p1 = x1.shape
    p2 = x2.shape[1]
    eps = opts.eps if opts.eps is not None else 1e-6 * n * (p1 + p2)

    model = init if init is not None else initialize(
        x1, x2, fam1, fam2, r0, r1, r2, intercept=opts.intercept)
    mu1, mu2 = model.mu1.copy(), model.mu2.copy()
    u1, u2 = model.u1.copy(), model.u2.copy()
    v1, v2 = model.v1.copy(), model.v2.copy()
    z1, z2 = model.z1.copy(), model.z2.copy()
    a1, a2 = model.a1.copy(), model.a2.copy()
    corrs = model.corrs.copy()
    intercept = model.intercept
    ones = np.ones((n, 1))
    both_gaussian = fam1.is_gaussian and fam2.is_gaussian

    def snapshot():
        return EccaModel(mu1=mu1, mu2=mu2, u1=u1, u2=u2, v1=v1, v2=v2,
                         z1=z1, z2=z2, a1=a1, a2=a2, corrs=corrs,
                         fam1=fam1, fam2=fam2, intercept=intercept)

    trace = FitTrace()
    l_prev = _total_nll(x1, x2, snapshot())
    trace.nll_initial = l_prev

    for outer in range(1, opts.t_max + 1):
        # --- loadings -----------------------------------------------------
        for k in (1, 2):
            x, fam = (x1, fam1) if k == 1 else (x2, fam2)
            u, z = (u1, z1) if k == 1 else (u2, z2)
            mu, v, a = (mu1, v1, a1) if k == 1 else (mu2, v2, a2)
            cols = ([ones] if intercept else []) + [u, z]
            s = np.hstack(cols)
            t0_cols = ([mu[:, None]] if intercept else []) + [v, a]
            t0 = np.hstack(t0_cols)
            with _stage(outer, "loadings"):
                t = update_loadings(x, fam, s, t0, opts=opts.newton,
                                    strict=False)
            off = 0
            if intercept:
                mu = t[:, 0]
                off = 1
            v = t[:, off:off + u.shape[1]]
            a = t[:, off + u.shape[1]:]
            if k == 1:
                mu1, v1, a1 = mu, v, a
            else:
                mu2, v2, a2 = mu, v, a
        trace.nll_loadings.append(_total_nll(x1, x2, snapshot()))

        # --- individual scores -------------------------------------------
        if z1.shape[1] + z2.shape[1] > 0:
            base1 = np.tile(mu1, (n, 1)) + (u1 @ v1.T if u1.shape[1] else 0.0)
            base2 = np.tile(mu2, (n, 1)) + (u2 @ v2.T if u2.shape[1] else 0.0)
            cols = ([ones] if intercept else []) + [u1, u2]
            constraint = np.hstack(cols)
            with _stage(outer, "orthogonal-scores"):
                if both_gaussian:
                    y = np.hstack([x1 - base1, x2 - base2])
                    qa1, qa2 = a1.shape[1], a2.shape[1]
                    a_blk = np.zeros((p1 + p2, qa1 + qa2))
                    a_blk[:p1, :qa1] = a1
                    a_blk[p1:, qa1:] = a2
                    z = gaussian_z_closed_form(y, a_blk, constraint)
                    z1, z2 = z[:, :qa1], z[:, qa1:]
                else:
                    z1, z2, soctr = soc_update_z(
                        x1, x2, fam1, fam2, base1, base2, a1, a2, constraint,
                        z1, z2, opts=opts.soc)
                    trace.z_soc.append(soctr)
        trace.nll_scores_z.append(_total_nll(x1, x2, snapshot()))

        # --- correlated scores --------------------------------------------
        if u1.shape[1] > 0:
            cols = ([ones] if intercept else []) + [z1, z2]
            z_full = np.hstack(cols)
            for k in (1, 2):
                x, fam = (x1, fam1) if k == 1 else (x2, fam2)
                mu, z, a, v = (mu1, z1, a1, v1) if k == 1 else (mu2, z2, a2, v2)
                base = np.tile(mu, (n, 1)) + (z @ a.T if z.shape[1] else 0.0)
                with _stage(outer, "correlated-scores"):
                    if fam.is_gaussian:
                        u_new = gaussian_u_closed_form(x - base, v, z_full)
                    else:
                        u0 = u1 if k == 1 else u2
                        u_new, soctr = soc_update_scores_single(
                            x, fam, base, v, z_full, u0, opts=opts.soc)
                        trace.u_soc.append(soctr)
                if k == 1:
                    u1 = u_new
                else:
                    u2 = u_new
            trace.nll_scores_u.append(_total_nll(x1, x2, snapshot()))
            # --- rotation --------------------------------------------------
            u1, u2, v1, v2, lam = rotate_correlated_scores(u1, u2, v1, v2)
            corrs = np.clip(lam, 0.0, 1.0)
        else:
            trace.nll_scores_u.append(trace.nll_scores_z[-1])

        model = snapshot()
        l_cur = _total_nll(x1, x2, model)
        trace.nll_total.append(l_cur)
        trace.max_residual.append(constraint_residuals(model).max())

        if l_cur > l_prev + 1e-3 * max(1.0, abs(l_prev)):
            trace.diverged = True
            warnings.warn("objective increased by more than the divergence "
                          "threshold during an outer iteration")
        if abs(l_cur - l_prev) <= eps:
            trace.converged = True
            l_prev = l_cur
            break
        l_prev = l_cur

    return model, trace
