"""Subspace primitives: orthonormal bases, complement projections, the
orthogonality-constrained Procrustes closed form, and canonical pairs
between two column spaces.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError

PINV_RTOL = 1e-12


def orthonormal_basis(m, rank_tol=1e-12):
    """Left singular vectors of m with singular value > rank_tol * sigma_max.

    Sign convention: the largest-magnitude entry of each column is positive,
    so the basis is deterministic. A zero matrix yields a zero-width result.
    """
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[0], 0))
    rank = int(np.sum(s > rank_tol * s[0]))
    u = u[:, :rank]
    return _fix_signs(u)


def _fix_signs(u):
    if u.shape[1] == 0:
        return u
    lead = np.abs(u).argmax(axis=0)
    signs = np.sign(u[lead, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def project_complement(u, m):
    """(I - P_u) m: remove from each column of m its component in C(u)."""
    u = np.asarray(u, dtype=float)
    m = np.asarray(m, dtype=float)
    if u.shape[0] != m.shape[0]:
        raise InvalidInputError(
            f"row mismatch: {u.shape[0]} vs {m.shape[0]}")
    if u.shape[1] == 0:
        return m.copy()
    q = orthonormal_basis(u)
    return m - q @ (q.T @ m)


def constrained_procrustes(c, u):
    """argmin ||P - C||_F subject to U'P = 0 and P'P = I.

    Closed form P = M N' from the thin SVD (I - P_u) C = M D N'. Raises
    DegenerateInputError when the projected C loses column rank (some
    singular value below 1e-12 of the largest).
    """
    c = np.asarray(c, dtype=float)
    r = c.shape[1]
    if r == 0:
        return c.copy()
    proj = project_complement(u, c) if u is not None and u.shape[1] > 0 else c
    m, s, nt = np.linalg.svd(proj, full_matrices=False)
    # rank scale from the unprojected target, so a fully absorbed C (whose
    # projection is numerical noise) still counts as degenerate
    scale = np.linalg.svd(c, compute_uv=False)[0]
    deficient = int(np.sum(s <= 1e-12 * scale)) if scale > 0.0 else r
    if deficient > 0:
        raise DegenerateInputError(
            f"projected target is rank deficient: {deficient} of {r} "
            "singular values vanish")
    return m @ nt


@dataclass
class CanonicalPairs:
    """Paired orthonormal directions u1 in C(T1), u2 in C(T2) with
    u1'u2 = diag(rho), rho descending."""

    u1: np.ndarray
    u2: np.ndarray
    rho: np.ndarray


def canonical_pairs(t1, t2, cutoff=1e-8, check_centered=True):
    """All canonical-variable pairs between C(t1) and C(t2) with rho > cutoff.

    Computed from orthonormal bases Q1, Q2 and the SVD of Q1'Q2, whose
    singular values are the cosines of the principal angles. Column signs are
    flipped jointly (per pair) so the leading entry of each u1 column is
    positive.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    n = t1.shape[0]
    if t2.shape[0] != n:
        raise InvalidInputError("views must share the sample dimension")
    if n < 2:
        raise InvalidInputError("need at least two samples")
    if not 0.0 <= cutoff < 1.0:
        raise InvalidInputError("cutoff must lie in [0, 1)")
    if check_centered:
        for name, t in (("t1", t1), ("t2", t2)):
            if t.size and np.linalg.norm(t.mean(axis=0)) > 1e-8:
                raise InvalidInputError(f"{name} is not column-centered")

    q1 = orthonormal_basis(t1)
    q2 = orthonormal_basis(t2)
    if q1.shape[1] == 0 or q2.shape[1] == 0:
        return CanonicalPairs(np.zeros((n, 0)), np.zeros((n, 0)), np.zeros(0))
    w1, rho, w2t = np.linalg.svd(q1.T @ q2)
    keep = int(np.sum(rho > cutoff))
    u1 = q1 @ w1[:, :keep]
    u2 = q2 @ w2t.T[:, :keep]
    rho = np.clip(rho[:keep], 0.0, 1.0)
    if keep:
        lead = np.abs(u1).argmax(axis=0)
        signs = np.sign(u1[lead, np.arange(keep)])
        signs[signs == 0] = 1.0
        u1 = u1 * signs
        u2 = u2 * signs
    return CanonicalPairs(u1, u2, rho)


def principal_angles_deg(t1, t2):
    """Principal angles between C(t1) and C(t2) in degrees, ascending."""
    q1 = orthonormal_basis(np.asarray(t1, dtype=float))
    q2 = orthonormal_basis(np.asarray(t2, dtype=float))
    if q1.shape[1] == 0 or q2.shape[1] == 0:
        return np.zeros(0)
    s = np.linalg.svd(q1.T @ q2, compute_uv=False)
    return np.degrees(np.arccos(np.clip(s, 0.0, 1.0)))
