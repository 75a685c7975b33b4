"""Two-view decomposition container and its constraint diagnostics.

Each view k has natural parameters theta_k = 1 mu_k' + U_k V_k' + Z_k A_k'
where the correlated scores U_k are centered orthonormal columns with
U1'U2 = diag(corrs), and the individual scores Z_k are orthonormal,
orthogonal to the ones vector, to both U blocks and to each other.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .families import Family


@dataclass
class EccaModel:
    mu1: np.ndarray  # (p1,) intercepts, natural-parameter units
    mu2: np.ndarray  # (p2,)
    u1: np.ndarray   # (n, r0) correlated scores
    u2: np.ndarray   # (n, r0)
    v1: np.ndarray   # (p1, r0) joint loadings
    v2: np.ndarray   # (p2, r0)
    z1: np.ndarray   # (n, r1 - r0) individual scores
    z2: np.ndarray   # (n, r2 - r0)
    a1: np.ndarray   # (p1, r1 - r0) individual loadings
    a2: np.ndarray   # (p2, r2 - r0)
    corrs: np.ndarray  # (r0,) canonical correlations, descending in [0, 1]
    fam1: Family
    fam2: Family
    intercept: bool = True

    def __post_init__(self):
        for name in ("mu1", "mu2", "corrs"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        for name in ("u1", "u2", "v1", "v2", "z1", "z2", "a1", "a2"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.ndim != 2:
                m = m.reshape(m.shape[0], -1)
            setattr(self, name, m)
        n = self.u1.shape[0]
        if self.u2.shape[0] != n or self.z1.shape[0] != n or self.z2.shape[0] != n:
            raise InvalidInputError("score blocks disagree on the sample count")
        if self.u1.shape[1] != self.u2.shape[1]:
            raise InvalidInputError("correlated score blocks disagree on rank")
        if self.v1.shape != (self.mu1.size, self.r0) or self.v2.shape != (self.mu2.size, self.r0):
            raise InvalidInputError("joint loading shapes inconsistent with mu / r0")
        if self.a1.shape != (self.mu1.size, self.z1.shape[1]):
            raise InvalidInputError("view-1 individual loading shape inconsistent")
        if self.a2.shape != (self.mu2.size, self.z2.shape[1]):
            raise InvalidInputError("view-2 individual loading shape inconsistent")
        if self.corrs.size != self.r0:
            raise InvalidInputError("corrs length must equal the joint rank")

    @property
    def n(self):
        return self.u1.shape[0]

    @property
    def p1(self):
        return self.mu1.size

    @property
    def p2(self):
        return self.mu2.size

    @property
    def r0(self):
        return self.u1.shape[1]

    @property
    def r1(self):
        return self.r0 + self.z1.shape[1]

    @property
    def r2(self):
        return self.r0 + self.z2.shape[1]


def assemble_theta(model, view):
    """Natural-parameter matrix 1 mu' + U V' + Z A' for the given view (1 or 2)."""
    if view == 1:
        mu, u, v, z, a = model.mu1, model.u1, model.v1, model.z1, model.a1
    elif view == 2:
        mu, u, v, z, a = model.mu2, model.u2, model.v2, model.z2, model.a2
    else:
        raise InvalidInputError("view must be 1 or 2")
    n = model.n
    theta = np.tile(mu, (n, 1))
    if u.shape[1]:
        theta += u @ v.T
    if z.shape[1]:
        theta += z @ a.T
    return theta


@dataclass
class ConstraintResiduals:
    """Frobenius norms of the constraint violations; all fields >= 0.

    u_cross_offdiag measures only the off-diagonal of U1'U2; z_center_u_k is
    the violation of Z_k' (1 U1 U2) = 0 (the ones column is dropped when the
    model was fitted without intercepts).
    """

    u_center1: float
    u_center2: float
    u_orth1: float
    u_orth2: float
    u_cross_offdiag: float
    z_center_u1: float
    z_center_u2: float
    z_orth1: float
    z_orth2: float
    z_cross: float

    def as_dict(self):
        return dict(self.__dict__)

    def max(self):
        return max(self.__dict__.values())


def _norm(m):
    return float(np.linalg.norm(m)) if m.size else 0.0


def constraint_residuals(model):
    n = model.n
    ones = np.ones((n, 1))
    u1, u2, z1, z2 = model.u1, model.u2, model.z1, model.z2
    cols = [u1, u2] if not model.intercept else [ones, u1, u2]
    base = np.hstack([c for c in cols if c.shape[1]]) if any(c.shape[1] for c in cols) \
        else np.zeros((n, 0))

    def orth_resid(m):
        if m.shape[1] == 0:
            return 0.0
        return _norm(m.T @ m - np.eye(m.shape[1]))

    cross = u1.T @ u2
    offdiag = cross - np.diag(np.diag(cross)) if cross.size else cross
    return ConstraintResiduals(
        u_center1=_norm(ones.T @ u1) if model.intercept else 0.0,
        u_center2=_norm(ones.T @ u2) if model.intercept else 0.0,
        u_orth1=orth_resid(u1),
        u_orth2=orth_resid(u2),
        u_cross_offdiag=_norm(offdiag),
        z_center_u1=_norm(base.T @ z1),
        z_center_u2=_norm(base.T @ z2),
        z_orth1=orth_resid(z1),
        z_orth2=orth_resid(z2),
        z_cross=_norm(z1.T @ z2),
    )


# ---------------------------------------------------------------------------
# serialization: JSON document with column-major matrices, per-matrix CSV
# ---------------------------------------------------------------------------

_MATRIX_FIELDS = ("mu1", "mu2", "u1", "u2", "v1", "v2", "z1", "z2", "a1", "a2",
                  "corrs")


def _encode_matrix(m):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return {"shape": list(m.shape), "data": m.flatten(order="F").tolist()}


def _decode_matrix(doc):
    shape = tuple(doc["shape"])
    return np.array(doc["data"], dtype=float).reshape(shape, order="F")


def model_to_dict(model):
    return {
        "dims": {"n": model.n, "p1": model.p1, "p2": model.p2},
        "ranks": {"r0": model.r0, "r1": model.r1, "r2": model.r2},
        "families": {
            "fam1": {"kind": model.fam1.kind, "trials": model.fam1.trials},
            "fam2": {"kind": model.fam2.kind, "trials": model.fam2.trials},
        },
        "intercept": model.intercept,
        "matrices": {name: _encode_matrix(getattr(model, name))
                     for name in _MATRIX_FIELDS},
    }


def model_from_dict(doc):
    mats = {name: _decode_matrix(doc["matrices"][name]) for name in _MATRIX_FIELDS}
    for name in ("mu1", "mu2", "corrs"):
        mats[name] = mats[name].ravel()
    fam = doc["families"]
    return EccaModel(
        fam1=Family(fam["fam1"]["kind"], int(fam["fam1"]["trials"])),
        fam2=Family(fam["fam2"]["kind"], int(fam["fam2"]["trials"])),
        intercept=bool(doc.get("intercept", True)),
        **mats,
    )


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def export_matrices_csv(model, out_dir):
    """One headerless CSV per matrix block, named after the field."""
    from .io import save_matrix_csv
    import os

    os.makedirs(out_dir, exist_ok=True)
    for name in _MATRIX_FIELDS:
        save_matrix_csv(np.atleast_2d(getattr(model, name)),
                        os.path.join(out_dir, f"{name}.csv"))
