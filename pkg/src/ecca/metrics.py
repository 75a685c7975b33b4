"""Evaluation metrics: relative natural-parameter error and the chordal
distance between column spaces."""

import csv
import os
from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidInputError
from .linalg import orthonormal_basis


def relative_error(theta_hat, theta):
    """||theta_hat - theta||_F^2 / ||theta||_F^2 (invariant to the
    decomposition chosen for either argument)."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if theta_hat.shape != theta.shape:
        raise InvalidInputError("shapes differ")
    denom = float(np.sum(theta * theta))
    if denom == 0.0:
        raise InvalidInputError("reference matrix has zero norm")
    return float(np.sum((theta_hat - theta) ** 2)) / denom


def chordal_distance(j, j_hat):
    """(1/sqrt(2)) ||P_J - P_Jhat||_F via orthonormal bases of the column
    spaces; depends only on the spans of the two arguments."""
    j = np.asarray(j, dtype=float)
    j_hat = np.asarray(j_hat, dtype=float)
    if j.shape[0] != j_hat.shape[0]:
        raise InvalidInputError("row counts differ")
    if not j.size or not np.any(j) or not j_hat.size or not np.any(j_hat):
        raise InvalidInputError("zero matrix has no column space")
    q1 = orthonormal_basis(j)
    q2 = orthonormal_basis(j_hat)
    # explicit projector difference: no cancellation for nearby subspaces
    diff = q1 @ q1.T - q2 @ q2.T
    return float(np.linalg.norm(diff) / np.sqrt(2.0))


@dataclass
class EvalReport:
    setting: str
    rep: int
    view: int
    relative_error: float
    chordal_distance: float


def append_reports_csv(path, reports):
    """Append EvalReport rows to a CSV table, writing the header on creation."""
    names = [f.name for f in fields(EvalReport)]
    fresh = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(names)
        for rep in reports:
            writer.writerow([getattr(rep, n) for n in names])
