"""Exponential-family primitives on natural-parameter matrices.

Each entry x has log density x*theta - b(theta) + c(x). Two families are
supported: Gaussian with unit variance, where b(theta) = theta^2 / 2, and
Binomial proportions with m trials, where b(theta) = m*log(1 + exp(theta/m))
and theta = m*logit(p). The first derivative b' is the mean, the second b''
the variance; additive constants c(x) are dropped everywhere since only
likelihood differences drive the algorithms.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

GAUSSIAN = "gaussian"
BINOMIAL = "binomial"


@dataclass(frozen=True)
class Family:
    """Distribution tag: 'gaussian' (unit variance) or 'binomial' with m trials.

    For proportions data, m also acts as a relative weight between views; it
    is always user supplied, never guessed.
    """

    kind: str
    trials: int = 1

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, BINOMIAL):
            raise InvalidInputError(f"unknown family kind {self.kind!r}")
        if self.kind == BINOMIAL and self.trials < 1:
            raise InvalidInputError("binomial family requires trials >= 1")

    @property
    def is_gaussian(self):
        return self.kind == GAUSSIAN


def gaussian():
    return Family(GAUSSIAN)


def binomial(trials):
    return Family(BINOMIAL, int(trials))


def _softplus(u):
    # log(1 + exp(u)) = max(u, 0) + log1p(exp(-|u|)); stable for |u| large
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


def _sigmoid(u):
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def cumulant(fam, theta):
    """b(theta), elementwise."""
    theta = np.asarray(theta, dtype=float)
    if fam.is_gaussian:
        return 0.5 * theta * theta
    m = float(fam.trials)
    return m * _softplus(theta / m)


def mean(fam, theta):
    """b'(theta): the entrywise mean (Gaussian) or success probability."""
    theta = np.asarray(theta, dtype=float)
    if fam.is_gaussian:
        return theta.copy()
    return _sigmoid(theta / float(fam.trials))


def variance(fam, theta):
    """b''(theta): entrywise variance; p(1-p)/m for Binomial proportions."""
    theta = np.asarray(theta, dtype=float)
    if fam.is_gaussian:
        return np.ones_like(theta)
    p = _sigmoid(theta / float(fam.trials))
    return p * (1.0 - p) / float(fam.trials)


def eval_b(fam, theta):
    """Return (b, b', b'') at theta. Raises on non-finite input."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise InvalidInputError("theta must be finite")
    return cumulant(fam, theta), mean(fam, theta), variance(fam, theta)


def _check_data(fam, x):
    x = np.asarray(x, dtype=float)
    if fam.kind == BINOMIAL and (np.any(x < 0.0) or np.any(x > 1.0)):
        raise InvalidInputError("binomial proportions must lie in [0, 1]")
    return x


def nll_terms(fam, x, theta):
    """Entrywise negative log-likelihood contributions -x*theta + b(theta)."""
    x = _check_data(fam, x)
    theta = np.asarray(theta, dtype=float)
    if x.shape != theta.shape:
        raise InvalidInputError(
            f"shape mismatch: data {x.shape} vs parameters {theta.shape}")
    return cumulant(fam, theta) - x * theta


def nll(fam, x, theta):
    """Negative log-likelihood sum_ij [-x_ij theta_ij + b(theta_ij)], constants dropped."""
    return float(np.sum(nll_terms(fam, x, theta)))


def saturated_theta(fam, x):
    """Entrywise unconstrained MLE of the natural parameters.

    Gaussian: the data itself. Binomial: exact zeros are replaced by
    0.375/(m + 0.75) and exact ones by (m + 0.375)/(m + 0.75) before applying
    m*logit, so the result is always finite.
    """
    x = _check_data(fam, x)
    if fam.is_gaussian:
        return x.copy()
    m = float(fam.trials)
    adj = np.array(x, dtype=float, copy=True)
    adj[adj == 0.0] = 0.375 / (m + 0.75)
    adj[adj == 1.0] = (m + 0.375) / (m + 0.75)
    return m * (np.log(adj) - np.log1p(-adj))
