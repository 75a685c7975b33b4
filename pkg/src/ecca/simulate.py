"""Feasible ground-truth generation and noisy observations.

Joint scores come from scaling the leading left singular vectors of a
centered Gaussian draw by the square root of the 2x2-block correlation
matrix [[I, L], [L, I]], which makes every constraint hold exactly.
Individual scores are singular vectors of a Gaussian draw projected off the
joint block. Loadings are signed-uniform draws, rescaled per view: Gaussian
views get their stated singular-value intervals, Binomial views get the
largest centered-signal scale keeping at least 99% of the expected
proportions inside [0.01, 0.99]. Observations add Gaussian noise at a target
signal-to-noise ratio or draw Binomial counts.

Everything is a pure function of (scenario, seed) through a counter-based
Philox generator, so replicates are reproducible bit for bit.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError
from .families import Family, mean as fam_mean
from .model import EccaModel, assemble_theta, constraint_residuals

# singular-value targets for Gaussian views: joint block, then individual
# block per view
JOINT_SV_RANGE = (22.0, 26.4)
INDIV_SV_RANGE = {1: (15.0, 18.0), 2: (18.0, 21.6)}
BINOM_PROP_RANGE = (0.01, 0.99)
BINOM_COVERAGE = 0.99


@dataclass(frozen=True)
class SimScenario:
    n: int
    p1: int
    p2: int
    r0: int
    r1: int
    r2: int
    corrs: tuple
    fam1: Family
    fam2: Family
    snr: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if 2 * self.r0 > self.n:
            raise InvalidInputError("need 2*r0 <= n")
        if not 0 <= self.r0 <= min(self.r1, self.r2):
            raise InvalidInputError("need 0 <= r0 <= min(r1, r2)")
        if self.r1 > min(self.n - 1, self.p1) or self.r2 > min(self.n - 1, self.p2):
            raise InvalidInputError("total ranks exceed min(n - 1, p_k)")
        corrs = tuple(float(c) for c in self.corrs)
        if len(corrs) != self.r0:
            raise InvalidInputError("corrs length must equal r0")
        if any(not 0.0 < c <= 1.0 for c in corrs):
            raise InvalidInputError("correlations must lie in (0, 1]")
        if any(corrs[i] < corrs[i + 1] for i in range(len(corrs) - 1)):
            raise InvalidInputError("correlations must be descending")
        object.__setattr__(self, "corrs", corrs)


@dataclass
class SimTruth:
    scenario: SimScenario
    model: EccaModel
    theta1: np.ndarray
    theta2: np.ndarray
    x1: np.ndarray
    x2: np.ndarray


def setting_scenario(setting, seed=0, snr=5.0, trials=100, noiseless=False):
    """The benchmark scenarios: n=50, p=(30, 20), ranks (3, 7, 6), canonical
    correlations (1, 0.9, 0.7); setting 1 is Gaussian/Gaussian, 2 is
    Gaussian/Binomial, 3 is Binomial/Binomial with `trials` trials."""
    gaussian = Family("gaussian")
    binom = Family("binomial", trials)
    fams = {1: (gaussian, gaussian), 2: (gaussian, binom), 3: (binom, binom)}
    if setting not in fams:
        raise InvalidInputError("setting must be 1, 2 or 3")
    fam1, fam2 = fams[setting]
    return SimScenario(n=50, p1=30, p2=20, r0=3, r1=7, r2=6,
                       corrs=(1.0, 0.9, 0.7), fam1=fam1, fam2=fam2,
                       snr=float("inf") if noiseless else snr, seed=seed)


def make_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def gen_joint_scores(n, corrs, rng):
    """Centered orthonormal pairs U1, U2 with U1'U2 = diag(corrs) exactly."""
    corrs = np.asarray(corrs, dtype=float)
    r0 = corrs.size
    if r0 == 0:
        return np.zeros((n, 0)), np.zeros((n, 0))
    if 2 * r0 > n:
        raise InvalidInputError("need 2*r0 <= n")
    lam = np.diag(corrs)
    k = np.block([[np.eye(r0), lam], [lam, np.eye(r0)]])
    evals, evecs = np.linalg.eigh(k)
    evals = np.clip(evals, 0.0, None)
    root = evecs * np.sqrt(evals)

    for attempt in range(2):
        g = rng.standard_normal((n, n))
        g -= g.mean(axis=0)
        u0, s, _ = np.linalg.svd(g, full_matrices=False)
        if s[2 * r0 - 1] > 1e-10 * s[0]:
            break
        if attempt == 1:
            raise DegenerateInputError("centered Gaussian draw lost rank twice")
    u_pair = u0[:, :2 * r0] @ root.T
    return u_pair[:, :r0], u_pair[:, r0:]


def gen_individual_scores(n, u1, u2, q1, q2, rng):
    """Orthonormal Z1, Z2 orthogonal to ones, both U blocks, and each other."""
    if q1 + q2 == 0:
        return np.zeros((n, 0)), np.zeros((n, 0))
    block = np.hstack([np.ones((n, 1)), u1, u2])
    if block.shape[1] + q1 + q2 > n:
        raise InvalidInputError("not enough samples for the requested ranks")
    qb, _ = np.linalg.qr(block)
    for attempt in range(2):
        z = rng.standard_normal((n, q1 + q2))
        z -= qb @ (qb.T @ z)
        p, s, _ = np.linalg.svd(z, full_matrices=False)
        if s[-1] > 1e-10 * s[0]:
            break
        if attempt == 1:
            raise DegenerateInputError("projected Gaussian draw lost rank twice")
    return p[:, :q1], p[:, q1:q1 + q2]


def _signed_uniform(rng, lo, hi, shape):
    mags = rng.uniform(lo, hi, size=shape)
    signs = rng.integers(0, 2, size=shape) * 2 - 1
    return mags * signs


def _scale_to_interval(block, lo, hi):
    """Rescale a loading block so its singular values (equal to those of the
    score x loading' product, the scores being orthonormal) land strictly
    inside (lo, hi). A single scalar works when the spread allows it;
    otherwise the spectrum is remapped affinely into the interval."""
    if block.shape[1] == 0:
        return block
    w, s, vt = np.linalg.svd(block, full_matrices=False)
    smin, smax = s[-1], s[0]
    if smin <= 0.0:
        raise DegenerateInputError("rank-deficient loading draw")
    c = np.sqrt(lo * hi) / np.sqrt(smin * smax)
    if lo < c * smin and c * smax < hi:
        return c * block
    margin = 0.02 * (hi - lo)
    tlo, thi = lo + margin, hi - margin
    if smax == smin:
        new = np.full_like(s, 0.5 * (tlo + thi))
    else:
        new = tlo + (s - smin) * (thi - tlo) / (smax - smin)
    return (w * new) @ vt


def _scale_binomial_view(fam, mu_part, centered):
    """Largest factor on the centered signal keeping >= 99% of the expected
    proportions inside [0.01, 0.99] (operationalizes 'not too many zeros or
    ones' while keeping the signal as strong as allowed)."""
    if not np.any(centered):
        return 1.0
    lo, hi = BINOM_PROP_RANGE

    def coverage(beta):
        p = fam_mean(fam, mu_part + beta * centered)
        return np.mean((p >= lo) & (p <= hi))

    if coverage(1.0) < BINOM_COVERAGE:
        left, right = 0.0, 1.0
    else:
        right = 1.0
        while coverage(right * 2.0) >= BINOM_COVERAGE and right < 2 ** 40:
            right *= 2.0
        left = right
        right *= 2.0
    for _ in range(60):
        mid = 0.5 * (left + right)
        if coverage(mid) >= BINOM_COVERAGE:
            left = mid
        else:
            right = mid
    # haircut: at the exact solution ~1% of entries sit on the boundary and
    # an ulp of recomputation noise could push them outside
    return left * (1.0 - 1e-9)


def gen_loadings_and_theta(scn, u1, u2, z1, z2, rng):
    """Intercepts, loadings and the implied natural parameters per view."""
    out = {}
    for view, (p, u, z, fam) in enumerate(
            [(scn.p1, u1, z1, scn.fam1), (scn.p2, u2, z2, scn.fam2)], start=1):
        mu = _signed_uniform(rng, 0.5, 1.0, p)
        v = _signed_uniform(rng, 1.0, 2.0, (p, scn.r0))
        a = _signed_uniform(rng, 1.0, 2.0, (p, z.shape[1]))
        if fam.is_gaussian:
            v = _scale_to_interval(v, *JOINT_SV_RANGE)
            a = _scale_to_interval(a, *INDIV_SV_RANGE[view])
        else:
            centered = np.zeros((scn.n, p))
            if v.shape[1]:
                centered += u @ v.T
            if a.shape[1]:
                centered += z @ a.T
            beta = _scale_binomial_view(fam, np.tile(mu, (scn.n, 1)), centered)
            v = beta * v
            a = beta * a
        theta = np.tile(mu, (scn.n, 1))
        if v.shape[1]:
            theta = theta + u @ v.T
        if a.shape[1]:
            theta = theta + z @ a.T
        out[view] = (mu, v, a, theta)
    return out[1], out[2]


def gen_observations(scn, theta1, theta2, rng):
    """Noisy data per family: Gaussian noise at the scenario SNR (sigma^2 =
    ||theta||_F^2 / (n p snr); snr=inf means noiseless), or Binomial counts
    over m trials divided by m."""
    xs = []
    for theta, fam in ((theta1, scn.fam1), (theta2, scn.fam2)):
        if fam.is_gaussian:
            if np.isinf(scn.snr):
                xs.append(theta.copy())
            else:
                sigma2 = float(np.sum(theta ** 2)) / (theta.size * scn.snr)
                xs.append(theta + np.sqrt(sigma2) * rng.standard_normal(theta.shape))
        else:
            p = fam_mean(fam, theta)
            xs.append(rng.binomial(fam.trials, p) / float(fam.trials))
    return xs[0], xs[1]


def simulate(scn):
    """Draw a full replicate: ground-truth model, natural parameters, data."""
    rng = make_rng(scn.seed)
    u1, u2 = gen_joint_scores(scn.n, scn.corrs, rng)
    z1, z2 = gen_individual_scores(scn.n, u1, u2, scn.r1 - scn.r0,
                                   scn.r2 - scn.r0, rng)
    (mu1, v1, a1, theta1), (mu2, v2, a2, theta2) = \
        gen_loadings_and_theta(scn, u1, u2, z1, z2, rng)
    x1, x2 = gen_observations(scn, theta1, theta2, rng)
    model = EccaModel(mu1=mu1, mu2=mu2, u1=u1, u2=u2, v1=v1, v2=v2,
                      z1=z1, z2=z2, a1=a1, a2=a2,
                      corrs=np.asarray(scn.corrs), fam1=scn.fam1, fam2=scn.fam2)
    if constraint_residuals(model).max() > 1e-10:
        raise DegenerateInputError("generated truth violates constraints")
    for view, theta in ((1, theta1), (2, theta2)):
        if np.max(np.abs(assemble_theta(model, view) - theta)) > 1e-12:
            raise DegenerateInputError("generated theta inconsistent")
    return SimTruth(scenario=scn, model=model, theta1=theta1, theta2=theta2,
                    x1=x1, x2=x2)


def scenario_to_dict(scn):
    return {
        "n": scn.n, "p1": scn.p1, "p2": scn.p2,
        "r0": scn.r0, "r1": scn.r1, "r2": scn.r2,
        "corrs": list(scn.corrs),
        "fam1": {"kind": scn.fam1.kind, "trials": scn.fam1.trials},
        "fam2": {"kind": scn.fam2.kind, "trials": scn.fam2.trials},
        "snr": scn.snr if np.isfinite(scn.snr) else "inf",
        "seed": scn.seed,
    }


def scenario_from_dict(doc):
    snr = doc.get("snr", 5.0)
    return SimScenario(
        n=int(doc["n"]), p1=int(doc["p1"]), p2=int(doc["p2"]),
        r0=int(doc["r0"]), r1=int(doc["r1"]), r2=int(doc["r2"]),
        corrs=tuple(doc["corrs"]),
        fam1=Family(doc["fam1"]["kind"], int(doc["fam1"]["trials"])),
        fam2=Family(doc["fam2"]["kind"], int(doc["fam2"]["trials"])),
        snr=float("inf") if snr == "inf" else float(snr),
        seed=int(doc["seed"]))


def save_scenario(scn, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scn), fh, indent=1)
