import numpy as np
import pytest

from conftest import cached_truth, random_orthonormal
from ecca.errors import DegenerateInputError
from ecca.families import nll
from ecca.fit import initialize
from ecca.metrics import chordal_distance
from ecca.soc import SocOptions, gaussian_prox_scores, gaussian_u_closed_form, \
    gaussian_z_closed_form, soc_update_scores_single, soc_update_u, soc_update_z


def stage_context(setting, seed):
    """Fit state right after initialization, everything the score updates need."""
    truth = cached_truth(setting, seed)
    scn = truth.scenario
    init = initialize(truth.x1, truth.x2, scn.fam1, scn.fam2,
                      scn.r0, scn.r1, scn.r2)
    n = scn.n
    ones = np.ones((n, 1))
    ctx = dict(truth=truth, scn=scn, init=init, ones=ones)
    ctx["base1"] = np.tile(init.mu1, (n, 1)) + init.u1 @ init.v1.T
    ctx["base2"] = np.tile(init.mu2, (n, 1)) + init.u2 @ init.v2.T
    ctx["constraint_u"] = np.hstack([ones, init.u1, init.u2])
    ctx["basez1"] = np.tile(init.mu1, (n, 1)) + init.z1 @ init.a1.T
    ctx["basez2"] = np.tile(init.mu2, (n, 1)) + init.z2 @ init.a2.T
    ctx["z_full"] = np.hstack([ones, init.z1, init.z2])
    return ctx


def blockdiag(a1, a2):
    p1, q1 = a1.shape
    p2, q2 = a2.shape
    out = np.zeros((p1 + p2, q1 + q2))
    out[:p1, :q1] = a1
    out[p1:, q1:] = a2
    return out


# ---------------------------------------------------------------------------
# gaussian_prox_scores
# ---------------------------------------------------------------------------

def test_prox_identity_design_balance(rng):
    w = rng.standard_normal((6, 3))
    z = gaussian_prox_scores(np.zeros((6, 3)), np.eye(3), 1.0, w)
    assert np.allclose(z, -w / 2.0, atol=1e-12)


def test_prox_large_gamma_shrinks_to_target(rng):
    y = rng.standard_normal((7, 4))
    z = gaussian_prox_scores(y, np.eye(4), 1e12, np.zeros((7, 4)))
    assert np.max(np.abs(z)) < 1e-10


def test_prox_stationarity(rng):
    y = rng.standard_normal((9, 5))
    a = rng.standard_normal((5, 3))
    w = rng.standard_normal((9, 3))
    gamma = 2.7
    z = gaussian_prox_scores(y, a, gamma, w)
    grad = 2.0 * (z @ a.T - y) @ a + 2.0 * gamma * (z + w)
    assert np.max(np.abs(grad)) < 1e-10


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def test_z_closed_form_recovers_exact_fit(rng):
    n, q = 12, 3
    constraint = np.hstack([np.ones((n, 1)),
                            random_orthonormal(rng, n, 2, centered=True)])
    resid = np.eye(n) - constraint @ np.linalg.pinv(constraint)
    zbar = np.linalg.svd(resid @ rng.standard_normal((n, q)),
                         full_matrices=False)[0][:, :q]
    a = rng.standard_normal((5, q)) * 2
    y = zbar @ a.T
    z = gaussian_z_closed_form(y, a, constraint)
    assert chordal_distance(z, zbar) < 1e-10


def test_z_closed_form_degenerate(rng):
    u = random_orthonormal(rng, 8, 2)
    y = u @ rng.standard_normal((2, 5))
    a = rng.standard_normal((5, 2))
    with pytest.raises(DegenerateInputError):
        gaussian_z_closed_form(y, a, u)


def test_z_closed_form_beats_random_feasible(rng):
    n, q = 10, 2
    constraint = np.ones((n, 1))
    y = rng.standard_normal((n, 6))
    a = rng.standard_normal((6, q))
    z_star = gaussian_z_closed_form(y, a, constraint)
    f_star = np.linalg.norm(y - z_star @ a.T) ** 2
    for _ in range(500):
        cand = rng.standard_normal((n, q))
        cand -= np.mean(cand, axis=0)
        qq, _ = np.linalg.qr(cand)
        cand = qq[:, :q]
        assert f_star <= np.linalg.norm(y - cand @ a.T) ** 2 + 1e-9


# ---------------------------------------------------------------------------
# splitting solvers
# ---------------------------------------------------------------------------

def test_soc_z_zero_width(rng):
    ctx = stage_context(1, 0)
    z1, z2, trace = soc_update_z(
        ctx["truth"].x1, ctx["truth"].x2, ctx["scn"].fam1, ctx["scn"].fam2,
        ctx["base1"], ctx["base2"], np.zeros((30, 0)), np.zeros((20, 0)),
        ctx["constraint_u"], np.zeros((50, 0)), np.zeros((50, 0)))
    assert z1.shape == (50, 0) and trace.n_iter == 0 and trace.converged


def test_soc_u_zero_width(rng):
    ctx = stage_context(1, 0)
    u1, u2, trace = soc_update_u(
        ctx["truth"].x1, ctx["truth"].x2, ctx["scn"].fam1, ctx["scn"].fam2,
        ctx["basez1"], ctx["basez2"], np.zeros((30, 0)), np.zeros((20, 0)),
        ctx["z_full"], np.zeros((50, 0)), np.zeros((50, 0)))
    assert u1.shape == (50, 0) and trace.n_iter == 0


@pytest.mark.parametrize("seed", [0, 1])
def test_soc_z_matches_gaussian_closed_form(seed):
    ctx = stage_context(1, seed)
    scn, truth, init = ctx["scn"], ctx["truth"], ctx["init"]
    opts = SocOptions(gamma=1000.0, max_iter=5000, primal_tol=1e-10,
                      dual_tol=1e-10)
    z1, z2, trace = soc_update_z(
        truth.x1, truth.x2, scn.fam1, scn.fam2, ctx["base1"], ctx["base2"],
        init.a1, init.a2, ctx["constraint_u"], init.z1, init.z2, opts)
    y = np.hstack([truth.x1 - ctx["base1"], truth.x2 - ctx["base2"]])
    z_cf = gaussian_z_closed_form(y, blockdiag(init.a1, init.a2),
                                  ctx["constraint_u"])
    assert trace.converged and not trace.diverged
    assert chordal_distance(np.hstack([z1, z2]), z_cf) < 1e-6


@pytest.mark.parametrize("seed", [0, 1])
def test_soc_u_matches_gaussian_closed_form(seed):
    ctx = stage_context(1, seed)
    scn, truth, init = ctx["scn"], ctx["truth"], ctx["init"]
    opts = SocOptions(gamma=1000.0, max_iter=5000, primal_tol=1e-10,
                      dual_tol=1e-10)
    u1, u2, trace = soc_update_u(
        truth.x1, truth.x2, scn.fam1, scn.fam2, ctx["basez1"], ctx["basez2"],
        init.v1, init.v2, ctx["z_full"], init.u1, init.u2, opts)
    u1_cf = gaussian_u_closed_form(truth.x1 - ctx["basez1"], init.v1,
                                   ctx["z_full"])
    u2_cf = gaussian_u_closed_form(truth.x2 - ctx["basez2"], init.v2,
                                   ctx["z_full"])
    assert trace.converged
    assert chordal_distance(u1, u1_cf) < 1e-6
    assert chordal_distance(u2, u2_cf) < 1e-6


def test_soc_output_exactly_feasible_even_unconverged():
    ctx = stage_context(3, 0)
    scn, truth, init = ctx["scn"], ctx["truth"], ctx["init"]
    opts = SocOptions(max_iter=3)  # far from converged
    z1, z2, trace = soc_update_z(
        truth.x1, truth.x2, scn.fam1, scn.fam2, ctx["base1"], ctx["base2"],
        init.a1, init.a2, ctx["constraint_u"], init.z1, init.z2, opts)
    z = np.hstack([z1, z2])
    assert not trace.converged
    assert np.linalg.norm(ctx["constraint_u"].T @ z) < 1e-8
    assert np.linalg.norm(z.T @ z - np.eye(z.shape[1])) < 1e-8


@pytest.mark.parametrize("setting,seed", [(2, 0), (2, 1), (3, 0), (3, 1)])
def test_soc_z_never_worsens_feasible_start(setting, seed):
    ctx = stage_context(setting, seed)
    scn, truth, init = ctx["scn"], ctx["truth"], ctx["init"]
    z1, z2, trace = soc_update_z(
        truth.x1, truth.x2, scn.fam1, scn.fam2, ctx["base1"], ctx["base2"],
        init.a1, init.a2, ctx["constraint_u"], init.z1, init.z2)

    def joint_obj(za, zb):
        return nll(scn.fam1, truth.x1, ctx["base1"] + za @ init.a1.T) + \
            nll(scn.fam2, truth.x2, ctx["base2"] + zb @ init.a2.T)

    assert joint_obj(z1, z2) <= joint_obj(init.z1, init.z2) + 1e-6
    assert trace.objective[0] == pytest.approx(joint_obj(init.z1, init.z2))


@pytest.mark.parametrize("setting,seed", [(2, 0), (3, 0)])
def test_soc_u_single_view_never_worsens(setting, seed):
    ctx = stage_context(setting, seed)
    scn, truth, init = ctx["scn"], ctx["truth"], ctx["init"]
    u2, trace = soc_update_scores_single(
        truth.x2, scn.fam2, ctx["basez2"], init.v2, ctx["z_full"], init.u2)
    before = nll(scn.fam2, truth.x2, ctx["basez2"] + init.u2 @ init.v2.T)
    after = nll(scn.fam2, truth.x2, ctx["basez2"] + u2 @ init.v2.T)
    assert after <= before + 1e-6
    assert np.linalg.norm(ctx["z_full"].T @ u2) < 1e-8
    assert np.linalg.norm(u2.T @ u2 - np.eye(u2.shape[1])) < 1e-8


def test_soc_binomial_converges_with_default_options():
    ctx = stage_context(3, 2)
    scn, truth, init = ctx["scn"], ctx["truth"], ctx["init"]
    z1, z2, trace = soc_update_z(
        truth.x1, truth.x2, scn.fam1, scn.fam2, ctx["base1"], ctx["base2"],
        init.a1, init.a2, ctx["constraint_u"], init.z1, init.z2)
    assert trace.converged and not trace.diverged
    assert trace.primal[-1] <= 1e-6 and trace.dual[-1] <= 1e-6
