import numpy as np
import pytest

from ecca.errors import InvalidInputError
from ecca.families import binomial, gaussian, mean as fam_mean
from ecca.model import assemble_theta, constraint_residuals
from ecca.simulate import SimScenario, gen_individual_scores, gen_joint_scores, \
    gen_loadings_and_theta, gen_observations, make_rng, setting_scenario, simulate


def test_scenario_validation():
    with pytest.raises(InvalidInputError):
        SimScenario(n=5, p1=4, p2=4, r0=3, r1=3, r2=3, corrs=(1, .9, .7),
                    fam1=gaussian(), fam2=gaussian())
    with pytest.raises(InvalidInputError):
        SimScenario(n=50, p1=30, p2=20, r0=2, r1=7, r2=6, corrs=(0.7, 0.9),
                    fam1=gaussian(), fam2=gaussian())


def test_joint_scores_constraints():
    rng = make_rng(0)
    u1, u2 = gen_joint_scores(50, (1.0, 0.9, 0.7), rng)
    lam = np.diag([1.0, 0.9, 0.7])
    assert np.linalg.norm(u1.T @ u2 - lam) <= 1e-10
    assert np.linalg.norm(u1.T @ u1 - np.eye(3)) <= 1e-10
    assert np.linalg.norm(u2.T @ u2 - np.eye(3)) <= 1e-10
    assert np.linalg.norm(u1.sum(axis=0)) <= 1e-10
    assert np.linalg.norm(u2.sum(axis=0)) <= 1e-10


def test_joint_scores_perfect_correlation():
    rng = make_rng(1)
    u1, u2 = gen_joint_scores(20, (1.0,), rng)
    assert np.max(np.abs(u1 - u2)) < 1e-10


def test_joint_scores_zero_width():
    rng = make_rng(2)
    u1, u2 = gen_joint_scores(10, (), rng)
    assert u1.shape == (10, 0) and u2.shape == (10, 0)


def test_individual_scores_constraints():
    rng = make_rng(3)
    u1, u2 = gen_joint_scores(50, (1.0, 0.9, 0.7), rng)
    z1, z2 = gen_individual_scores(50, u1, u2, 4, 3, rng)
    block = np.hstack([np.ones((50, 1)), u1, u2])
    z = np.hstack([z1, z2])
    assert np.linalg.norm(block.T @ z) <= 1e-10
    assert np.linalg.norm(z.T @ z - np.eye(7)) <= 1e-10


def test_individual_scores_tight_dimension():
    # n exactly 1 + 2 r0 + q1 + q2
    rng = make_rng(4)
    r0, q1, q2 = 2, 3, 2
    n = 1 + 2 * r0 + q1 + q2
    u1, u2 = gen_joint_scores(n, (0.8, 0.5), rng)
    z1, z2 = gen_individual_scores(n, u1, u2, q1, q2, rng)
    z = np.hstack([z1, z2])
    assert np.linalg.norm(z.T @ z - np.eye(q1 + q2)) <= 1e-10


def test_gaussian_loading_singular_value_intervals():
    for seed in range(5):
        scn = setting_scenario(1, seed=seed)
        rng = make_rng(seed)
        u1, u2 = gen_joint_scores(scn.n, scn.corrs, rng)
        z1, z2 = gen_individual_scores(scn.n, u1, u2, 4, 3, rng)
        (mu1, v1, a1, th1), (mu2, v2, a2, th2) = gen_loadings_and_theta(
            scn, u1, u2, z1, z2, rng)
        for block, (lo, hi) in ((u1 @ v1.T, (22.0, 26.4)),
                                (u2 @ v2.T, (22.0, 26.4)),
                                (z1 @ a1.T, (15.0, 18.0)),
                                (z2 @ a2.T, (18.0, 21.6))):
            s = np.linalg.svd(block, compute_uv=False)
            s = s[s > 1e-8]
            assert lo < s.min() and s.max() < hi


def test_binomial_proportion_coverage():
    for seed in range(5):
        truth = simulate(setting_scenario(3, seed=seed))
        for theta, fam in ((truth.theta1, truth.scenario.fam1),
                           (truth.theta2, truth.scenario.fam2)):
            p = fam_mean(fam, theta)
            frac_out = np.mean((p < 0.01) | (p > 0.99))
            assert frac_out <= 0.01 + 1e-12


def test_truth_model_consistency():
    truth = simulate(setting_scenario(2, seed=9))
    assert constraint_residuals(truth.model).max() <= 1e-10
    assert np.max(np.abs(assemble_theta(truth.model, 1) - truth.theta1)) <= 1e-12
    assert np.max(np.abs(assemble_theta(truth.model, 2) - truth.theta2)) <= 1e-12


def test_binomial_observations_grid():
    truth = simulate(setting_scenario(3, seed=0))
    m = truth.scenario.fam1.trials
    counts = truth.x1 * m
    assert np.max(np.abs(counts - np.round(counts))) < 1e-9
    assert truth.x1.min() >= 0.0 and truth.x1.max() <= 1.0


def test_gaussian_noise_matches_snr():
    truth = simulate(setting_scenario(1, seed=5))
    theta = truth.theta1
    sigma2 = float(np.sum(theta ** 2)) / (theta.size * 5.0)
    e = truth.x1 - theta
    ratio = float(np.sum(e ** 2)) / (theta.size * sigma2)
    assert 0.8 <= ratio <= 1.2


def test_sigma_identity():
    # ||theta||^2 = 100, n p = 100, snr = 5 -> sigma^2 = 0.2; check the noise
    # second moment on a large draw
    theta = np.full((10, 10), 1.0)
    scn = SimScenario(n=10, p1=10, p2=10, r0=0, r1=0, r2=0, corrs=(),
                      fam1=gaussian(), fam2=gaussian(), snr=5.0, seed=0)
    reps = []
    rng = make_rng(11)
    for _ in range(200):
        x1, _ = gen_observations(scn, theta, theta, rng)
        reps.append(np.mean((x1 - theta) ** 2))
    assert np.mean(reps) == pytest.approx(0.2, rel=0.05)


def test_binomial_mean_at_theta_zero():
    scn = SimScenario(n=40, p1=40, p2=4, r0=0, r1=0, r2=0, corrs=(),
                      fam1=binomial(100), fam2=binomial(100), seed=0)
    theta = np.zeros((40, 40))
    x1, _ = gen_observations(scn, theta, np.zeros((40, 4)), make_rng(17))
    assert abs(x1.mean() - 0.5) <= 0.05


def test_generation_deterministic():
    a = simulate(setting_scenario(2, seed=21))
    b = simulate(setting_scenario(2, seed=21))
    assert np.array_equal(a.x1, b.x1) and np.array_equal(a.x2, b.x2)
    assert np.array_equal(a.theta1, b.theta1)
    c = simulate(setting_scenario(2, seed=22))
    assert not np.array_equal(a.x1, c.x1)


def test_noiseless_flag():
    truth = simulate(setting_scenario(1, seed=1, noiseless=True))
    assert np.array_equal(truth.x1, truth.theta1)
