import numpy as np
import pytest

from softcondorcet import FyConfig, Vote, build_profile, fit_fy, fy_gradient, fy_loss, perturbed_ranks
from softcondorcet.fenchel_young import hard_ranks, target_ranks

A, B, C = 0, 1, 2


def test_hard_ranks_examples():
    v = np.array([0.18, -1.28, 0.65, 1.25, 0.25, -0.12])
    np.testing.assert_array_equal(hard_ranks(v), [2, 0, 4, 5, 3, 1])
    np.testing.assert_array_equal(hard_ranks(np.arange(6.0)), np.arange(6))
    np.testing.assert_array_equal(hard_ranks(np.zeros(3)), [0, 1, 2])


def test_target_ranks_orientation():
    # most preferred element gets the highest rank value
    np.testing.assert_array_equal(target_ranks(4), [3, 2, 1, 0])


def test_perturbed_ranks_vanishing_noise():
    theta = np.array([3.0, -1.0, 7.0, 0.5])
    out = perturbed_ranks(theta, 1e-6, 1, np.random.default_rng(0))
    np.testing.assert_allclose(out, hard_ranks(theta), atol=1e-6)


def test_perturbed_ranks_exchangeable():
    out = perturbed_ranks(np.array([2.0, 2.0]), 1.0, 100_000, np.random.default_rng(1))
    np.testing.assert_allclose(out, [0.5, 0.5], atol=0.02)


def test_perturbed_ranks_range_and_sum():
    rng = np.random.default_rng(2)
    for L in range(1, 8):
        out = perturbed_ranks(rng.normal(size=L), 0.7, 50, rng)
        assert np.all(out >= 0) and np.all(out <= L - 1)
        assert out.sum() == pytest.approx(L * (L - 1) / 2, abs=1e-12)
        sample = perturbed_ranks(rng.normal(size=L), 0.7, 1, rng)
        assert sorted(sample.astype(int).tolist()) == list(range(L))


def test_perturbed_ranks_monotone_under_common_noise():
    rng = np.random.default_rng(3)
    for _ in range(30):
        theta = rng.normal(size=5)
        k = int(rng.integers(5))
        bumped = theta.copy()
        bumped[k] += rng.uniform(0.01, 2.0)
        seed = int(rng.integers(1 << 30))
        base = perturbed_ranks(theta, 1.0, 200, np.random.default_rng(seed))
        up = perturbed_ranks(bumped, 1.0, 200, np.random.default_rng(seed))
        assert up[k] >= base[k]


def test_gradient_zero_when_order_agrees():
    cfg = FyConfig(epsilon=1e-9)
    theta = np.array([10.0, 30.0, 20.0, 5.0])
    g = fy_gradient([Vote((1, 2, 0))], theta, cfg, np.random.default_rng(0))
    np.testing.assert_allclose(g, 0.0, atol=1e-12)
    assert g[3] == 0.0


def test_gradient_two_way_tie():
    cfg = FyConfig(mc_samples=200_000)
    g = fy_gradient([Vote((0, 1))], np.array([4.0, 4.0, 9.0]), cfg, np.random.default_rng(4))
    np.testing.assert_allclose(g[:2], [-0.5, 0.5], atol=0.01)
    assert g[2] == 0.0


def test_loss_singleton_vote_constant():
    cfg = FyConfig()
    losses = {fy_loss([Vote((1,))], np.array([0.0, t]), cfg, np.random.default_rng(0), 100) for t in (-5.0, 0.0, 8.0)}
    assert losses == {0.0}


def test_loss_translation_invariant():
    cfg = FyConfig(mc_samples=1)
    votes = [Vote((0, 2, 1)), Vote((1, 0), 2)]
    theta = np.array([1.0, 4.0, -2.0])
    a = fy_loss(votes, theta, cfg, np.random.default_rng(7), 500)
    b = fy_loss(votes, theta + 11.0, cfg, np.random.default_rng(7), 500)
    assert a == pytest.approx(b, abs=1e-9)


def test_loss_decreases_along_gradient_on_average():
    votes = [Vote((0, 1, 2, 3)), Vote((2, 0, 3)), Vote((1, 3), 2)]
    cfg = FyConfig(mc_samples=1)
    drops = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        theta = rng.normal(0, 2, 4)
        g = fy_gradient(votes, theta, FyConfig(mc_samples=2000), rng)
        before = fy_loss(votes, theta, cfg, np.random.default_rng(1000 + seed), 20_000)
        after = fy_loss(votes, theta - 0.2 * g, cfg, np.random.default_rng(1000 + seed), 20_000)
        drops.append(before - after)
    assert np.mean(drops) > 0
    assert np.mean(np.array(drops) > 0) >= 0.8


def test_loss_convexity_surrogate():
    votes = [Vote((0, 1, 2)), Vote((2, 1)), Vote((1, 0, 2), 3)]
    cfg = FyConfig()
    rng = np.random.default_rng(5)
    for _ in range(10):
        t1, t2 = rng.normal(0, 3, 3), rng.normal(0, 3, 3)
        lam = rng.uniform(0.1, 0.9)
        f = lambda t: fy_loss(votes, t, cfg, np.random.default_rng(99), 40_000)
        assert f(lam * t1 + (1 - lam) * t2) <= lam * f(t1) + (1 - lam) * f(t2) + 0.02


def test_fit_top_ranks_a_on_warm(warm):
    ratings, _ = fit_fy(warm, FyConfig(batch_size=None, iterations=2000))
    assert ratings.ranking()[0] == A


@pytest.mark.parametrize("seed", range(5))
def test_fit_recovers_unanimous_order(seed):
    order = tuple(int(a) for a in np.random.default_rng(seed).permutation(5))
    p = build_profile([(order, 4)], alternatives=5)
    ratings, _ = fit_fy(p, FyConfig(batch_size=2, iterations=3000, seed=seed))
    assert ratings.ranking() == order


def test_fit_deterministic(tie):
    cfg = FyConfig(batch_size=2, iterations=300, seed=8)
    r1, t1 = fit_fy(tie, cfg)
    r2, t2 = fit_fy(tie, cfg)
    assert r1.theta.tobytes() == r2.theta.tobytes()
    assert t1.losses == t2.losses
    assert np.all((r1.theta >= 0) & (r1.theta <= 100))
