import numpy as np
import pytest

from softcondorcet import (
    SgdConfig,
    Vote,
    build_profile,
    fit_sgd,
    online_pass,
    sigmoid_loss,
    sigmoid_loss_gradient,
    update_online,
)
from softcondorcet.data import random_mallows_profile
from softcondorcet.sgd import BallotSampler, TrainingTrace, induced_ranking, project, soft_discrepancy

A, B, C = 0, 1, 2


def test_soft_discrepancy_values():
    assert soft_discrepancy(3.0, 3.0, 0.7) == 0.5
    assert soft_discrepancy(20.0, 10.0, 1.0) == pytest.approx(1 / (1 + np.exp(10)), rel=1e-12)
    assert soft_discrepancy(20.0, 10.0, 1.0) == pytest.approx(4.54e-5, rel=1e-3)
    rng = np.random.default_rng(0)
    for a, b, tau in rng.uniform(0.1, 50, size=(20, 3)):
        assert soft_discrepancy(a, b, tau) + soft_discrepancy(b, a, tau) == pytest.approx(1.0)


def test_loss_approaches_discrete_count(tie):
    assert sigmoid_loss(tie, np.array([20.0, 10.0, 30.0]), 0.01) == pytest.approx(5.0, abs=1e-3)


def test_loss_trivial_cases():
    assert sigmoid_loss([Vote((0, 1, 2))], np.full(3, 7.0), 1.0) == pytest.approx(1.5)
    assert sigmoid_loss([], np.zeros(3), 1.0) == 0.0


def test_loss_weights_multiplicity():
    theta = np.array([1.0, 4.0, 2.0])
    one = sigmoid_loss([Vote((0, 1, 2))], theta, 2.0)
    assert sigmoid_loss([Vote((0, 1, 2), 3)], theta, 2.0) == pytest.approx(3 * one)


def test_gradient_single_pair():
    g = sigmoid_loss_gradient([Vote((0, 1))], np.array([5.0, 5.0]), 1.0)
    np.testing.assert_allclose(g, [-0.25, 0.25])


def test_gradient_absent_alternatives_zero():
    g = sigmoid_loss_gradient([Vote((3, 1))], np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 1.0)
    assert g[0] == 0.0 and g[2] == 0.0 and g[4] == 0.0
    assert g.sum() == pytest.approx(0.0, abs=1e-15)


def _finite_difference(batch, theta, tau, h=1e-5):
    out = np.empty_like(theta)
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = h
        out[k] = (sigmoid_loss(batch, theta + e, tau) - sigmoid_loss(batch, theta - e, tau)) / (2 * h)
    return out


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(2, 8))
        votes = [
            Vote(tuple(int(a) for a in rng.permutation(m)[: rng.integers(2, m + 1)]), int(rng.integers(1, 4)))
            for _ in range(rng.integers(1, 6))
        ]
        tau = float(rng.uniform(0.5, 5.0))
        theta = rng.uniform(0, 10, m)
        g = sigmoid_loss_gradient(votes, theta, tau)
        fd = _finite_difference(votes, theta, tau)
        assert abs(g.sum()) < 1e-12
        # floor: cancelling votes give an exactly zero gradient
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-4))
    assert worst <= 1e-5


def test_project():
    np.testing.assert_array_equal(project(np.array([120.0, 50.0, -3.0])), [100.0, 50.0, 0.0])


def test_induced_ranking():
    assert induced_ranking(np.array([20.0, 10.0, 30.0])) == (C, A, B)
    assert induced_ranking(np.full(4, 3.0)) == (0, 1, 2, 3)
    assert induced_ranking(np.arange(5.0)) == (4, 3, 2, 1, 0)


def test_translation_invariance(tie):
    theta = np.array([12.0, 47.0, 31.0])
    assert sigmoid_loss(tie, theta + 13.5, 2.0) == pytest.approx(sigmoid_loss(tie, theta, 2.0))
    assert induced_ranking(theta + 13.5) == induced_ranking(theta)


def test_update_online_examples():
    theta = np.array([50.0, 50.0, 10.0])
    out = update_online(theta, Vote((0, 1)), alpha=0.1, tau=1.0)
    np.testing.assert_allclose(out, [50.025, 49.975, 10.0])
    assert out[2] == theta[2]


def test_update_online_touches_only_vote():
    rng = np.random.default_rng(3)
    theta = rng.uniform(0, 100, 9)
    vote = (7, 2, 4)
    out = update_online(theta, vote, 0.5, 1.5)
    untouched = np.setdiff1d(np.arange(9), vote)
    np.testing.assert_array_equal(out[untouched], theta[untouched])


def test_update_online_projects():
    out = update_online(np.array([100.0, 0.0]), (0, 1), alpha=10.0, tau=1.0)
    np.testing.assert_array_equal(out, [100.0, 0.0])


def test_online_pass_equals_unit_batch_sgd():
    p = random_mallows_profile(5, 40, 0.8, seed=1)
    cfg = SgdConfig(learning_rate=0.7, temperature=1.0, batch_size=1, iterations=p.n, seed=9)
    ratings, _ = fit_sgd(p, cfg, record_loss=False)
    sampler = BallotSampler(p, np.random.default_rng(9))
    order = [int(b[0]) for b in sampler.draw_batches(p.n, 1)]
    theta = online_pass(p, order, 0.7, 1.0)
    np.testing.assert_allclose(theta, ratings.theta, rtol=0, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.01, 0.1])
@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_full_gd_reaches_kemeny_ranking(warm, alpha, tau):
    cfg = SgdConfig(learning_rate=alpha, temperature=tau, batch_size=None, iterations=10_000)
    ratings, trace = fit_sgd(warm, cfg, record_loss=False)
    assert ratings.ranking() == (C, A, B)
    assert trace.convergence_iteration((C, A, B)) is not None


def test_stochastic_sgd_reaches_kemeny_ranking(warm):
    for seed in range(3):
        cfg = SgdConfig(learning_rate=0.1, temperature=1.0, batch_size=2, iterations=10_000, seed=seed)
        assert fit_sgd(warm, cfg, record_loss=False)[0].ranking() == (C, A, B)


def test_fit_is_deterministic():
    p = random_mallows_profile(6, 50, 0.7, seed=5)
    cfg = SgdConfig(learning_rate=0.3, batch_size=4, iterations=500, seed=11)
    r1, t1 = fit_sgd(p, cfg)
    r2, t2 = fit_sgd(p, cfg)
    assert r1.theta.tobytes() == r2.theta.tobytes()
    assert t1.losses == t2.losses and t1.rankings == t2.rankings
    r3, _ = fit_sgd(p, SgdConfig(learning_rate=0.3, batch_size=4, iterations=500, seed=12))
    assert r3.theta.tobytes() != r1.theta.tobytes()


def test_trace_cadence_and_monotone_iterations(tie):
    _, trace = fit_sgd(tie, SgdConfig(iterations=5000, batch_size=2))
    assert trace.iterations[0] == 5 and trace.iterations[-1] == 5000
    assert len(trace) == 1000
    assert all(a < b for a, b in zip(trace.iterations, trace.iterations[1:]))


def test_trace_rejects_non_increasing():
    t = TrainingTrace()
    t.record(3, 0.0, (0,))
    with pytest.raises(ValueError):
        t.record(3, 0.0, (0,))


def test_convergence_iteration_requires_staying():
    t = TrainingTrace()
    for i, r in enumerate([(0, 1), (1, 0), (0, 1), (1, 0), (1, 0)], start=1):
        t.record(i, 0.0, r)
    assert t.convergence_iteration((1, 0)) == 4
    assert t.convergence_iteration((0, 1)) is None


def test_inverse_sqrt_schedule():
    cfg = SgdConfig(learning_rate=2.0, schedule="inv_sqrt")
    assert cfg.step_size(4) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kwargs", [dict(learning_rate=0), dict(temperature=-1), dict(batch_size=0), dict(iterations=0),
               dict(schedule="cosine")]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SgdConfig(**kwargs)


def test_empty_profile_rejected():
    with pytest.raises(ValueError):
        fit_sgd(build_profile([], alternatives=2), SgdConfig())


def test_multiplicities_expanded_for_sampling():
    p = build_profile([((0, 1), 99), ((1, 0), 1)], alternatives=2)
    idx = BallotSampler(p, np.random.default_rng(0)).draw(20_000)
    assert np.mean(idx == 0) == pytest.approx(0.99, abs=0.005)
