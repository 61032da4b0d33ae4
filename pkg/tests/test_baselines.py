import numpy as np
import pytest

from softcondorcet import (
    approval,
    borda,
    build_profile,
    condorcet_winner,
    copeland,
    elo_fit_mm,
    elo_online,
    elo_predict,
    elo_update_online,
    margin_matrix,
    plurality,
    preference_matrix,
    ranked_pairs,
)
from softcondorcet.baselines import approval_scores, borda_scores, plurality_scores
from softcondorcet.data import random_mallows_profile

A, B, C = 0, 1, 2


def test_elo_predict_values():
    assert elo_predict(1500, 1500) == 0.5
    assert elo_predict(1900, 1500) == pytest.approx(10 / 11)
    assert elo_predict(1100, 1500) == pytest.approx(1 / 11)
    rng = np.random.default_rng(0)
    for ri, rj, c in rng.uniform(-1000, 3000, size=(20, 3)):
        assert elo_predict(ri, rj) + elo_predict(rj, ri) == pytest.approx(1.0)
        assert elo_predict(ri + c, rj + c) == pytest.approx(elo_predict(ri, rj))


def test_elo_update_online():
    assert elo_update_online(1500.0, 1500.0, 1) == (1516.0, 1484.0)
    ri, rj = elo_update_online(5000.0, 0.0, 1)
    assert ri - 5000.0 == pytest.approx(0.0, abs=1e-9)
    rng = np.random.default_rng(1)
    for ri, rj in rng.uniform(1000, 2000, size=(10, 2)):
        a, b = elo_update_online(ri, rj, int(rng.integers(2)))
        assert a + b == pytest.approx(ri + rj)
    with pytest.raises(ValueError):
        elo_update_online(1.0, 2.0, 2)


def test_elo_update_is_scaled_logistic_gradient_step():
    # in logit units x = (r_i - r_j) ln10/400 the log-loss gradient is p - y
    rng = np.random.default_rng(2)
    for _ in range(20):
        ri, rj = rng.uniform(1000, 2000, 2)
        y = int(rng.integers(2))
        p = 1 / (1 + np.exp(-(ri - rj) * np.log(10) / 400))
        new_i, _ = elo_update_online(ri, rj, y, k_factor=32)
        assert new_i - ri == pytest.approx(-32 * (p - y))


def test_elo_online_processes_vote_pairs_in_order():
    p = build_profile([((2, 0, 1), 1)], alternatives=3)
    r = elo_online(p)
    expected = np.full(3, 1500.0)
    for a, b in [(2, 0), (2, 1), (0, 1)]:
        expected[a], expected[b] = elo_update_online(expected[a], expected[b], 1)
    np.testing.assert_allclose(r, expected)


def test_elo_mm_warm_prefers_a(warm):
    r = elo_fit_mm(warm)
    assert r[A] > r[C]


def test_elo_mm_tie_ties_a_and_c(tie):
    r = elo_fit_mm(tie)
    assert abs(r[A] - r[C]) < 1e-6


@pytest.mark.parametrize("w,l", [(3, 1), (7, 2), (1, 5)])
def test_elo_mm_two_player_closed_form(w, l):
    p = build_profile([((0, 1), w), ((1, 0), l)], alternatives=2)
    r = elo_fit_mm(p, prior_pseudocount=0.0)
    assert r[0] - r[1] == pytest.approx(400 * np.log10(w / l), abs=1e-6)
    assert r.mean() == pytest.approx(1500.0)


def test_elo_mm_likelihood_non_decreasing():
    p = random_mallows_profile(6, 40, 0.8, seed=3, partial_probability=0.5)
    hist = []
    elo_fit_mm(p, iterations=200, history=hist)
    assert len(hist) > 3
    assert all(b >= a - 1e-9 for a, b in zip(hist, hist[1:]))


def test_elo_mm_disconnected_graph_stays_finite():
    p = build_profile([((0, 1), 3), ((2, 3), 2)], alternatives=4)
    r = elo_fit_mm(p)
    assert np.all(np.isfinite(r))
    assert r[0] > r[1] and r[2] > r[3]


def test_copeland(tie, warm):
    assert copeland(tie)[0] == C
    assert copeland(warm)[0] == C
    assert copeland(build_profile([], alternatives=4)) == (0, 1, 2, 3)


def test_borda(tie, warm):
    np.testing.assert_array_equal(borda_scores(warm), [7, 2, 6])
    assert borda(warm)[0] == A
    np.testing.assert_array_equal(borda_scores(tie), [6, 3, 6])
    assert borda(tie)[:2] == (A, C)
    assert borda(build_profile([((3, 0, 2, 1), 1)], alternatives=4)) == (3, 0, 2, 1)


def test_borda_partial_votes_score_only_listed():
    p = build_profile([((1, 0), 1)], alternatives=3)
    np.testing.assert_array_equal(borda_scores(p), [0, 1, 0])


def test_plurality(tie, warm):
    assert plurality(warm)[0] == C
    assert plurality(tie)[0] == A
    np.testing.assert_array_equal(plurality_scores(tie), [2, 1, 2])
    assert plurality(build_profile([((2, 1, 0), 1)], alternatives=3))[0] == 2


def test_approval(warm):
    np.testing.assert_array_equal(approval_scores(warm, 1.0), [5, 5, 5])
    assert approval(warm, 0.33) == plurality(warm)
    np.testing.assert_array_equal(approval_scores(warm, 0.34), [5, 2, 3])
    assert approval(build_profile([], alternatives=3)) == (0, 1, 2)
    with pytest.raises(ValueError):
        approval(warm, 0.0)


def test_ranked_pairs(tie, warm):
    assert ranked_pairs(tie) == (C, A, B)
    assert ranked_pairs(warm) == (C, A, B)
    p = build_profile([((3, 1, 2, 0), 4)], alternatives=4)
    assert ranked_pairs(p) == (3, 1, 2, 0)


def test_ranked_pairs_skips_cycle_closing_pair(cyclic):
    # all margins equal 1; locking order follows index so the last pair is skipped
    r = ranked_pairs(cyclic)
    assert sorted(r) == [0, 1, 2]


def test_condorcet_consistent_rules():
    checked, seed = 0, 200
    while checked < 20:
        p = random_mallows_profile(6, 15, 0.9, seed=seed, partial_probability=0.3)
        seed += 1
        strong, _ = condorcet_winner(margin_matrix(preference_matrix(p)))
        if strong is None:
            continue
        assert copeland(p)[0] == strong
        assert ranked_pairs(p)[0] == strong
        checked += 1


def test_scores_linear_in_multiplicity():
    base = random_mallows_profile(5, 12, 0.7, seed=4)
    doubled = base.with_votes([type(v)(v.order, 2 * v.multiplicity) for v in base.votes])
    for f in (borda_scores, plurality_scores, approval_scores):
        np.testing.assert_allclose(f(doubled), 2 * f(base))
