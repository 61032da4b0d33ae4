from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softcondorcet import (
    GroundTruth,
    InfeasibleSplit,
    PreferenceProfile,
    PrefLibFormatError,
    TournamentConfig,
    Vote,
    dump_preflib,
    generate_diplomacy_like,
    generate_tournament,
    missing_pair_proportion,
    mtrd,
    parse_preflib,
    read_preflib,
    train_test_split,
)
from softcondorcet.data import (
    discordant_pairs,
    dump_synthetic,
    parse_synthetic,
    random_mallows_profile,
    sample_mallows,
)
from softcondorcet.metrics import kendall_tau

EXAMPLE = "# NUMBER ALTERNATIVES: 3\n2: 3,1,2\n3: 1,2,3\n"


def test_parse_small_example():
    p = parse_preflib(EXAMPLE)
    assert p.m == 3 and p.n == 5
    assert p.votes == (Vote((2, 0, 1), 2), Vote((0, 1, 2), 3))


def test_parse_golden_files(data_dir):
    soc = read_preflib(data_dir / "golden_soc.soc")
    assert soc.names == ("Alice", "Bob", "Carol")
    assert soc.n == 5 and all(len(v) == 3 for v in soc.votes)
    soi = read_preflib(data_dir / "golden_soi.soi")
    assert soi.m == 4 and soi.n == 7
    assert sorted(len(v) for v in soi.votes) == [1, 2, 3, 4]


def test_tie_file_matches_fixture(data_dir, tie):
    assert read_preflib(data_dir / "elo_tie.soc") == tie


@pytest.mark.parametrize("name", ["golden_soc.soc", "golden_soi.soi", "elo_tie.soc"])
def test_golden_round_trip_is_byte_stable(data_dir, name):
    text = (data_dir / name).read_text()
    once = dump_preflib(parse_preflib(text))
    assert once == text
    assert dump_preflib(parse_preflib(once)) == once


MALFORMED = {
    "duplicate_id.soi": 2,
    "out_of_range.soi": 3,
    "garbage_line.soc": 3,
    "data_before_header.soc": 1,
    "tie.toi": 3,
    "non_integer.soi": 3,
}


@pytest.mark.parametrize("name,line", sorted(MALFORMED.items()))
def test_malformed_fixtures_report_line(data_dir, name, line):
    with pytest.raises(PrefLibFormatError) as info:
        read_preflib(data_dir / "malformed" / name)
    assert info.value.lineno == line
    assert str(info.value).startswith(f"line {line}:")


def test_duplicate_inline():
    with pytest.raises(PrefLibFormatError, match="line 2"):
        parse_preflib("# NUMBER ALTERNATIVES: 3\n2: 1,1,3\n")


def test_unknown_metadata_ignored():
    p = parse_preflib("# SOMETHING ODD: 42\n" + EXAMPLE)
    assert p.n == 5


@st.composite
def profiles(draw):
    m = draw(st.integers(1, 7))
    votes = []
    for _ in range(draw(st.integers(0, 6))):
        perm = draw(st.permutations(range(m)))
        votes.append(Vote(tuple(perm[: draw(st.integers(1, m))]), draw(st.integers(1, 9))))
    return PreferenceProfile(m, tuple(votes))


@settings(max_examples=80, deadline=None)
@given(profiles())
def test_serialize_parse_identity(p):
    back = parse_preflib(dump_preflib(p))
    assert back.m == p.m and back.votes == p.votes
    assert dump_preflib(back) == dump_preflib(p)


def test_synthetic_round_trip():
    cfg = TournamentConfig(num_contests=30, seed=3)
    p, truth = generate_tournament(cfg)
    text = dump_synthetic(p, truth, cfg)
    q, t2, meta = parse_synthetic(text)
    assert q.votes == p.votes
    np.testing.assert_array_equal(t2.true_ratings, truth.true_ratings)
    assert meta["matching"] == "uniform" and meta["num_contests"] == "30"


@pytest.mark.parametrize("matching", ["uniform", "skill_matched"])
def test_generated_votes_are_valid(matching):
    p, truth = generate_tournament(TournamentConfig(num_contests=60, matching=matching, seed=1))
    assert p.n == 60
    for v in p.votes:
        assert len(v) == 4 and len(set(v.order)) == 4
        # recorded best-first, so mostly agrees with skill order
    assert truth.true_ranking == tuple(np.argsort(-truth.true_ratings, kind="stable"))


def test_generation_deterministic_per_seed():
    a = generate_tournament(TournamentConfig(seed=5, matching="skill_matched"))
    b = generate_tournament(TournamentConfig(seed=5, matching="skill_matched"))
    c = generate_tournament(TournamentConfig(seed=6, matching="skill_matched"))
    assert a[0] == b[0]
    assert a[0] != c[0]


def test_low_noise_outcomes_follow_skill():
    p, truth = generate_tournament(
        TournamentConfig(num_contests=50, performance_noise_stddev=1e-6, seed=2)
    )
    for v in p.votes:
        assert kendall_tau(v.order, truth.true_ranking) == 0


def test_skill_matched_contests_are_tighter():
    def spread(matching):
        out = []
        for s in range(20):
            p, t = generate_tournament(TournamentConfig(num_contests=20, matching=matching, seed=s))
            out += [np.ptp(t.true_ratings[list(v.order)]) for v in p.votes]
        return np.mean(out)

    assert spread("skill_matched") < 0.6 * spread("uniform")


def _mean_missing(matching, n, seeds=200):
    return np.mean([
        missing_pair_proportion(generate_tournament(
            TournamentConfig(num_contests=n, matching=matching, seed=s))[0])
        for s in range(seeds)
    ])


def test_missing_proportion_reference_points():
    assert _mean_missing("uniform", 100) == pytest.approx(0.04, abs=0.02)
    assert _mean_missing("skill_matched", 20) == pytest.approx(0.59, abs=0.05)


def test_missing_proportion_decreases_with_n():
    for matching in ("uniform", "skill_matched"):
        vals = [_mean_missing(matching, n, seeds=40) for n in (5, 10, 20, 30, 50, 75, 100, 200)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_missing_pair_examples():
    assert missing_pair_proportion(PreferenceProfile(5, (Vote(tuple(range(5))),))) == 0.0
    assert missing_pair_proportion(PreferenceProfile(5, ())) == 1.0
    one = PreferenceProfile(20, (Vote((3, 7, 11, 19)),))
    assert missing_pair_proportion(one) == pytest.approx(1 - 6 / 190)


def test_split_partition_and_coverage():
    p, _ = generate_tournament(TournamentConfig(num_contests=80, matching="skill_matched", seed=4))
    train, test = train_test_split(p, 20, seed=0)
    assert train.n + test.n == p.n and test.n == 20
    train_alts = {a for v in train.votes for a in v.order}
    assert {a for v in test.votes for a in v.order} <= train_alts
    # each vote went to exactly one side
    from collections import Counter

    assert Counter(v.order for v in train.votes) + Counter(v.order for v in test.votes) == Counter(
        v.order for v in p.votes
    )


def test_split_large_profile_sizes():
    p, _ = generate_diplomacy_like(num_games=31_049, seed=0)
    train, test = train_test_split(p, 3000, seed=0)
    assert (train.n, test.n) == (28_049, 3000)


def test_split_infeasible():
    p = PreferenceProfile(4, (Vote((0, 1)), Vote((2, 3))))
    with pytest.raises(InfeasibleSplit):
        train_test_split(p, 1, seed=0)
    with pytest.raises(InfeasibleSplit):
        train_test_split(p, 2, seed=0)


def test_split_deterministic():
    p, _ = generate_tournament(TournamentConfig(num_contests=50, seed=9))
    assert train_test_split(p, 10, 3)[1] == train_test_split(p, 10, 3)[1]


def test_mtrd_examples():
    truth = GroundTruth(np.array([110.0, 90.0]))
    assert mtrd((0, 1), truth) == 0.0
    assert mtrd((1, 0), truth) == pytest.approx(20.0)


def test_mtrd_matches_pair_scan():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = int(rng.integers(2, 12))
        truth = GroundTruth(rng.normal(100, 30, m))
        r = tuple(int(a) for a in rng.permutation(m))
        pos = {a: k for k, a in enumerate(r)}
        gaps = [abs(truth.true_ratings[a] - truth.true_ratings[b])
                for a, b in combinations(range(m), 2)
                if (pos[a] < pos[b]) != (truth.true_ratings[a] > truth.true_ratings[b])]
        assert mtrd(r, truth) == pytest.approx(np.mean(gaps) if gaps else 0.0)
        assert len(discordant_pairs(r, truth)) == len(gaps) == kendall_tau(r, truth.true_ranking)


def test_mallows_concentration():
    rng = np.random.default_rng(0)
    ref = (3, 0, 4, 1, 2)
    assert all(sample_mallows(ref, 1e-9, rng) == ref for _ in range(20))
    draws = [sample_mallows(ref, 1.0, rng) for _ in range(3000)]
    firsts = np.bincount([d[0] for d in draws], minlength=5) / 3000
    np.testing.assert_allclose(firsts, 0.2, atol=0.03)


def test_random_mallows_profile_merges_duplicates():
    p = random_mallows_profile(4, 50, 0.2, seed=1)
    assert p.n == 50
    assert len({v.order for v in p.votes}) == len(p.votes)


def test_diplomacy_like_shape():
    p, truth = generate_diplomacy_like(num_agents=500, num_games=300, seed=1)
    assert p.m == 500 and p.n == 300
    assert all(len(v) == 7 for v in p.votes)
    plays = np.bincount([a for v in p.votes for a in v.order], minlength=500)
    assert plays.max() > 10 * np.median(plays[plays > 0])
