"""PrefLib parsing, synthetic tournaments and train/test splitting.

PrefLib files (SOC/SOI) look like::

    # DATA TYPE: soc
    # NUMBER ALTERNATIVES: 3
    # ALTERNATIVE NAME 1: A
    ...
    2: 3,1,2
    3: 1,2,3

Ids in data lines are 1-based; profiles use 0-based indices.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import (
    PreferenceProfile,
    ProfileError,
    Ranking,
    Vote,
    preference_matrix,
    ranking_from_scores,
)


class PrefLibFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


_META = re.compile(r"^#\s*([^:]+?)\s*:\s?(.*)$")
_DATA = re.compile(r"^\s*(\d+)\s*:\s*(\S.*?)\s*$")
_NAME = re.compile(r"^ALTERNATIVE NAME (\d+)$")


def parse_preflib(text: str) -> PreferenceProfile:
    """Parse PrefLib SOC/SOI text into a profile.

    Metadata lines are kept (in order) for faithful re-serialisation;
    keys other than the alternative count and names are not interpreted.
    """
    metadata: list[tuple[str, str]] = []
    names: dict[int, str] = {}
    m = None
    votes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#"):
            match = _META.match(line)
            if match is None:
                raise PrefLibFormatError(lineno, f"malformed metadata line {line!r}")
            key, value = match.group(1), match.group(2)
            metadata.append((key, value))
            if key == "NUMBER ALTERNATIVES":
                try:
                    m = int(value)
                except ValueError:
                    raise PrefLibFormatError(lineno, f"bad alternative count {value!r}") from None
            elif (nm := _NAME.match(key)) is not None:
                names[int(nm.group(1))] = value
            continue
        match = _DATA.match(line)
        if match is None:
            raise PrefLibFormatError(lineno, f"malformed data line {line!r}")
        if m is None:
            raise PrefLibFormatError(lineno, "data line before NUMBER ALTERNATIVES")
        if "{" in line or "}" in line:
            raise PrefLibFormatError(lineno, "ties are not supported (strict orders only)")
        mult = int(match.group(1))
        try:
            ids = [int(tok) for tok in match.group(2).split(",")]
        except ValueError:
            raise PrefLibFormatError(lineno, f"non-integer alternative in {line!r}") from None
        for a in ids:
            if not 1 <= a <= m:
                raise PrefLibFormatError(lineno, f"alternative {a} outside 1..{m}")
        try:
            votes.append(Vote(tuple(a - 1 for a in ids), mult))
        except ProfileError as exc:
            raise PrefLibFormatError(lineno, str(exc)) from None
    if m is None:
        raise PrefLibFormatError(0, "missing NUMBER ALTERNATIVES")
    name_tuple = None
    if names:
        if sorted(names) != list(range(1, m + 1)):
            raise PrefLibFormatError(0, "alternative names do not cover 1..m")
        name_tuple = tuple(names[i] for i in range(1, m + 1))
    return PreferenceProfile(m, tuple(votes), name_tuple, tuple(metadata))


def _default_metadata(profile: PreferenceProfile) -> list[tuple[str, str]]:
    complete = all(len(v.order) == profile.m for v in profile.votes)
    meta = [
        ("DATA TYPE", "soc" if complete else "soi"),
        ("NUMBER ALTERNATIVES", str(profile.m)),
    ]
    for a in range(profile.m):
        meta.append((f"ALTERNATIVE NAME {a + 1}", profile.label(a)))
    meta.append(("NUMBER VOTERS", str(profile.n)))
    meta.append(("NUMBER UNIQUE ORDERS", str(len({v.order for v in profile.votes}))))
    return meta


def dump_preflib(profile: PreferenceProfile) -> str:
    """Serialise to PrefLib text.  Parsed files reproduce their header."""
    meta = list(profile.metadata) if profile.metadata else _default_metadata(profile)
    lines = [f"# {k}: {v}" for k, v in meta]
    for v in profile.votes:
        lines.append(f"{v.multiplicity}: " + ",".join(str(a + 1) for a in v.order))
    return "\n".join(lines) + "\n"


def read_preflib(path) -> PreferenceProfile:
    with open(path, encoding="utf-8") as fh:
        return parse_preflib(fh.read())


# --------------------------------------------------------------------------
# synthetic tournaments


@dataclass(frozen=True)
class TournamentConfig:
    num_agents: int = 20
    contest_size: int = 4
    num_contests: int = 100
    skill_mean: float = 100.0
    skill_stddev: float = 30.0
    performance_noise_stddev: float = 5.0
    matching: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.contest_size > self.num_agents:
            raise ValueError("contest_size exceeds num_agents")
        if self.skill_stddev <= 0 or self.performance_noise_stddev <= 0:
            raise ValueError("standard deviations must be positive")
        if self.matching not in ("uniform", "skill_matched"):
            raise ValueError(f"unknown matching {self.matching!r}")


@dataclass(frozen=True)
class GroundTruth:
    true_ratings: np.ndarray
    true_ranking: Ranking = field(default=())

    def __post_init__(self):
        if not self.true_ranking:
            object.__setattr__(self, "true_ranking", ranking_from_scores(self.true_ratings))


def _skill_matched_contest(rng, skills, size) -> list[int]:
    m = len(skills)
    chosen = [int(rng.integers(m))]
    while len(chosen) < size:
        pool = np.setdiff1d(np.arange(m), chosen)
        cand = rng.choice(pool, size=min(3, len(pool)), replace=False)
        avg = skills[chosen].mean()
        chosen.append(int(min(cand, key=lambda c: (abs(skills[c] - avg), c))))
    return chosen


def generate_tournament(config: TournamentConfig) -> tuple[PreferenceProfile, GroundTruth]:
    """Simulate contests whose outcomes sort noisy performances.

    Skills are drawn once; each contest's participants come from the chosen
    matching rule and finish in order of ``skill + N(0, noise^2)``.
    """
    rng = np.random.default_rng(config.seed)
    skills = rng.normal(config.skill_mean, config.skill_stddev, config.num_agents)
    votes = []
    for _ in range(config.num_contests):
        if config.matching == "uniform":
            who = rng.choice(config.num_agents, size=config.contest_size, replace=False)
        else:
            who = np.array(_skill_matched_contest(rng, skills, config.contest_size))
        perf = skills[who] + rng.normal(0.0, config.performance_noise_stddev, len(who))
        order = who[np.argsort(-perf, kind="stable")]
        votes.append(Vote(tuple(int(a) for a in order)))
    return PreferenceProfile(config.num_agents, tuple(votes)), GroundTruth(skills)


def generate_diplomacy_like(
    num_agents: int = 2500,
    num_games: int = 4000,
    players_per_game: int = 7,
    participation_exponent: float = 1.2,
    skill_stddev: float = 30.0,
    noise_stddev: float = 25.0,
    seed: int = 0,
) -> tuple[PreferenceProfile, GroundTruth]:
    """Large sparse stand-in for a many-player online game history.

    Participation weights follow a Zipf-like law ``1 / rank^exponent`` so a
    few agents play often and most play rarely.
    """
    rng = np.random.default_rng(seed)
    skills = rng.normal(100.0, skill_stddev, num_agents)
    weights = 1.0 / np.arange(1, num_agents + 1) ** participation_exponent
    weights = rng.permutation(weights)
    p = weights / weights.sum()
    votes = []
    for _ in range(num_games):
        who = rng.choice(num_agents, size=players_per_game, replace=False, p=p)
        perf = skills[who] + rng.normal(0.0, noise_stddev, players_per_game)
        votes.append(Vote(tuple(int(a) for a in who[np.argsort(-perf, kind="stable")])))
    return PreferenceProfile(num_agents, tuple(votes)), GroundTruth(skills)


def dump_synthetic(profile: PreferenceProfile, truth: GroundTruth | None, config=None) -> str:
    """Line-oriented dataset text: config header, votes, ratings block.

    ::

        # CONFIG key: value          (one per field, optional)
        # NUMBER ALTERNATIVES: m
        multiplicity: id,id,...      (1-based, as in PrefLib)
        # RATING i: value            (one per alternative, optional)
    """
    lines = []
    if config is not None:
        for k, v in asdict(config).items():
            lines.append(f"# CONFIG {k}: {v}")
    lines.append(f"# NUMBER ALTERNATIVES: {profile.m}")
    for v in profile.votes:
        lines.append(f"{v.multiplicity}: " + ",".join(str(a + 1) for a in v.order))
    if truth is not None:
        for a, r in enumerate(truth.true_ratings):
            lines.append(f"# RATING {a + 1}: {float(r)!r}")
    return "\n".join(lines) + "\n"


def parse_synthetic(text: str) -> tuple[PreferenceProfile, GroundTruth | None, dict[str, str]]:
    profile = parse_preflib(text)
    config, ratings = {}, {}
    for k, v in profile.metadata:
        if k.startswith("CONFIG "):
            config[k[len("CONFIG "):]] = v
        elif k.startswith("RATING "):
            ratings[int(k[len("RATING "):])] = float(v)
    truth = None
    if ratings:
        truth = GroundTruth(np.array([ratings[i] for i in range(1, profile.m + 1)]))
    return profile.with_votes(profile.votes), truth, config


# --------------------------------------------------------------------------
# statistics and splits


def missing_pair_proportion(profile: PreferenceProfile) -> float:
    """Fraction of unordered alternative pairs never compared in any vote."""
    m = profile.m
    if m < 2:
        raise ValueError("need at least two alternatives")
    counts = preference_matrix(profile, sparse_format=True).matrix
    both = (counts + counts.T).tocoo()
    covered = int(np.count_nonzero((both.row < both.col) & (both.data > 0)))
    return 1.0 - covered / (m * (m - 1) / 2)


class InfeasibleSplit(ValueError):
    pass


def train_test_split(
    profile: PreferenceProfile, test_count: int, seed: int
) -> tuple[PreferenceProfile, PreferenceProfile]:
    """Random split of ballots so every test alternative also appears in train.

    Ballots are visited in random order; a ballot joins the test set only if
    each of its alternatives keeps at least one appearance in the remaining
    training ballots.  Test votes keep that random order.
    """
    ballots = profile.expanded()
    n = len(ballots)
    if not 0 <= test_count < n:
        raise InfeasibleSplit(f"test_count must be in [0, {n})")
    rng = np.random.default_rng(seed)
    remaining = np.zeros(profile.m, dtype=np.int64)
    for b in ballots:
        remaining[list(b.order)] += 1
    test_idx = []
    for k in rng.permutation(n):
        if len(test_idx) == test_count:
            break
        ids = list(ballots[k].order)
        if np.all(remaining[ids] >= 2):
            remaining[ids] -= 1
            test_idx.append(int(k))
    if len(test_idx) < test_count:
        raise InfeasibleSplit(
            f"only {len(test_idx)} of {test_count} test votes can be held out"
        )
    in_test = np.zeros(n, dtype=bool)
    in_test[test_idx] = True
    train = [ballots[k] for k in range(n) if not in_test[k]]
    test = [ballots[k] for k in test_idx]
    return profile.with_votes(train), profile.with_votes(test)


def discordant_pairs(ranking: Sequence[int], truth: GroundTruth) -> list[tuple[int, int]]:
    pos = {a: k for k, a in enumerate(ranking)}
    tpos = {a: k for k, a in enumerate(truth.true_ranking)}
    if set(pos) != set(tpos):
        raise ValueError("ranking and ground truth cover different alternatives")
    return [
        (a, b)
        for a, b in combinations(sorted(pos), 2)
        if (pos[a] < pos[b]) != (tpos[a] < tpos[b])
    ]


def mtrd(ranking: Sequence[int], truth: GroundTruth) -> float:
    """Mean |true rating gap| over pairs the ranking orders wrongly."""
    r = np.asarray(ranking)
    theta = np.asarray(truth.true_ratings, dtype=float)
    m = len(theta)
    if sorted(r.tolist()) != list(range(m)):
        raise ValueError("ranking and ground truth cover different alternatives")
    pos = np.empty(m, dtype=np.int64)
    pos[r] = np.arange(m)
    tpos = np.empty(m, dtype=np.int64)
    tpos[np.asarray(truth.true_ranking)] = np.arange(m)
    i, j = np.triu_indices(m, 1)
    disc = (pos[i] < pos[j]) != (tpos[i] < tpos[j])
    if not np.any(disc):
        return 0.0
    return float(np.abs(theta[i[disc]] - theta[j[disc]]).mean())


def sample_mallows(reference: Sequence[int], phi: float, rng: np.random.Generator) -> Ranking:
    """One ranking from a Mallows model via repeated insertion.

    The i-th reference element lands at position ``j <= i`` with probability
    proportional to ``phi ** (i - j)``.
    """
    if not 0 < phi <= 1:
        raise ValueError("phi must be in (0, 1]")
    out: list[int] = []
    for i, a in enumerate(reference):
        w = phi ** np.arange(i, -1, -1, dtype=float)
        out.insert(int(rng.choice(i + 1, p=w / w.sum())), a)
    return tuple(out)


def random_mallows_profile(
    m: int, n: int, phi: float, seed: int, partial_probability: float = 0.0
) -> PreferenceProfile:
    """``n`` Mallows ballots around a random reference ranking.

    With ``partial_probability > 0`` each ballot is truncated to a random
    length in ``[2, m]`` with that probability (a top-k partial order).
    """
    rng = np.random.default_rng(seed)
    ref = tuple(int(a) for a in rng.permutation(m))
    counts: dict[Ranking, int] = {}
    for _ in range(n):
        r = sample_mallows(ref, phi, rng)
        if partial_probability and m > 2 and rng.random() < partial_probability:
            r = r[: int(rng.integers(2, m + 1))]
        counts[r] = counts.get(r, 0) + 1
    votes = tuple(Vote(r, c) for r, c in sorted(counts.items()))
    return PreferenceProfile(m, votes)
