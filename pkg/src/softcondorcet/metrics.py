"""Kendall-tau distances, Kemeny scores and the exact Kemeny-Young rule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PreferenceProfile, Ranking, condorcet_winner, margin_matrix, preference_matrix


@dataclass(frozen=True)
class DistanceReport:
    raw: int
    normalized: float


def _positions(r: Sequence[int]) -> dict[int, int]:
    return {a: k for k, a in enumerate(r)}


def kendall_tau(v: Sequence[int], r: Sequence[int]) -> int:
    """Number of pairs of ``v``'s elements ordered differently in ``r``.

    ``v`` may cover a subset of ``r``'s elements.
    """
    pos = _positions(r)
    try:
        p = np.array([pos[a] for a in v], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"element {exc.args[0]!r} of v is missing from r") from None
    if len(set(v)) != len(v):
        raise ValueError("v contains duplicates")
    i, j = np.triu_indices(len(p), 1)
    return int(np.count_nonzero(p[i] > p[j]))


def normalized_kendall_tau(v: Sequence[int], r: Sequence[int]) -> float:
    return distance_report(v, r).normalized


def distance_report(v: Sequence[int], r: Sequence[int]) -> DistanceReport:
    raw = kendall_tau(v, r)
    k = len(v)
    norm = 2.0 * raw / (k * (k - 1)) if k >= 2 else 0.0
    return DistanceReport(raw, norm)


def _rank_positions(ranking: Sequence[int], m: int) -> np.ndarray:
    pos = np.full(m, -1, dtype=np.int64)
    pos[np.asarray(ranking, dtype=np.int64)] = np.arange(len(ranking))
    return pos


def profile_distance(profile: PreferenceProfile, ranking: Sequence[int]) -> int:
    """Multiplicity-weighted sum of Kendall-tau distances from each vote."""
    if profile.n == 0:
        return 0
    pos = _rank_positions(ranking, profile.m)
    pairs = profile.pairs
    if np.any(pos[pairs.winners] < 0) or np.any(pos[pairs.losers] < 0):
        raise ValueError("ranking does not cover every alternative in the profile")
    disagree = pos[pairs.winners] > pos[pairs.losers]
    w = np.repeat(profile.multiplicities, pairs.counts)
    return int(w[disagree].sum())


def mean_vote_distance(votes: PreferenceProfile, ranking: Sequence[int]) -> float:
    """Average per-ballot Kendall-tau distance (KTD on a held-out set)."""
    if votes.n == 0:
        return 0.0
    return profile_distance(votes, ranking) / votes.n


def kemeny_score(profile: PreferenceProfile, ranking: Sequence[int]) -> int:
    N = preference_matrix(profile).toarray()
    r = np.asarray(ranking, dtype=np.int64)
    i, j = np.triu_indices(len(r), 1)
    return int(N[r[i], r[j]].sum())


@dataclass(frozen=True)
class KemenyResult:
    ranking: Ranking
    distance: int
    co_optimal: tuple[Ranking, ...] | None = None

    @property
    def unique(self) -> bool:
        if self.co_optimal is None:
            raise ValueError("co-optimal set was not requested")
        return len(self.co_optimal) == 1


class TooManyAlternatives(ValueError):
    pass


def kemeny_optimal(
    profile: PreferenceProfile, max_m: int = 10, all_optimal: bool = False
) -> KemenyResult:
    """Exact Kemeny-Young ranking by dynamic programming over subsets.

    ``cost[S]`` is the minimal number of disagreements among pairs that are
    not both inside ``S``, given that ``S`` is the set of alternatives
    placed first.  Among co-optimal rankings the lexicographically smallest
    (by index) is returned.
    """
    m = profile.m
    if m > max_m:
        raise TooManyAlternatives(f"m = {m} exceeds max_m = {max_m}")
    if m == 0:
        return KemenyResult((), 0, ((),) if all_optimal else None)
    N = preference_matrix(profile).toarray()
    full = (1 << m) - 1
    size = 1 << m

    # beats_into[x][S] = sum_{y in S} N(y, x): disagreements created when x
    # is placed above everything in S.
    subsets = np.arange(size)
    bits = (subsets[:, None] >> np.arange(m)) & 1
    against = bits @ N  # against[S, x] = sum_{y in S} N(y, x)

    INF = np.iinfo(np.int64).max // 4
    cost = np.full(size, INF, dtype=np.int64)
    cost[full] = 0
    # process subsets in decreasing popcount so successors are final
    popcount = bits.sum(axis=1)
    for S in subsets[np.argsort(-popcount, kind="stable")]:
        if S == full:
            continue
        best = INF
        for x in range(m):
            if S >> x & 1:
                continue
            rest = full & ~S & ~(1 << x)
            c = against[rest, x] + cost[S | (1 << x)]
            if c < best:
                best = c
        cost[S] = best

    def step_cost(S, x):
        rest = full & ~S & ~(1 << x)
        return against[rest, x] + cost[S | (1 << x)]

    S, order = 0, []
    while S != full:
        x = next(x for x in range(m) if not S >> x & 1 and step_cost(S, x) == cost[S])
        order.append(x)
        S |= 1 << x

    co = None
    if all_optimal:
        found = []
        stack = [(0, ())]
        while stack:
            S, prefix = stack.pop()
            if S == full:
                found.append(prefix)
                continue
            for x in reversed(range(m)):
                if not S >> x & 1 and step_cost(S, x) == cost[S]:
                    stack.append((S | (1 << x), prefix + (x,)))
        co = tuple(sorted(found))
    return KemenyResult(tuple(order), int(cost[0]), co)


def condorcet_match(ranking: Sequence[int], profile: PreferenceProfile) -> bool | None:
    """Whether ``ranking`` top-ranks the strong Condorcet winner (None if none)."""
    strong, _ = condorcet_winner(margin_matrix(preference_matrix(profile)))
    if strong is None:
        return None
    return ranking[0] == strong
