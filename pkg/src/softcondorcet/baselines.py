"""Elo ratings and classical voting rules used as comparison baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    PreferenceProfile,
    Ranking,
    margin_matrix,
    preference_matrix,
    ranking_from_scores,
)


@dataclass(frozen=True)
class EloConfig:
    k_factor: float = 32.0
    initial_rating: float = 1500.0
    scale: float = 400.0

    def __post_init__(self):
        if self.k_factor <= 0:
            raise ValueError("k_factor must be positive")


def elo_predict(r_i, r_j, scale: float = 400.0):
    """Probability that i beats j."""
    return 1.0 / (1.0 + 10.0 ** ((np.asarray(r_j) - np.asarray(r_i)) / scale))


def elo_update_online(
    r_i: float, r_j: float, outcome: int, k_factor: float = 32.0, scale: float = 400.0
) -> tuple[float, float]:
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    delta = k_factor * (outcome - float(elo_predict(r_i, r_j, scale)))
    return r_i + delta, r_j - delta


def elo_online(
    profile: PreferenceProfile,
    order: Sequence[int] | None = None,
    config: EloConfig = EloConfig(),
    ratings: np.ndarray | None = None,
    checkpoints: Sequence[int] = (),
    callback=None,
) -> np.ndarray:
    """Sequential Elo over votes, each expanded into its ordered pairs.

    A vote's pairs are processed as (i, j) position pairs in lexicographic
    order, each a win for the earlier position.
    """
    r = np.full(profile.m, config.initial_rating) if ratings is None else np.array(ratings, float)
    order = range(len(profile.votes)) if order is None else order
    marks = set(checkpoints)
    for t, k in enumerate(order, start=1):
        v = profile.votes[k].order
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                a, b = v[i], v[j]
                r[a], r[b] = elo_update_online(r[a], r[b], 1, config.k_factor, config.scale)
        if callback is not None and t in marks:
            callback(t, r)
    return r


def _comparison_pairs(profile: PreferenceProfile):
    """Unordered pairs (i < j) with win counts w_ij, w_ji from sparse N."""
    counts = preference_matrix(profile, sparse_format=True).matrix
    both = (counts + counts.T).tocoo()
    keep = both.row < both.col
    i, j = both.row[keep], both.col[keep]
    order = np.lexsort((j, i))
    i, j = i[order], j[order]
    dense_lookup = counts.tocsr()
    w_ij = np.asarray(dense_lookup[i, j]).ravel().astype(float)
    w_ji = np.asarray(dense_lookup[j, i]).ravel().astype(float)
    return i.astype(np.int64), j.astype(np.int64), w_ij, w_ji


def bt_log_likelihood(gamma: np.ndarray, i, j, w_ij, w_ji, prior: float = 0.0) -> float:
    """Bradley-Terry log-likelihood including the virtual reference games."""
    lg = np.log(gamma)
    denom = np.log(gamma[i] + gamma[j])
    ll = float(np.dot(w_ij, lg[i] - denom) + np.dot(w_ji, lg[j] - denom))
    if prior > 0:
        # prior wins and prior losses against a reference with gamma = 1
        ll += prior * float(np.sum(lg - np.log(gamma + 1.0)) + np.sum(-np.log(gamma + 1.0)))
    return ll


def elo_fit_mm(
    profile: PreferenceProfile,
    iterations: int = 10_000,
    prior_pseudocount: float = 0.1,
    config: EloConfig = EloConfig(),
    tol: float = 1e-10,
    history: list | None = None,
) -> np.ndarray:
    """Bradley-Terry maximum likelihood via minorization-maximization.

    Each vote contributes one game per ordered pair of its positions.
    ``prior_pseudocount`` virtual wins and losses against a fixed reference
    opponent (strength 1) keep the fit finite on disconnected data.  Returns
    ratings ``400 * log10(gamma)`` shifted so their mean is
    ``config.initial_rating``.  If ``history`` is a list, the log-likelihood
    after each iteration is appended to it.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    m = profile.m
    i, j, w_ij, w_ji = _comparison_pairs(profile)
    n_ij = w_ij + w_ji
    wins = np.bincount(i, w_ij, minlength=m) + np.bincount(j, w_ji, minlength=m) + prior_pseudocount
    gamma = np.ones(m)
    for _ in range(iterations):
        inv = n_ij / (gamma[i] + gamma[j])
        denom = np.bincount(i, inv, minlength=m) + np.bincount(j, inv, minlength=m)
        if prior_pseudocount > 0:
            denom = denom + 2.0 * prior_pseudocount / (gamma + 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            new = np.where(denom > 0, wins / denom, gamma)
        if prior_pseudocount == 0:
            # scale is free without the reference; pin the geometric mean
            pos = new > 0
            if np.any(pos):
                new = new / np.exp(np.mean(np.log(new[pos])))
        change = np.max(np.abs(new - gamma) / np.maximum(gamma, 1e-300))
        gamma = new
        if history is not None:
            history.append(bt_log_likelihood(gamma, i, j, w_ij, w_ji, prior_pseudocount))
        if change < tol:
            break
    with np.errstate(divide="ignore"):
        r = config.scale * np.log10(gamma)
    finite = np.isfinite(r)
    if np.any(finite):
        r = r - r[finite].mean()
    return r + config.initial_rating


def _ranking_from_scores(scores) -> Ranking:
    return ranking_from_scores(scores)


def copeland_scores(profile: PreferenceProfile) -> np.ndarray:
    M = margin_matrix(preference_matrix(profile)).astype(float)
    m = profile.m
    ties = (M == 0).sum(axis=1) - 1  # exclude the diagonal
    return (M > 0).sum(axis=1) + 0.5 * ties if m else np.zeros(0)


def copeland(profile: PreferenceProfile) -> Ranking:
    return _ranking_from_scores(copeland_scores(profile))


def borda_scores(profile: PreferenceProfile) -> np.ndarray:
    """Each vote of length L gives L - 1 - k points to position k.

    Unlisted alternatives receive nothing from that vote.
    """
    s = np.zeros(profile.m)
    for v in profile.votes:
        L = len(v.order)
        s[list(v.order)] += v.multiplicity * np.arange(L - 1, -1, -1)
    return s


def borda(profile: PreferenceProfile) -> Ranking:
    return _ranking_from_scores(borda_scores(profile))


def plurality_scores(profile: PreferenceProfile) -> np.ndarray:
    s = np.zeros(profile.m)
    for v in profile.votes:
        s[v.order[0]] += v.multiplicity
    return s


def plurality(profile: PreferenceProfile) -> Ranking:
    return _ranking_from_scores(plurality_scores(profile))


def approval_scores(profile: PreferenceProfile, threshold_fraction: float = 0.5) -> np.ndarray:
    """Each vote approves its top ``ceil(threshold_fraction * len(vote))``."""
    if not 0 < threshold_fraction <= 1:
        raise ValueError("threshold_fraction must be in (0, 1]")
    s = np.zeros(profile.m)
    for v in profile.votes:
        k = math.ceil(threshold_fraction * len(v.order))
        s[list(v.order[:k])] += v.multiplicity
    return s


def approval(profile: PreferenceProfile, threshold_fraction: float = 0.5) -> Ranking:
    return _ranking_from_scores(approval_scores(profile, threshold_fraction))


def ranked_pairs(profile: PreferenceProfile) -> Ranking:
    """Tideman's ranked pairs.

    Majorities are locked in order of decreasing margin, then decreasing
    N(a, b), then index; a pair creating a cycle is skipped.  The output is
    the topological order of the locked graph, smallest index first among
    ready alternatives.
    """
    N = preference_matrix(profile).toarray()
    M = N - N.T
    m = profile.m
    cand = [(-M[a, b], -N[a, b], a, b) for a in range(m) for b in range(m) if M[a, b] > 0]
    cand.sort()
    reach = np.eye(m, dtype=bool)  # reach[x, y]: path x -> y among locked edges
    for _, _, a, b in cand:
        if reach[b, a]:
            continue
        # everything reaching a now reaches everything b reaches
        reach |= np.outer(reach[:, a], reach[b, :])
    locked_in = reach.copy()
    np.fill_diagonal(locked_in, False)
    order, placed = [], np.zeros(m, dtype=bool)
    for _ in range(m):
        ready = [x for x in range(m) if not placed[x] and not np.any(locked_in[~placed, x])]
        x = ready[0]
        order.append(x)
        placed[x] = True
    return tuple(order)
