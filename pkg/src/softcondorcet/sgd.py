"""Soft Kendall-tau (sigmoid) loss and projected stochastic gradient descent.

For a vote ``v`` and positions ``i < j`` the pair ``(a, b) = (v[i], v[j])``
contributes ``1 / (1 + exp((theta_a - theta_b) / tau))``, a smooth count of
the disagreement "b rated above a".
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import expit

from .core import PreferenceProfile, Ranking, Vote, VotePairs, ranking_from_scores

THETA_MIN = 0.0
THETA_MAX = 100.0


@dataclass(frozen=True)
class Ratings:
    theta: np.ndarray
    theta_min: float = THETA_MIN
    theta_max: float = THETA_MAX

    def __post_init__(self):
        if not self.theta_min < self.theta_max:
            raise ValueError("theta_min must be below theta_max")

    def ranking(self) -> Ranking:
        return induced_ranking(self.theta)

    @property
    def bounds(self) -> tuple[float, float]:
        return self.theta_min, self.theta_max


@dataclass(frozen=True)
class SgdConfig:
    """Settings for projected (stochastic) gradient descent.

    ``batch_size=None`` runs full-batch gradient descent with every vote
    weighted by its multiplicity.  ``checkpoint_every=None`` records
    ``max(1, iterations // 1000)``.
    """

    learning_rate: float = 0.01
    temperature: float = 1.0
    batch_size: int | None = 32
    iterations: int = 10_000
    seed: int = 0
    schedule: str = "constant"
    theta_min: float = THETA_MIN
    theta_max: float = THETA_MAX
    checkpoint_every: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0 or self.temperature <= 0:
            raise ValueError("learning_rate and temperature must be positive")
        if self.batch_size is not None and self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if self.schedule not in ("constant", "inv_sqrt"):
            raise ValueError(f"unknown schedule {self.schedule!r}")

    def step_size(self, t: int) -> float:
        if self.schedule == "inv_sqrt":
            return self.learning_rate / np.sqrt(t)
        return self.learning_rate

    @property
    def cadence(self) -> int:
        if self.checkpoint_every is not None:
            return max(1, self.checkpoint_every)
        return max(1, self.iterations // 1000)


@dataclass
class TrainingTrace:
    iterations: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    rankings: list[Ranking] = field(default_factory=list)

    def record(self, t: int, loss: float, ranking: Ranking):
        if self.iterations and t <= self.iterations[-1]:
            raise ValueError("checkpoint iterations must increase")
        self.iterations.append(t)
        self.losses.append(loss)
        self.rankings.append(ranking)

    def __len__(self):
        return len(self.iterations)

    def convergence_iteration(self, target: Sequence[int]) -> int | None:
        """First checkpoint from which every later ranking equals ``target``."""
        target = tuple(target)
        first = None
        for t, r in zip(self.iterations, self.rankings):
            if r == target:
                if first is None:
                    first = t
            else:
                first = None
        return first


def soft_discrepancy(theta_a, theta_b, tau: float):
    """Smoothed indicator that b is rated above a."""
    return expit((np.asarray(theta_b) - np.asarray(theta_a)) / tau)


def _as_pairs(batch) -> tuple[VotePairs, np.ndarray]:
    if isinstance(batch, PreferenceProfile):
        return batch.pairs, batch.multiplicities
    votes = list(batch)
    return VotePairs.from_votes(votes), np.array([v.multiplicity for v in votes], dtype=np.int64)


def _pair_weights(pairs: VotePairs, weights: np.ndarray) -> np.ndarray:
    return np.repeat(weights.astype(float), pairs.counts)


def sigmoid_loss(batch: PreferenceProfile | Sequence[Vote], theta: np.ndarray, tau: float) -> float:
    """Multiplicity-weighted sum of soft discrepancies over all vote pairs."""
    pairs, weights = _as_pairs(batch)
    if len(pairs.winners) == 0:
        return 0.0
    theta = np.asarray(theta, dtype=float)
    s = soft_discrepancy(theta[pairs.winners], theta[pairs.losers], tau)
    return float(np.dot(_pair_weights(pairs, weights), s))


def _pair_gradient(theta, winners, losers, weights, tau, m) -> np.ndarray:
    s = expit((theta[losers] - theta[winners]) / tau)
    d = (weights / tau) * s * (1.0 - s)
    return np.bincount(np.concatenate([losers, winners]), np.concatenate([d, -d]), minlength=m)


def sigmoid_loss_gradient(
    batch: PreferenceProfile | Sequence[Vote], theta: np.ndarray, tau: float
) -> np.ndarray:
    """Analytic gradient of :func:`sigmoid_loss` with respect to ``theta``."""
    theta = np.asarray(theta, dtype=float)
    pairs, weights = _as_pairs(batch)
    return _pair_gradient(
        theta, pairs.winners, pairs.losers, _pair_weights(pairs, weights), tau, len(theta)
    )


def project(theta: np.ndarray, theta_min: float = THETA_MIN, theta_max: float = THETA_MAX) -> np.ndarray:
    return np.clip(theta, theta_min, theta_max)


def induced_ranking(theta: np.ndarray) -> Ranking:
    """Descending sort of ratings; equal ratings keep index order."""
    return ranking_from_scores(theta)


def initial_theta(m: int, theta_min: float = THETA_MIN, theta_max: float = THETA_MAX) -> np.ndarray:
    # Algorithm input: ((theta_max - theta_min) / 2) * 1
    return np.full(m, (theta_max - theta_min) / 2.0)


class BallotSampler:
    """Uniform sampling of underlying ballots (multiplicities expanded)."""

    def __init__(self, profile: PreferenceProfile, rng: np.random.Generator):
        self.cum = np.cumsum(profile.multiplicities)
        self.n = int(self.cum[-1]) if len(self.cum) else 0
        self.rng = rng

    def draw(self, k: int) -> np.ndarray:
        ballots = self.rng.integers(0, self.n, size=k)
        return np.searchsorted(self.cum, ballots, side="right")

    def draw_batches(self, steps: int, k: int, chunk: int = 1024):
        """Yield ``steps`` vote-index batches of size ``k``, drawn in chunks."""
        done = 0
        while done < steps:
            c = min(chunk, steps - done)
            block = self.draw(c * k).reshape(c, k)
            yield from block
            done += c


def fit_sgd(
    profile: PreferenceProfile,
    config: SgdConfig,
    theta0: np.ndarray | None = None,
    record_loss: bool = True,
) -> tuple[Ratings, TrainingTrace]:
    """Projected (stochastic) gradient descent on the sigmoid loss.

    Each step averages the gradient over the batch.  With
    ``batch_size=None`` the batch is the whole profile, weighted by
    multiplicity.  Checkpoints store the full-profile loss (skipped when
    ``record_loss`` is false) and the induced ranking.
    """
    if profile.n == 0:
        raise ValueError("cannot fit an empty profile")
    m = profile.m
    lo, hi = config.theta_min, config.theta_max
    theta = initial_theta(m, lo, hi) if theta0 is None else np.array(theta0, dtype=float)
    pairs = profile.pairs
    tau = config.temperature
    trace = TrainingTrace()
    rng = np.random.default_rng(config.seed)
    sampler = BallotSampler(profile, rng)

    if config.batch_size is None:
        full_w = _pair_weights(pairs, profile.multiplicities) / profile.n
        batches = iter(())
    else:
        batches = sampler.draw_batches(config.iterations, config.batch_size)
        w = 1.0 / config.batch_size

    for t in range(1, config.iterations + 1):
        if config.batch_size is None:
            g = _pair_gradient(theta, pairs.winners, pairs.losers, full_w, tau, m)
        else:
            idx = pairs.select(next(batches))
            g = _pair_gradient(theta, pairs.winners[idx], pairs.losers[idx], w, tau, m)
        theta = project(theta - config.step_size(t) * g, lo, hi)
        if t % config.cadence == 0 or t == config.iterations:
            loss = sigmoid_loss(profile, theta, tau) if record_loss else float("nan")
            trace.record(t, loss, induced_ranking(theta))
    return Ratings(theta, lo, hi), trace


def update_online(
    theta: np.ndarray,
    vote: Vote | Sequence[int],
    alpha: float,
    tau: float,
    theta_min: float = THETA_MIN,
    theta_max: float = THETA_MAX,
) -> np.ndarray:
    """One projected gradient step on a single vote; returns new ratings.

    Only the ratings of alternatives in the vote change.
    """
    order = np.asarray(vote.order if isinstance(vote, Vote) else vote, dtype=np.int64)
    theta = np.array(theta, dtype=float)
    i, j = np.triu_indices(len(order), 1)
    a, b = order[i], order[j]
    s = expit((theta[b] - theta[a]) / tau)
    d = s * (1.0 - s) / tau
    delta = np.zeros(len(order))
    # positions are unique within a vote, so accumulate by position
    np.add.at(delta, i, d)
    np.subtract.at(delta, j, d)
    theta[order] = np.clip(theta[order] + alpha * delta, theta_min, theta_max)
    return theta


def online_pass(
    profile: PreferenceProfile,
    order: Sequence[int],
    alpha: float,
    tau: float,
    theta0: np.ndarray | None = None,
    theta_min: float = THETA_MIN,
    theta_max: float = THETA_MAX,
    checkpoints: Sequence[int] = (),
    callback=None,
) -> np.ndarray:
    """Apply :func:`update_online` to ``profile.votes[k]`` for k in ``order``.

    ``callback(t, theta)`` fires after step ``t`` for each t in ``checkpoints``.
    """
    theta = initial_theta(profile.m, theta_min, theta_max) if theta0 is None else np.array(theta0, float)
    marks = set(checkpoints)
    for t, k in enumerate(order, start=1):
        theta = update_online(theta, profile.votes[k], alpha, tau, theta_min, theta_max)
        if callback is not None and t in marks:
            callback(t, theta)
    return theta


def with_iterations(config: SgdConfig, iterations: int, **kw) -> SgdConfig:
    return replace(config, iterations=iterations, **kw)
