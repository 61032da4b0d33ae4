"""Perturbed ranks and the Fenchel-Young loss for partial rankings.

Sign convention: a larger rating gets a larger rank value, so a vote's
most-preferred element has target rank ``len(vote) - 1``.  Both the
targets and the (perturbed) ranks of ratings use this orientation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PreferenceProfile, Vote
from .sgd import BallotSampler, Ratings, TrainingTrace, induced_ranking, initial_theta, project


@dataclass(frozen=True)
class FyConfig:
    epsilon: float = 1.0
    mc_samples: int = 1
    learning_rate: float = 0.1
    iterations: int = 10_000
    batch_size: int | None = 32
    seed: int = 0
    theta_min: float = 0.0
    theta_max: float = 100.0
    checkpoint_every: int | None = None
    loss_samples: int = 16

    def __post_init__(self):
        if self.epsilon <= 0 or self.learning_rate <= 0:
            raise ValueError("epsilon and learning_rate must be positive")
        if self.mc_samples < 1 or self.iterations < 1:
            raise ValueError("mc_samples and iterations must be at least 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    @property
    def cadence(self) -> int:
        if self.checkpoint_every is not None:
            return max(1, self.checkpoint_every)
        return max(1, self.iterations // 1000)


def hard_ranks(values: np.ndarray) -> np.ndarray:
    """Rank of each coordinate along the last axis (0 = smallest).

    Ties go to the lower index first, i.e. ``argsort(argsort(v))`` with a
    stable sort.
    """
    values = np.asarray(values)
    return np.argsort(np.argsort(values, axis=-1, kind="stable"), axis=-1, kind="stable")


def perturbed_ranks(
    theta_sub: np.ndarray, epsilon: float, mc_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Monte-Carlo mean of ``hard_ranks(theta + epsilon * Z)``, Z ~ Gumbel(0, 1).

    Leading axes of ``theta_sub`` are treated as a batch.
    """
    theta_sub = np.asarray(theta_sub, dtype=float)
    z = rng.gumbel(size=(mc_samples,) + theta_sub.shape)
    return hard_ranks(theta_sub + epsilon * z).mean(axis=0)


def target_ranks(length: int) -> np.ndarray:
    return np.arange(length - 1, -1, -1)


class _LengthGroups:
    """Votes bucketed by length so rank computations vectorise."""

    def __init__(self, votes: Sequence[Vote]):
        self.groups: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        by_len: dict[int, list[int]] = {}
        for k, v in enumerate(votes):
            by_len.setdefault(len(v.order), []).append(k)
        self.of_vote = np.zeros(len(votes), dtype=np.int64)
        self.row_of_vote = np.zeros(len(votes), dtype=np.int64)
        self.ids: dict[int, np.ndarray] = {}
        for L, ks in sorted(by_len.items()):
            self.ids[L] = np.array([votes[k].order for k in ks], dtype=np.int64).reshape(len(ks), L)
            self.of_vote[ks] = L
            self.row_of_vote[ks] = np.arange(len(ks))

    def batches(self, vote_idx: np.ndarray, weights: np.ndarray):
        """Yield (ids, weights) per length for the selected votes, in length order."""
        lens = self.of_vote[vote_idx]
        for L in sorted(self.ids):
            sel = lens == L
            if np.any(sel):
                yield self.ids[L][self.row_of_vote[vote_idx[sel]]], weights[sel]


def _groups_for(batch) -> tuple[_LengthGroups, np.ndarray]:
    votes = batch.votes if isinstance(batch, PreferenceProfile) else tuple(batch)
    return _LengthGroups(votes), np.array([v.multiplicity for v in votes], dtype=float)


def _gradient(groups, vote_idx, weights, theta, epsilon, mc_samples, rng, m):
    g = np.zeros(m)
    for ids, w in groups.batches(vote_idx, weights):
        L = ids.shape[1]
        y_hat = perturbed_ranks(theta[ids], epsilon, mc_samples, rng)
        diff = (y_hat - target_ranks(L)) * w[:, None]
        g += np.bincount(ids.ravel(), diff.ravel(), minlength=m)
    return g


def fy_gradient(
    batch: PreferenceProfile | Sequence[Vote],
    theta: np.ndarray,
    config: FyConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Batch-mean of scattered ``perturbed_ranks(theta_S) - y`` per vote."""
    theta = np.asarray(theta, dtype=float)
    groups, mult = _groups_for(batch)
    total = mult.sum()
    if total == 0:
        return np.zeros(len(theta))
    idx = np.arange(len(mult))
    return _gradient(groups, idx, mult / total, theta, config.epsilon, config.mc_samples, rng, len(theta))


def fy_loss(
    batch: PreferenceProfile | Sequence[Vote],
    theta: np.ndarray,
    config: FyConfig,
    rng: np.random.Generator,
    mc_samples: int | None = None,
) -> float:
    """Monte-Carlo estimate of the batch-mean Fenchel-Young loss.

    Per vote: ``E[max_y y.(theta_S + eps Z)] - y_target.theta_S``, where the
    max over rank vectors is attained at ``hard_ranks(theta_S + eps Z)``.
    """
    theta = np.asarray(theta, dtype=float)
    groups, mult = _groups_for(batch)
    total = mult.sum()
    if total == 0:
        return 0.0
    S = mc_samples or config.mc_samples
    out = 0.0
    for ids, w in groups.batches(np.arange(len(mult)), mult / total):
        L = ids.shape[1]
        sub = theta[ids]
        pert = sub + config.epsilon * rng.gumbel(size=(S,) + sub.shape)
        f = (hard_ranks(pert) * pert).sum(axis=-1).mean(axis=0)
        out += float(np.dot(w, f - sub @ target_ranks(L)))
    return out


def fit_fy(
    profile: PreferenceProfile,
    config: FyConfig,
    theta0: np.ndarray | None = None,
    record_loss: bool = True,
) -> tuple[Ratings, TrainingTrace]:
    """Projected stochastic gradient descent on the Fenchel-Young loss."""
    if profile.n == 0:
        raise ValueError("cannot fit an empty profile")
    m = profile.m
    lo, hi = config.theta_min, config.theta_max
    theta = initial_theta(m, lo, hi) if theta0 is None else np.array(theta0, dtype=float)
    train_seq, loss_seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(train_seq)
    loss_rng = np.random.default_rng(loss_seq)
    groups = _LengthGroups(profile.votes)
    sampler = BallotSampler(profile, rng)
    trace = TrainingTrace()
    if config.batch_size is None:
        all_idx = np.arange(len(profile.votes))
        all_w = profile.multiplicities / profile.n
    for t in range(1, config.iterations + 1):
        if config.batch_size is None:
            idx, w = all_idx, all_w
        else:
            idx = sampler.draw(config.batch_size)
            w = np.full(len(idx), 1.0 / config.batch_size)
        g = _gradient(groups, idx, w, theta, config.epsilon, config.mc_samples, rng, m)
        theta = project(theta - config.learning_rate * g, lo, hi)
        if t % config.cadence == 0 or t == config.iterations:
            loss = (
                fy_loss(profile, theta, config, loss_rng, config.loss_samples)
                if record_loss
                else float("nan")
            )
            trace.record(t, loss, induced_ranking(theta))
    return Ratings(theta, lo, hi), trace
