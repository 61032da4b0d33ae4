"""Approximate posterior over rankings from constant-step SGD iterates.

After a burn-in run, SGD keeps going with a fixed step size and is treated
as a Markov chain whose stationary distribution approximates the Bayesian
posterior over ratings.  Each recorded iterate is reduced to its induced
ranking, giving an empirical distribution over rankings.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .core import PreferenceProfile, Ranking
from .sgd import BallotSampler, SgdConfig, _pair_gradient, fit_sgd, induced_ranking


@dataclass(frozen=True)
class PosteriorConfig:
    burn_in_iterations: int = 10_000
    sampling_iterations: int = 10_000
    sampling_step_size: float | str = "auto"
    thinning: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.burn_in_iterations < 1 or self.sampling_iterations < 1 or self.thinning < 1:
            raise ValueError("iteration counts and thinning must be positive")
        if self.sampling_step_size != "auto" and not float(self.sampling_step_size) > 0:
            raise ValueError("sampling_step_size must be positive or 'auto'")
        if self.sampling_iterations < self.thinning:
            raise ValueError("sampling_iterations must cover at least one thinning interval")


@dataclass(frozen=True)
class RankingDistribution:
    counts: dict[Ranking, int]
    step_size: float = float("nan")
    boundary_contact: bool = False

    def __post_init__(self):
        if not self.counts or sum(self.counts.values()) <= 0:
            raise ValueError("a ranking distribution needs nonempty support")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def probabilities(self) -> dict[Ranking, float]:
        total = self.total
        return {r: c / total for r, c in self.counts.items()}

    def mode(self) -> Ranking:
        # ties go to the lexicographically smallest ranking
        return min(self.counts, key=lambda r: (-self.counts[r], r))

    def sorted_items(self) -> list[tuple[Ranking, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_csv(self, names=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ranking", "count", "probability"])
        total = self.total
        for r, c in self.sorted_items():
            label = ">".join(str(names[a]) if names else str(a) for a in r)
            w.writerow([label, c, repr(c / total)])
        return buf.getvalue()


def pairwise_uncertainty(distribution: RankingDistribution, a: int, b: int) -> float:
    """Posterior probability that ``a`` is ranked above ``b``."""
    if a == b:
        raise ValueError("a and b must differ")
    above = 0
    for r, c in distribution.counts.items():
        if r.index(a) < r.index(b):
            above += c
    return above / distribution.total


def gradient_noise_trace(profile: PreferenceProfile, theta: np.ndarray, tau: float) -> float:
    """Trace of the covariance of single-ballot gradients at ``theta``.

    Ballots are weighted by multiplicity, so this is the exact population
    value ``E||g||^2 - ||E g||^2`` rather than a Monte-Carlo estimate.
    """
    pairs = profile.pairs
    m = profile.m
    theta = np.asarray(theta, dtype=float)
    s = expit((theta[pairs.losers] - theta[pairs.winners]) / tau)
    d = s * (1.0 - s) / tau
    vote = pairs.vote_of_pair()
    # per-(vote, alternative) gradient entries
    keys = np.concatenate([vote * m + pairs.losers, vote * m + pairs.winners])
    vals = np.concatenate([d, -d])
    uniq, inv = np.unique(keys, return_inverse=True)
    entry = np.bincount(inv, vals)
    w_vote = profile.multiplicities / profile.n
    sq_norm = np.bincount(uniq // m, entry**2, minlength=len(profile.votes))
    mean_grad = _pair_gradient(theta, pairs.winners, pairs.losers, w_vote[vote], tau, m)
    return float(np.dot(w_vote, sq_norm) - np.dot(mean_grad, mean_grad))


def optimal_step_size(profile: PreferenceProfile, theta: np.ndarray, sgd_config: SgdConfig) -> float:
    """Scalar constant-SGD step ``2 (K / n) d / tr(C)`` at ``theta``.

    ``K`` is the batch size, ``n`` the number of ballots, ``d`` the number
    of ratings and ``C`` the single-ballot gradient covariance.
    """
    K = sgd_config.batch_size or profile.n
    trace = gradient_noise_trace(profile, theta, sgd_config.temperature)
    if trace <= 0:
        return sgd_config.learning_rate
    return 2.0 * (K / profile.n) * profile.m / trace


def sample_posterior(
    profile: PreferenceProfile,
    sgd_config: SgdConfig,
    posterior_config: PosteriorConfig = PosteriorConfig(),
) -> RankingDistribution:
    if profile.n == 0:
        raise ValueError("cannot sample from an empty profile")
    seed = posterior_config.seed
    burn_cfg = replace(sgd_config, iterations=posterior_config.burn_in_iterations, seed=seed)
    ratings, _ = fit_sgd(profile, burn_cfg, record_loss=False)
    theta = ratings.theta.copy()
    lo, hi = sgd_config.theta_min, sgd_config.theta_max
    interior = bool(np.all((theta > lo) & (theta < hi)))

    if posterior_config.sampling_step_size == "auto":
        eps = optimal_step_size(profile, theta, sgd_config)
    else:
        eps = float(posterior_config.sampling_step_size)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    sampler = BallotSampler(profile, rng)
    pairs = profile.pairs
    m, tau = profile.m, sgd_config.temperature
    K = sgd_config.batch_size
    if K is None:
        full_w = np.repeat(profile.multiplicities / profile.n, pairs.counts)
    counts: Counter = Counter()
    for t in range(1, posterior_config.sampling_iterations + 1):
        if K is None:
            g = _pair_gradient(theta, pairs.winners, pairs.losers, full_w, tau, m)
        else:
            idx = pairs.select(sampler.draw(K))
            g = _pair_gradient(theta, pairs.winners[idx], pairs.losers[idx], np.full(len(idx), 1.0 / K), tau, m)
        theta = theta - eps * g
        if not interior:
            theta = np.clip(theta, lo, hi)
        if t % posterior_config.thinning == 0:
            counts[induced_ranking(theta)] += 1
    return RankingDistribution(dict(counts), eps, not interior)
