"""Uncertainty over rankings from constant-step SGD.

Ten simulated agents play 500 four-player games.  After burn-in, SGD keeps
running with a step size matched to its own gradient noise, and the
rankings it visits are tallied.  Pairs of agents with similar true skill
should come out near a coin flip.
"""

from softcondorcet import SgdConfig, pairwise_uncertainty, sample_posterior
from softcondorcet.experiments import posterior_instance
from softcondorcet.posterior import PosteriorConfig


def main(seed=0):
    profile, truth = posterior_instance(seed)
    dist = sample_posterior(profile, SgdConfig(), PosteriorConfig(seed=seed))
    print(f"step size {dist.step_size:.4g}, {dist.total} samples")
    print("true ranking", truth.true_ranking)
    for ranking, count in dist.sorted_items()[:5]:
        print(f"  {count / dist.total:5.3f}  {ranking}")
    print("adjacent pairs, true skill gap and P(higher ranked first):")
    ref = truth.true_ranking
    for a, b in zip(ref, ref[1:]):
        gap = truth.true_ratings[a] - truth.true_ratings[b]
        print(f"  {a}>{b}  gap {gap:6.2f}  p {pairwise_uncertainty(dist, a, b):.3f}")


if __name__ == "__main__":
    main()
