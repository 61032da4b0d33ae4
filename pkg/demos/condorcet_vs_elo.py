"""Where a Condorcet-consistent rating and Elo disagree.

Two voters say A > B > C and three say C > A > B.  C beats both others
head-to-head, so it is the Condorcet winner, yet Elo (Bradley-Terry fit by
minorization-maximization) puts A on top because A collects more pairwise
wins in total.  The sigmoid rating follows the majority instead.
"""

from softcondorcet import FyConfig, SgdConfig, elo_fit_mm, fit_fy, fit_sgd, kemeny_optimal
from softcondorcet.experiments import ranking_label, warmup_profile
from softcondorcet.sigmoidal import solve_profile


def show(title, ranking, profile):
    print(f"{title:<28} {ranking_label(ranking, profile)}")


def main():
    profile = warmup_profile()
    sco, trace = fit_sgd(profile, SgdConfig(batch_size=None, learning_rate=0.1))
    show("sigmoid rating (full batch)", sco.ranking(), profile)
    print(f"{'':<28} reached C>A>B at step {trace.convergence_iteration((2, 0, 1))}")

    ranking, bnb = solve_profile(profile)
    show("global optimum (B&B)", ranking, profile)
    print(f"{'':<28} {bnb.nodes} nodes, gap {bnb.gap:.1e}")

    show("Kemeny", kemeny_optimal(profile).ranking, profile)

    elo = elo_fit_mm(profile)
    print(f"{'Elo (MM)':<28} " + ", ".join(f"{n}={v:.1f}" for n, v in zip(profile.names, elo)))

    fy, _ = fit_fy(profile, FyConfig(batch_size=None, iterations=2000))
    show("Fenchel-Young", fy.ranking(), profile)


if __name__ == "__main__":
    main()
