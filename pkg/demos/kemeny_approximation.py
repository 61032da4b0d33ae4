"""How close does SGD on the sigmoid loss get to an exact Kemeny ranking?

Draws a handful of Mallows profiles, fits each one with a few seeds and
prints the normalized Kendall-tau distance to the nearest Kemeny-optimal
ranking.  Pass a count on the command line for a bigger sweep.
"""

import sys

import numpy as np

from softcondorcet import SgdConfig
from softcondorcet.experiments import random_profile_suite, run_kemeny_eval


def main(count=10):
    profiles = random_profile_suite(count, seed=0)
    rep = run_kemeny_eval(profiles, SgdConfig(iterations=3000))
    for row in rep.rows:
        if row["seed"] == 0:
            print(f"m={row['m']} n={row['n']:>3}  sco {row['ranking']:<14} "
                  f"kemeny {row['kemeny_ranking']:<14} K_n={row['k_n']:.3f}")
    wins = [r["condorcet_match"] for r in rep.rows if r["condorcet_match"] is not None]
    print(f"\nmean K_n {np.mean([r['k_n'] for r in rep.rows]):.4f}, "
          f"Condorcet winner on top in {sum(wins)}/{len(wins)} fits")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
