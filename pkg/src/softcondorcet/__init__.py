"""Soft Condorcet optimization: rating alternatives from partial rankings.

Ratings are fit by minimising a smooth surrogate of the summed Kendall-tau
distance between the induced ranking and every vote.
"""

from types import ModuleType as _Module

from .baselines import (
    EloConfig,
    approval,
    borda,
    copeland,
    elo_fit_mm,
    elo_online,
    elo_predict,
    elo_update_online,
    plurality,
    ranked_pairs,
)
from .core import (
    PairwiseCounts,
    PreferenceProfile,
    ProfileError,
    Vote,
    build_profile,
    condorcet_winner,
    margin_matrix,
    preference_matrix,
    ranking_from_scores,
)
from .data import (
    GroundTruth,
    InfeasibleSplit,
    PrefLibFormatError,
    TournamentConfig,
    dump_preflib,
    generate_diplomacy_like,
    generate_tournament,
    missing_pair_proportion,
    mtrd,
    parse_preflib,
    read_preflib,
    train_test_split,
)
from .fenchel_young import FyConfig, fit_fy, fy_gradient, fy_loss, perturbed_ranks
from .metrics import (
    KemenyResult,
    condorcet_match,
    kemeny_optimal,
    kemeny_score,
    kendall_tau,
    mean_vote_distance,
    normalized_kendall_tau,
    profile_distance,
)
from .posterior import PosteriorConfig, RankingDistribution, pairwise_uncertainty, sample_posterior
from .sgd import (
    Ratings,
    SgdConfig,
    TrainingTrace,
    fit_sgd,
    online_pass,
    sigmoid_loss,
    sigmoid_loss_gradient,
    update_online,
)
from .sigmoidal import (
    BnbConfig,
    SigmoidalProgram,
    build_program,
    export_program,
    recover_ratings,
    solve_branch_and_bound,
)

__all__ = [n for n, v in dict(globals()).items() if not n.startswith("_") and not isinstance(v, _Module)]
