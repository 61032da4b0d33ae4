"""Experiment drivers.  Each returns an :class:`ExperimentReport`."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import (
    approval,
    borda,
    copeland,
    elo_fit_mm,
    elo_online,
    plurality,
    ranked_pairs,
)
from .core import (
    PreferenceProfile,
    Ranking,
    build_profile,
    condorcet_winner,
    margin_matrix,
    preference_matrix,
    ranking_from_scores,
)
from .data import (
    GroundTruth,
    TournamentConfig,
    generate_tournament,
    missing_pair_proportion,
    mtrd,
    random_mallows_profile,
    train_test_split,
)
from .fenchel_young import FyConfig, fit_fy
from .metrics import kemeny_optimal, kendall_tau, mean_vote_distance, normalized_kendall_tau
from .posterior import PosteriorConfig, pairwise_uncertainty, sample_posterior
from .sgd import SgdConfig, fit_sgd, initial_theta, online_pass

WARMUP_VOTES = [(("A", "B", "C"), 2), (("C", "A", "B"), 3)]
ELO_TIE_VOTES = [
    (("A", "B", "C"), 1),
    (("A", "C", "B"), 1),
    (("C", "A", "B"), 2),
    (("B", "C", "A"), 1),
]

# (low, high) bounds on m for the Kemeny-evaluation summary groups
M_GROUPS = tuple((m, m) for m in range(2, 11)) + (
    (11, 20), (21, 50), (51, 100), (101, 200), (201, 500), (501, None),
)

TOURNAMENT_NS = (5, 10, 20, 30, 50, 75, 100, 200)
TOURNAMENT_METHODS = (
    "sigmoid", "fy", "elo-mm", "copeland", "borda", "plurality", "approval", "ranked-pairs",
)


def warmup_profile() -> PreferenceProfile:
    return build_profile(WARMUP_VOTES, alternatives=("A", "B", "C"))


def elo_tie_profile() -> PreferenceProfile:
    return build_profile(ELO_TIE_VOTES, alternatives=("A", "B", "C"))


@dataclass
class ExperimentReport:
    """Rows of metric values plus an echo of the configuration.

    ``key`` names the columns that identify a cell; rows are emitted sorted
    by them.  ``wall_clock`` is informational and never written to files,
    so identical configurations give byte-identical output.
    """

    name: str
    config: dict
    columns: tuple[str, ...]
    key: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)
    wall_clock: float = 0.0

    def add(self, **row):
        missing = set(self.columns) - set(row)
        if missing:
            raise ValueError(f"row lacks columns {sorted(missing)}")
        self.rows.append(row)

    def sorted_rows(self) -> list[dict]:
        def k(row):
            return tuple(_sort_key(row[c]) for c in self.key)

        return sorted(self.rows, key=k)

    def select(self, **where) -> list[dict]:
        return [r for r in self.rows if all(r[c] == v for c, v in where.items())]


def _sort_key(v):
    # None sorts first; numbers before strings
    if v is None:
        return (0, 0, "")
    if isinstance(v, (int, float, np.integer, np.floating)):
        return (1, float(v), "")
    return (2, 0, str(v))


def mean_ci(values: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% half-width ``1.96 * sd / sqrt(k)`` (0 for fewer than 2 values)."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return float("nan"), float("nan")
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(1.96 * x.std(ddof=1) / np.sqrt(x.size))


def ranking_label(ranking: Ranking, profile: PreferenceProfile | None = None) -> str:
    if profile is not None and profile.names:
        return ">".join(profile.names[a] for a in ranking)
    return ">".join(str(a) for a in ranking)


# ---------------------------------------------------------------- warmup


def run_warmup(
    seeds: Sequence[int] = (0, 1, 2),
    alphas: Sequence[float] = (0.01, 0.1),
    taus: Sequence[float] = (0.5, 1.0, 2.0),
    iterations: int = 10_000,
    sgd_batch: int = 2,
) -> ExperimentReport:
    """Convergence iterations on the five-vote three-alternative profile.

    GD is full-batch (deterministic, one row per cell with seed 0); SGD uses
    batches of ``sgd_batch`` and one row per seed.  Elo-MM and FY rows
    report their final orders.
    """
    t0 = time.perf_counter()
    profile = warmup_profile()
    target = (2, 0, 1)
    rep = ExperimentReport(
        "warmup",
        dict(alphas=list(alphas), taus=list(taus), iterations=iterations, sgd_batch=sgd_batch),
        ("method", "alpha", "tau", "seed", "convergence_iteration", "final_ranking"),
        ("method", "alpha", "tau", "seed"),
        seeds=list(seeds),
    )
    for alpha in alphas:
        for tau in taus:
            cells = [("gd", None, 0)] + [("sgd", sgd_batch, s) for s in seeds]
            for method, batch, seed in cells:
                cfg = SgdConfig(
                    learning_rate=alpha, temperature=tau, batch_size=batch,
                    iterations=iterations, seed=seed, checkpoint_every=1,
                )
                ratings, trace = fit_sgd(profile, cfg, record_loss=False)
                rep.add(
                    method=method, alpha=alpha, tau=tau, seed=seed,
                    convergence_iteration=trace.convergence_iteration(target),
                    final_ranking=ranking_label(ratings.ranking(), profile),
                )
    elo = elo_fit_mm(profile)
    rep.add(method="elo-mm", alpha=None, tau=None, seed=0, convergence_iteration=None,
            final_ranking=ranking_label(ranking_from_scores(elo), profile))
    fy, _ = fit_fy(profile, FyConfig(batch_size=None, iterations=2000, seed=0), record_loss=False)
    rep.add(method="fy", alpha=None, tau=None, seed=0, convergence_iteration=None,
            final_ranking=ranking_label(fy.ranking(), profile))
    rep.wall_clock = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------- Kemeny


def random_profile_suite(
    count: int = 200,
    seed: int = 0,
    m_range: tuple[int, int] = (3, 7),
    n_range: tuple[int, int] = (10, 200),
    phi_range: tuple[float, float] = (0.3, 0.9),
) -> list[PreferenceProfile]:
    """Mallows profiles with m, n and dispersion drawn uniformly per instance."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        phi = float(rng.uniform(*phi_range))
        out.append(random_mallows_profile(m, n, phi, seed=int(rng.integers(2**31))))
    return out


def _group_of(m: int) -> str:
    for lo, hi in M_GROUPS:
        if m >= lo and (hi is None or m <= hi):
            return f"{lo}-{hi if hi is not None else 'inf'}"
    return f"{m}"


def run_kemeny_eval(
    profiles: Sequence[PreferenceProfile],
    sgd_config: SgdConfig | Sequence[SgdConfig] = SgdConfig(),
    seeds: Sequence[int] = (0, 1, 2),
    max_kemeny_m: int = 10,
    instance_ids: Sequence[str] | None = None,
) -> ExperimentReport:
    """SCO rankings against the exact Kemeny ranking and Condorcet winners.

    ``k_n`` is the normalized distance to the closest co-optimal Kemeny
    ranking; ``k_n_lex`` uses the lexicographically smallest one.  Several
    SGD configurations may be given; every one is reported and the summary
    also marks the best configuration per m-group.
    """
    t0 = time.perf_counter()
    configs = [sgd_config] if isinstance(sgd_config, SgdConfig) else list(sgd_config)
    ids = list(instance_ids) if instance_ids is not None else [f"{i:05d}" for i in range(len(profiles))]
    rep = ExperimentReport(
        "kemeny-eval",
        dict(configs=[asdict(c) for c in configs], max_kemeny_m=max_kemeny_m),
        ("instance", "config", "seed", "m", "n", "group", "ranking", "kemeny_ranking",
         "k_n", "k_n_lex", "condorcet_winner", "condorcet_match"),
        ("instance", "config", "seed"),
        seeds=list(seeds),
    )
    for inst, profile in zip(ids, profiles):
        kem = kemeny_optimal(profile, max_m=max_kemeny_m, all_optimal=True) if profile.m <= max_kemeny_m else None
        strong, _ = condorcet_winner(margin_matrix(preference_matrix(profile)))
        for ci, cfg in enumerate(configs):
            for seed in seeds:
                ratings, _ = fit_sgd(profile, replace(cfg, seed=seed), record_loss=False)
                r = ratings.ranking()
                if kem is not None:
                    k_n = min(normalized_kendall_tau(r, c) for c in kem.co_optimal)
                    k_lex = normalized_kendall_tau(r, kem.ranking)
                    kr = ranking_label(kem.ranking, profile)
                else:
                    k_n = k_lex = None
                    kr = None
                rep.add(
                    instance=inst, config=ci, seed=seed, m=profile.m, n=profile.n,
                    group=_group_of(profile.m), ranking=ranking_label(r, profile),
                    kemeny_ranking=kr, k_n=k_n, k_n_lex=k_lex,
                    condorcet_winner=strong,
                    condorcet_match=None if strong is None else int(r[0] == strong),
                )
    rep.summary = _kemeny_summary(rep, len(configs))
    rep.wall_clock = time.perf_counter() - t0
    return rep


def _kemeny_summary(rep: ExperimentReport, n_configs: int) -> list[dict]:
    out = []
    groups = sorted({r["group"] for r in rep.rows}, key=lambda g: int(g.split("-")[0]))
    for g in groups:
        per_cfg = []
        for ci in range(n_configs):
            rows = rep.select(group=g, config=ci)
            # average over seeds per instance first
            inst = sorted({r["instance"] for r in rows})
            kn = [np.mean([r["k_n"] for r in rows if r["instance"] == i]) for i in inst
                  if rows and all(r["k_n"] is not None for r in rows if r["instance"] == i)]
            cm = [np.mean([r["condorcet_match"] for r in rows if r["instance"] == i]) for i in inst
                  if any(r["condorcet_match"] is not None for r in rows if r["instance"] == i)]
            per_cfg.append(dict(
                group=g, config=ci, size=len(inst),
                mean_m=float(np.mean([r["m"] for r in rows])),
                mean_n=float(np.mean([r["n"] for r in rows])),
                condorcet_match=float(np.mean(cm)) if cm else None,
                mean_k_n=float(np.mean(kn)) if kn else None,
                best=False,
            ))
        scored = [s for s in per_cfg if s["mean_k_n"] is not None]
        if scored:
            min(scored, key=lambda s: (s["mean_k_n"], s["config"]))["best"] = True
        out.extend(per_cfg)
    return out


# ---------------------------------------------------------------- sparse tournaments


def _method_ranking(
    method: str, profile: PreferenceProfile, sgd_config: SgdConfig, fy_config: FyConfig, seed: int
) -> Ranking:
    if method == "sigmoid":
        return fit_sgd(profile, replace(sgd_config, seed=seed), record_loss=False)[0].ranking()
    if method == "fy":
        return fit_fy(profile, replace(fy_config, seed=seed), record_loss=False)[0].ranking()
    if method == "elo-mm":
        return ranking_from_scores(elo_fit_mm(profile))
    rules: dict[str, Callable] = {
        "copeland": copeland, "borda": borda, "plurality": plurality,
        "approval": approval, "ranked-pairs": ranked_pairs,
    }
    if method not in rules:
        raise ValueError(f"unknown method {method!r}")
    return rules[method](profile)


def run_sparse_tournament(
    ns: Sequence[int] = TOURNAMENT_NS,
    matchings: Sequence[str] = ("uniform", "skill_matched"),
    seeds: Sequence[int] = range(50),
    methods: Sequence[str] = TOURNAMENT_METHODS,
    sgd_config: SgdConfig = SgdConfig(learning_rate=1.0, batch_size=16, iterations=10_000),
    fy_config: FyConfig = FyConfig(learning_rate=0.1, batch_size=16, iterations=10_000),
    tournament: TournamentConfig = TournamentConfig(),
) -> ExperimentReport:
    """KTD and MTRD to the true ranking for every method on simulated contests.

    A ``truth`` row per cell scores the true ranking itself (always 0).
    """
    t0 = time.perf_counter()
    rep = ExperimentReport(
        "tournament",
        dict(ns=list(ns), matchings=list(matchings), methods=list(methods),
             sgd=asdict(sgd_config), fy=asdict(fy_config), tournament=asdict(tournament)),
        ("matching", "n", "seed", "method", "ktd", "mtrd", "missing"),
        ("matching", "n", "method", "seed"),
        seeds=list(seeds),
    )
    for matching in matchings:
        for n in ns:
            for seed in seeds:
                cfg = replace(tournament, num_contests=n, matching=matching, seed=seed)
                profile, truth = generate_tournament(cfg)
                miss = missing_pair_proportion(profile)
                rep.add(matching=matching, n=n, seed=seed, method="truth", ktd=0,
                        mtrd=0.0, missing=miss)
                for method in methods:
                    r = _method_ranking(method, profile, sgd_config, fy_config, seed)
                    rep.add(matching=matching, n=n, seed=seed, method=method,
                            ktd=kendall_tau(truth.true_ranking, r), mtrd=mtrd(r, truth),
                            missing=miss)
    rep.summary = summarize(rep, ("matching", "n", "method"), ("ktd", "mtrd", "missing"))
    rep.wall_clock = time.perf_counter() - t0
    return rep


def missingness_table(
    ns: Sequence[int] = TOURNAMENT_NS,
    matchings: Sequence[str] = ("uniform", "skill_matched"),
    seeds: Sequence[int] = range(200),
    tournament: TournamentConfig = TournamentConfig(),
) -> dict[tuple[str, int], float]:
    """Mean proportion of never-compared pairs per (matching, n)."""
    out = {}
    for matching in matchings:
        for n in ns:
            vals = [
                missing_pair_proportion(
                    generate_tournament(replace(tournament, num_contests=n, matching=matching, seed=s))[0]
                )
                for s in seeds
            ]
            out[matching, n] = float(np.mean(vals))
    return out


def summarize(rep: ExperimentReport, by: Sequence[str], metrics: Sequence[str]) -> list[dict]:
    cells: dict[tuple, list[dict]] = {}
    for r in rep.rows:
        cells.setdefault(tuple(r[c] for c in by), []).append(r)
    out = []
    for key in sorted(cells, key=lambda k: tuple(_sort_key(v) for v in k)):
        row = dict(zip(by, key))
        row["count"] = len(cells[key])
        for mname in metrics:
            mean, half = mean_ci([r[mname] for r in cells[key]])
            row[f"{mname}_mean"] = mean
            row[f"{mname}_ci95"] = half
        out.append(row)
    return out


# ---------------------------------------------------------------- train/test evaluation


def _checkpoint_curve(test: PreferenceProfile, trace) -> list[tuple[int, float]]:
    return [(t, mean_vote_distance(test, r)) for t, r in zip(trace.iterations, trace.rankings)]


def run_large_sparse_eval(
    dataset: PreferenceProfile,
    methods: Sequence[str] = ("sigmoid", "fy", "elo-online"),
    splits: Sequence[int] = range(50),
    test_count: int | None = None,
    sgd_config: SgdConfig = SgdConfig(learning_rate=0.02, temperature=0.5, batch_size=32, iterations=20_000),
    fy_config: FyConfig = FyConfig(learning_rate=0.003, batch_size=32, iterations=20_000),
    checkpoint_every: int = 1000,
) -> ExperimentReport:
    """KTD_test curves (mean subset-Kendall-tau to held-out votes).

    Iteration 0 is the untrained initial ranking.  ``elo-online`` makes one
    shuffled pass over the training votes and reports only its final value
    at iteration equal to the training-set size.
    """
    t0 = time.perf_counter()
    if test_count is None:
        test_count = max(1, round(0.1 * dataset.n))
    rep = ExperimentReport(
        "large-eval",
        dict(methods=list(methods), test_count=test_count, sgd=asdict(sgd_config),
             fy=asdict(fy_config), checkpoint_every=checkpoint_every),
        ("split", "method", "iteration", "ktd_test"),
        ("method", "split", "iteration"),
        seeds=list(splits),
    )
    for split in splits:
        train, test = train_test_split(dataset, test_count, seed=split)
        init = ranking_from_scores(initial_theta(train.m))
        for method in methods:
            if method in ("sigmoid", "fy"):
                rep.add(split=split, method=method, iteration=0,
                        ktd_test=mean_vote_distance(test, init))
            if method == "sigmoid":
                cfg = replace(sgd_config, seed=split, checkpoint_every=checkpoint_every)
                _, trace = fit_sgd(train, cfg, record_loss=False)
            elif method == "fy":
                cfg = replace(fy_config, seed=split, checkpoint_every=checkpoint_every)
                _, trace = fit_fy(train, cfg, record_loss=False)
            elif method == "elo-online":
                order = np.random.default_rng(split).permutation(len(train.votes))
                r = ranking_from_scores(elo_online(train, order))
                rep.add(split=split, method=method, iteration=len(order),
                        ktd_test=mean_vote_distance(test, r))
                continue
            else:
                raise ValueError(f"unknown method {method!r}")
            for t, v in _checkpoint_curve(test, trace):
                rep.add(split=split, method=method, iteration=t, ktd_test=v)
    rep.summary = summarize(rep, ("method", "iteration"), ("ktd_test",))
    rep.wall_clock = time.perf_counter() - t0
    return rep


def median_curve(rep: ExperimentReport, method: str) -> list[tuple[int, float]]:
    """Median KTD_test across splits at each checkpoint."""
    by_t: dict[int, list[float]] = {}
    for r in rep.select(method=method):
        by_t.setdefault(r["iteration"], []).append(r["ktd_test"])
    return [(t, float(np.median(by_t[t]))) for t in sorted(by_t)]


def run_online_eval(
    dataset: PreferenceProfile,
    splits: Sequence[int] = range(50),
    alphas: Sequence[float] = (0.5, 0.2, 0.1, 0.02, 0.01),
    taus: Sequence[float] = (0.5, 1.0, 2.0),
    test_count: int | None = None,
    num_checkpoints: int = 20,
) -> ExperimentReport:
    """One pass of batch-size-1 SCO per (alpha, tau), and online Elo.

    Each split shuffles the training votes once; every method sees that
    same order, so the pass length equals the training-set size.
    """
    t0 = time.perf_counter()
    if test_count is None:
        test_count = max(1, round(0.1 * dataset.n))
    rep = ExperimentReport(
        "online-eval",
        dict(alphas=list(alphas), taus=list(taus), test_count=test_count,
             num_checkpoints=num_checkpoints),
        ("split", "method", "alpha", "tau", "iteration", "ktd_test"),
        ("method", "alpha", "tau", "split", "iteration"),
        seeds=list(splits),
    )
    for split in splits:
        train, test = train_test_split(dataset, test_count, seed=split)
        expanded = train.with_votes(train.expanded())
        T = len(expanded.votes)
        order = np.random.default_rng(split).permutation(T)
        marks = sorted({max(1, round(T * k / num_checkpoints)) for k in range(1, num_checkpoints + 1)})

        def recorder(method, alpha, tau):
            def cb(t, theta):
                rep.add(split=split, method=method, alpha=alpha, tau=tau, iteration=t,
                        ktd_test=mean_vote_distance(test, ranking_from_scores(theta)))
            return cb

        for alpha in alphas:
            for tau in taus:
                online_pass(expanded, order, alpha, tau, checkpoints=marks,
                            callback=recorder("sco-online", alpha, tau))
        elo_online(expanded, order, checkpoints=marks, callback=recorder("elo-online", None, None))
    rep.summary = summarize(rep, ("method", "alpha", "tau", "iteration"), ("ktd_test",))
    rep.wall_clock = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------- posterior


def run_posterior(
    profile: PreferenceProfile,
    sgd_config: SgdConfig = SgdConfig(),
    posterior_config: PosteriorConfig = PosteriorConfig(),
    truth: GroundTruth | None = None,
) -> ExperimentReport:
    """Sampled ranking frequencies plus adjacent-pair probabilities.

    Adjacent pairs follow the true ranking if ``truth`` is given, else the
    modal sampled ranking.
    """
    t0 = time.perf_counter()
    dist = sample_posterior(profile, sgd_config, posterior_config)
    rep = ExperimentReport(
        "posterior",
        dict(sgd=asdict(sgd_config), posterior=asdict(posterior_config),
             step_size=dist.step_size, boundary_contact=dist.boundary_contact),
        ("kind", "ranking", "count", "probability"),
        ("kind", "ranking"),
        seeds=[posterior_config.seed],
    )
    for r, c in dist.sorted_items():
        rep.add(kind="ranking", ranking=ranking_label(r, profile), count=c,
                probability=c / dist.total)
    ref = truth.true_ranking if truth is not None else dist.mode()
    for a, b in zip(ref, ref[1:]):
        label = ranking_label((a, b), profile)
        rep.add(kind="pair", ranking=label, count=None,
                probability=pairwise_uncertainty(dist, a, b))
    rep.wall_clock = time.perf_counter() - t0
    return rep


def posterior_instance(seed: int, num_contests: int = 500) -> tuple[PreferenceProfile, GroundTruth]:
    """Ten agents, skills ~ N(100, 30), skill-matched four-player contests."""
    return generate_tournament(
        TournamentConfig(num_agents=10, contest_size=4, num_contests=num_contests,
                         matching="skill_matched", seed=seed)
    )
