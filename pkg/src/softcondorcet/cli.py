"""Command-line entry point: ``python -m softcondorcet <verb> ...``.

Config files are ``key = value`` lines (``#`` starts a comment); lists are
comma-separated.  Unknown keys are an error.  On failure the last line on
stderr is a JSON object ``{"error": <kind>, "message": <text>}`` and the
exit status is nonzero:

    2  bad arguments or config
    3  unreadable or malformed dataset
    4  infeasible train/test split
    1  anything else
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .baselines import EloConfig, elo_fit_mm, borda_scores, copeland_scores
from .data import (
    InfeasibleSplit,
    PrefLibFormatError,
    generate_diplomacy_like,
    parse_synthetic,
)
from .experiments import (
    ExperimentReport,
    TOURNAMENT_METHODS,
    TOURNAMENT_NS,
    posterior_instance,
    random_profile_suite,
    run_kemeny_eval,
    run_large_sparse_eval,
    run_online_eval,
    run_posterior,
    run_sparse_tournament,
    run_warmup,
)
from .fenchel_young import FyConfig, fit_fy
from .posterior import PosteriorConfig
from .report import report_to_csv, report_to_json
from .sgd import SgdConfig, fit_sgd


class UsageError(Exception):
    pass


class DatasetError(Exception):
    pass


# key -> parser per verb; defaults live in the run_* signatures unless given here
_INT, _FLOAT, _STR = int, float, str


def _ints(s):
    return [int(x) for x in s.split(",") if x.strip()]


def _floats(s):
    return [float(x) for x in s.split(",") if x.strip()]


def _strs(s):
    return [x.strip() for x in s.split(",") if x.strip()]


def _opt_int(s):
    return None if s.strip().lower() in ("none", "full") else int(s)


_SGD_KEYS = dict(learning_rate=_FLOAT, temperature=_FLOAT, batch_size=_opt_int, iterations=_INT)

KEYS = {
    "warmup": dict(num_seeds=_INT, iterations=_INT, sgd_batch=_INT, alphas=_floats, taus=_floats),
    "kemeny-eval": dict(num_seeds=_INT, random_profiles=_INT, m_min=_INT, m_max=_INT,
                        n_min=_INT, n_max=_INT, max_kemeny_m=_INT, **_SGD_KEYS),
    "tournament": dict(num_seeds=_INT, ns=_ints, matchings=_strs, methods=_strs,
                       fy_epsilon=_FLOAT, fy_learning_rate=_FLOAT, **_SGD_KEYS),
    "large-eval": dict(splits=_INT, test_count=_INT, methods=_strs, checkpoint_every=_INT,
                       fy_learning_rate=_FLOAT, fy_epsilon=_FLOAT, num_agents=_INT,
                       num_games=_INT, **_SGD_KEYS),
    "online-eval": dict(splits=_INT, test_count=_INT, alphas=_floats, taus=_floats,
                        num_checkpoints=_INT, num_agents=_INT, num_games=_INT),
    "posterior": dict(burn_in_iterations=_INT, sampling_iterations=_INT, thinning=_INT,
                      sampling_step_size=_STR, num_contests=_INT, **_SGD_KEYS),
    "rate": dict(method=_STR, epsilon=_FLOAT, **_SGD_KEYS),
}


def load_config(path: str | None, verb: str) -> dict:
    if path is None:
        return {}
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string("[run]\n" + text)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for key, raw in parser["run"].items():
        conv = KEYS[verb].get(key)
        if conv is None:
            raise UsageError(f"unknown config key {key!r} for {verb}")
        try:
            out[key] = conv(raw)
        except ValueError as exc:
            raise UsageError(f"bad value for {key!r}: {raw!r}") from exc
    return out


def load_dataset(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    try:
        profile, truth, _ = parse_synthetic(text)
    except PrefLibFormatError as exc:
        raise DatasetError(f"{path}: {exc}") from exc
    return profile, truth


def _sgd(cfg: dict, base: SgdConfig, seed: int) -> SgdConfig:
    kw = {k: cfg[k] for k in _SGD_KEYS if k in cfg}
    return replace(base, seed=seed, **kw)


def _seeds(cfg, seed, default):
    return list(range(seed, seed + cfg.get("num_seeds", default)))


def _dataset_or_preset(args, cfg):
    if args.dataset and args.preset:
        raise UsageError("give a dataset or --preset, not both")
    if args.dataset:
        return load_dataset(args.dataset)[0]
    if args.preset == "diplomacy-like":
        kw = {k: cfg[k] for k in ("num_agents", "num_games") if k in cfg}
        return generate_diplomacy_like(seed=args.seed, **kw)[0]
    raise UsageError("a dataset path or --preset diplomacy-like is required")


def cmd_warmup(args, cfg) -> ExperimentReport:
    kw = {k: cfg[k] for k in ("iterations", "sgd_batch", "alphas", "taus") if k in cfg}
    return run_warmup(seeds=_seeds(cfg, args.seed, 3), **kw)


def cmd_kemeny(args, cfg) -> ExperimentReport:
    sgd = _sgd(cfg, SgdConfig(), args.seed)
    if args.dataset:
        profiles = [load_dataset(p)[0] for p in args.dataset]
        ids = [Path(p).name for p in args.dataset]
    else:
        count = cfg.get("random_profiles", 200)
        profiles = random_profile_suite(
            count, args.seed,
            (cfg.get("m_min", 3), cfg.get("m_max", 7)),
            (cfg.get("n_min", 10), cfg.get("n_max", 200)),
        )
        ids = [f"random-{i:04d}" for i in range(count)]
    return run_kemeny_eval(profiles, sgd, seeds=_seeds(cfg, args.seed, 3),
                           max_kemeny_m=cfg.get("max_kemeny_m", 10), instance_ids=ids)


def cmd_tournament(args, cfg) -> ExperimentReport:
    sgd = _sgd(cfg, SgdConfig(learning_rate=1.0, batch_size=16, iterations=10_000), args.seed)
    fy = FyConfig(learning_rate=cfg.get("fy_learning_rate", 0.1), epsilon=cfg.get("fy_epsilon", 1.0),
                  batch_size=16, iterations=sgd.iterations)
    return run_sparse_tournament(
        ns=cfg.get("ns", TOURNAMENT_NS),
        matchings=cfg.get("matchings", ("uniform", "skill_matched")),
        seeds=_seeds(cfg, args.seed, 50),
        methods=cfg.get("methods", TOURNAMENT_METHODS),
        sgd_config=sgd, fy_config=fy,
    )


def cmd_large(args, cfg) -> ExperimentReport:
    data = _dataset_or_preset(args, cfg)
    base = SgdConfig(learning_rate=0.02, temperature=0.5, batch_size=32, iterations=20_000)
    sgd = _sgd(cfg, base, args.seed)
    fy = FyConfig(learning_rate=cfg.get("fy_learning_rate", 0.003), epsilon=cfg.get("fy_epsilon", 1.0),
                  batch_size=sgd.batch_size, iterations=sgd.iterations)
    return run_large_sparse_eval(
        data, methods=cfg.get("methods", ("sigmoid", "fy", "elo-online")),
        splits=range(args.seed, args.seed + cfg.get("splits", 10)),
        test_count=cfg.get("test_count"), sgd_config=sgd, fy_config=fy,
        checkpoint_every=cfg.get("checkpoint_every", 1000),
    )


def cmd_online(args, cfg) -> ExperimentReport:
    data = _dataset_or_preset(args, cfg)
    kw = {k: cfg[k] for k in ("alphas", "taus", "test_count", "num_checkpoints") if k in cfg}
    return run_online_eval(data, splits=range(args.seed, args.seed + cfg.get("splits", 50)), **kw)


def cmd_posterior(args, cfg) -> ExperimentReport:
    truth = None
    if args.dataset:
        profile, truth = load_dataset(args.dataset)
    else:
        profile, truth = posterior_instance(args.seed, cfg.get("num_contests", 500))
    step = cfg.get("sampling_step_size", "auto")
    pcfg = PosteriorConfig(
        burn_in_iterations=cfg.get("burn_in_iterations", 10_000),
        sampling_iterations=cfg.get("sampling_iterations", 10_000),
        thinning=cfg.get("thinning", 10),
        sampling_step_size=step if step == "auto" else float(step),
        seed=args.seed,
    )
    return run_posterior(profile, _sgd(cfg, SgdConfig(), args.seed), pcfg, truth)


def cmd_rate(args, cfg) -> ExperimentReport:
    profile, _ = load_dataset(args.dataset)
    method = cfg.get("method", args.method)
    if method == "sigmoid":
        scores = fit_sgd(profile, _sgd(cfg, SgdConfig(), args.seed), record_loss=False)[0].theta
    elif method == "fy":
        fy = FyConfig(epsilon=cfg.get("epsilon", 1.0), seed=args.seed,
                      **{k: cfg[k] for k in _SGD_KEYS if k in cfg and k != "temperature"})
        scores = fit_fy(profile, fy, record_loss=False)[0].theta
    elif method == "elo-mm":
        scores = elo_fit_mm(profile, config=EloConfig())
    elif method == "copeland":
        scores = copeland_scores(profile)
    elif method == "borda":
        scores = borda_scores(profile)
    else:
        raise UsageError(f"unknown rating method {method!r}")
    order = np.lexsort((np.arange(profile.m), -np.asarray(scores)))
    rank = np.empty(profile.m, dtype=int)
    rank[order] = np.arange(1, profile.m + 1)
    rep = ExperimentReport("rate", dict(method=method, dataset=str(args.dataset)),
                           ("alternative", "name", "rating", "rank"), ("rank",), seeds=[args.seed])
    for a in range(profile.m):
        rep.add(alternative=a + 1, name=profile.label(a), rating=float(scores[a]), rank=int(rank[a]))
    return rep


VERBS = {
    "warmup": (cmd_warmup, "convergence on the five-vote warmup profile"),
    "kemeny-eval": (cmd_kemeny, "SCO against exact Kemeny on PrefLib files or random profiles"),
    "tournament": (cmd_tournament, "sparse simulated tournaments, all methods"),
    "large-eval": (cmd_large, "train/test KTD curves on a large sparse dataset"),
    "online-eval": (cmd_online, "single-pass online SCO and Elo"),
    "posterior": (cmd_posterior, "ranking posterior from constant-step SGD"),
    "rate": (cmd_rate, "rate one dataset and print ratings"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="softcondorcet", description="Soft Condorcet optimization experiments")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, (_, help_text) in VERBS.items():
        s = sub.add_parser(verb, help=help_text)
        s.add_argument("--config", help="key = value config file")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", default="-", help="output path, '-' for stdout")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        if verb == "kemeny-eval":
            s.add_argument("dataset", nargs="*", help="PrefLib files (default: random profiles)")
        elif verb in ("large-eval", "online-eval"):
            s.add_argument("dataset", nargs="?")
            s.add_argument("--preset", choices=("diplomacy-like",))
        elif verb == "posterior":
            s.add_argument("dataset", nargs="?", help="default: a generated 10-agent instance")
        elif verb == "rate":
            s.add_argument("dataset")
            s.add_argument("--method", default="sigmoid",
                           choices=("sigmoid", "fy", "elo-mm", "copeland", "borda"))
    return p


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and _fail("usage", "invalid arguments", 2)
    func = VERBS[args.verb][0]
    try:
        cfg = load_config(args.config, args.verb)
        report = func(args, cfg)
        text = report_to_json(report) if args.format == "json" else report_to_csv(report)
        if args.out == "-":
            sys.stdout.write(text)
        else:
            Path(args.out).write_text(text, encoding="utf-8")
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except DatasetError as exc:
        return _fail("dataset", str(exc), 3)
    except InfeasibleSplit as exc:
        return _fail("infeasible-split", str(exc), 4)
    except (ValueError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    return 0
