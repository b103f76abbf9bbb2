"""Batch command-line front end.

Subcommands: train, score, bench, denoise, ablate. Progress goes to
stderr; machine-readable results go to the files named by --out. Exit
codes: 2 configuration error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from pathlib import Path

from .data import DEFAULT_MAX_ROWS, cap_rows, load_csv, split_dataset
from .evaluation import (ALL_METHODS, DEFAULT_K, run_benchmark,
                         write_per_seed_csv, write_report_json, write_timing_csv)
from .exceptions import ConfigError, DataError, NumericError
from .models import (PARAMETRIC_METHODS, TrainConfig, denoise, load_model,
                     save_model, score, train)

SEED_ENV_VAR = "DTPM_SEED"
DEFAULT_SEEDS = "0,1,2,3,4"


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None


def _parse_seeds(raw: str | None) -> list[int]:
    if raw is None:
        raw = os.environ.get(SEED_ENV_VAR, DEFAULT_SEEDS)
    try:
        seeds = [int(s) for s in str(raw).split(",") if s.strip() != ""]
    except ValueError:
        raise ConfigError(f"seeds must be a comma-separated integer list, got {raw!r}") from None
    if not seeds:
        raise ConfigError("at least one seed is required")
    return seeds


def _parse_int_list(raw: str, flag: str) -> list[int]:
    try:
        values = [int(s) for s in raw.split(",") if s.strip() != ""]
    except ValueError:
        raise ConfigError(f"{flag} must be a comma-separated integer list, got {raw!r}") from None
    if not values:
        raise ConfigError(f"{flag} needs at least one value")
    return values


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input CSV with a 'label' column")
    p.add_argument("--max-rows", type=int, default=DEFAULT_MAX_ROWS,
                   help="row cap applied before splitting (default %(default)s)")


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--timesteps", type=int, default=300, help="maximum timestep T")
    p.add_argument("--beta-hi", type=float, default=0.01, help="final beta of the schedule")
    p.add_argument("--bins", type=int, default=7, help="categorical head bin count")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="neighbors for nonparam scoring")
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--dropout", type=float, default=0.5)


def _config_from_args(args, seed: int) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, batch_size=args.batch, lr=args.lr,
                       dropout=args.dropout, timesteps=args.timesteps,
                       bins=args.bins, beta_hi=args.beta_hi, seed=seed)


def _load_capped(args):
    return cap_rows(load_csv(args.data), args.max_rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtpm",
                                     description="Diffusion-time anomaly detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a parametric model and write it as JSON")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--method", required=True, choices=PARAMETRIC_METHODS)
    p.add_argument("--mode", default="semi", choices=("semi", "unsup"))
    p.add_argument("--seed", type=int, default=None,
                   help=f"training seed (falls back to ${SEED_ENV_VAR}, then 0)")
    p.add_argument("--out", required=True, help="model JSON output path")

    p = sub.add_parser("score", help="score rows of a CSV with a trained model")
    _add_data_flags(p)
    p.add_argument("--model", required=True, help="model JSON from 'train'")
    p.add_argument("--out", required=True, help="scores CSV output path")

    p = sub.add_parser("bench", help="multi-seed benchmark producing a JSON report")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--method", required=True, choices=ALL_METHODS)
    p.add_argument("--mode", default="semi", choices=("semi", "unsup"))
    p.add_argument("--seeds", default=None,
                   help=f"comma list (default ${SEED_ENV_VAR} or {DEFAULT_SEEDS})")
    p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    p.add_argument("--out", required=True, help="report JSON output path")

    p = sub.add_parser("denoise", help="gradient-descend one row toward the data manifold")
    _add_data_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--row", type=int, default=0, help="row index to denoise")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--step-size", type=float, default=0.01)
    p.add_argument("--out", required=True, help="trajectory CSV output path")

    p = sub.add_parser("ablate", help="sweep one hyperparameter, one benchmark per value")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--method", required=True, choices=ALL_METHODS)
    p.add_argument("--mode", default="semi", choices=("semi", "unsup"))
    p.add_argument("--seeds", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--sweep-bins", default=None, help="comma list of bin counts")
    p.add_argument("--sweep-timesteps", default=None, help="comma list of T values")
    p.add_argument("--sweep-k", default=None, help="comma list of k values")
    p.add_argument("--out", required=True, help="sweep CSV output path")
    return parser


def cmd_train(args) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    dataset = _load_capped(args)
    split = split_dataset(dataset, args.mode, seed)
    config = _config_from_args(args, seed)
    t0 = time.perf_counter()
    model = train(args.method, split.train, config, standardizer=split.standardizer)
    wall = time.perf_counter() - t0
    save_model(model, args.out)
    _log(f"trained {args.method} on {dataset.name} ({split.train.shape[0]} rows) "
         f"in {wall:.1f}s, final loss {model.final_loss:.6f}")
    _log(f"model written to {args.out}")
    return 0


def cmd_score(args) -> int:
    model = load_model(args.model)
    dataset = _load_capped(args)
    t0 = time.perf_counter()
    scores = score(model, dataset.features)
    wall = time.perf_counter() - t0
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "score"])
        for i, s in enumerate(scores):
            writer.writerow([i, repr(float(s))])
    _log(f"scored {dataset.n} rows in {wall:.2f}s -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    dataset = _load_capped(args)
    seeds = _parse_seeds(args.seeds)
    config = _config_from_args(args, seeds[0])
    report = run_benchmark(dataset, args.method, args.mode, seeds,
                           config=config, k=args.k, jobs=args.jobs)
    out = Path(args.out)
    write_report_json(report, out)
    write_per_seed_csv(report, out.with_suffix(".seeds.csv"))
    write_timing_csv(report, out.with_suffix(".timings.csv"))
    _log(f"{args.method} on {dataset.name} [{args.mode}] over {len(seeds)} seeds: "
         f"auc_roc {report.mean('auc_roc'):.4f} (std {report.std('auc_roc'):.4f})")
    _log(f"report written to {out}")
    return 0


def cmd_denoise(args) -> int:
    model = load_model(args.model)
    dataset = _load_capped(args)
    if not 0 <= args.row < dataset.n:
        raise ConfigError(f"--row must be in 0..{dataset.n - 1}, got {args.row}")
    trajectory = denoise(model, dataset.features[args.row],
                         steps=args.steps, step_size=args.step_size)
    traj_scores = score(model, trajectory)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "score"] + [f"f{i}" for i in range(dataset.d)])
        for i, (x, s) in enumerate(zip(trajectory, traj_scores)):
            writer.writerow([i, repr(float(s))] + [repr(float(v)) for v in x])
    _log(f"denoised row {args.row}: score {traj_scores[0]:.4f} -> {traj_scores[-1]:.4f} "
         f"in {len(trajectory) - 1} steps")
    return 0


def cmd_ablate(args) -> int:
    sweeps = {"bins": args.sweep_bins, "timesteps": args.sweep_timesteps,
              "k": args.sweep_k}
    chosen = {name: raw for name, raw in sweeps.items() if raw is not None}
    if len(chosen) != 1:
        raise ConfigError("ablate needs exactly one of --sweep-bins, "
                          "--sweep-timesteps, --sweep-k")
    (param, raw), = chosen.items()
    values = sorted(_parse_int_list(raw, f"--sweep-{param}"))

    dataset = _load_capped(args)
    seeds = _parse_seeds(args.seeds)
    rows = []
    for value in values:
        kwargs = {"timesteps": args.timesteps, "bins": args.bins}
        k = args.k
        if param == "k":
            k = value
        else:
            kwargs[param] = value
        config = TrainConfig(epochs=args.epochs, batch_size=args.batch, lr=args.lr,
                             dropout=args.dropout, beta_hi=args.beta_hi,
                             seed=seeds[0], **kwargs)
        report = run_benchmark(dataset, args.method, args.mode, seeds,
                               config=config, k=k, jobs=args.jobs)
        rows.append((value, report.mean("auc_roc")))
        _log(f"{param}={value}: mean auc_roc {rows[-1][1]:.4f}")

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([param, "mean_auc_roc"])
        for value, mean_auc in rows:
            writer.writerow([value, repr(mean_auc)])
    _log(f"sweep written to {args.out}")
    return 0


COMMANDS = {"train": cmd_train, "score": cmd_score, "bench": cmd_bench,
            "denoise": cmd_denoise, "ablate": cmd_ablate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        _log(f"configuration error: {err}")
        return 2
    except DataError as err:
        _log(f"data error: {err}")
        return 3
    except NumericError as err:
        _log(f"numeric error: {err}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
