"""Ranking metrics and the multi-seed benchmark harness.

auc_roc is the probability a random anomaly outranks a random normal
(ties count one half); auc_pr is average precision over descending
thresholds; f1 flags the top-n scores where n is the true anomaly count.
Aggregation stores population std per metric; standard errors are
derived as std/sqrt(#seeds).
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data import Dataset, split_dataset
from .exceptions import ConfigError, DtpmError
from .models import (METHOD_CATEGORICAL, METHOD_INVGAMMA, PARAMETRIC_METHODS,
                     TrainConfig, config_with_seed, score_standardized, train)
from .neighbors import build_index
from .posterior import analytic_score, nonparametric_score
from .schedule import build_schedule

METHOD_ANALYTIC = "analytic"
METHOD_NONPARAM = "nonparam"
ALL_METHODS = (METHOD_ANALYTIC, METHOD_NONPARAM, METHOD_INVGAMMA, METHOD_CATEGORICAL)

DEFAULT_K = 32
METRIC_NAMES = ("auc_roc", "auc_pr", "f1")


@dataclass(frozen=True)
class SeedResult:
    seed: int
    auc_roc: float
    auc_pr: float
    f1: float
    wall_time_train: float
    wall_time_score: float


@dataclass(frozen=True)
class EvalReport:
    method: str
    dataset: str
    mode: str
    per_seed: tuple[SeedResult, ...]

    def metric_values(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.per_seed])

    def mean(self, name: str) -> float:
        return float(self.metric_values(name).mean())

    def std(self, name: str) -> float:
        return float(self.metric_values(name).std())

    def stderr(self, name: str) -> float:
        return self.std(name) / np.sqrt(len(self.per_seed))


def _check_labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValueError("labels must be a nonempty vector")
    return labels


def auc_roc(scores, labels) -> float:
    """Mann-Whitney statistic from midranks; requires both classes present."""
    labels = _check_labels(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc_roc needs both classes in labels")
    ranks = rankdata(scores)  # average ranks handle ties as 1/2
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_pr(scores, labels) -> float:
    """Average precision: sum of (R_i - R_{i-1}) * P_i over descending thresholds."""
    labels = _check_labels(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise ValueError("auc_pr needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    sorted_scores = scores[order]
    tp = np.cumsum(sorted_labels == 1)
    precision = tp / np.arange(1, labels.size + 1)
    recall = tp / n_pos
    # one threshold per distinct score value: the last row of each tie group
    last_of_group = np.r_[sorted_scores[1:] != sorted_scores[:-1], True]
    recall_steps = np.diff(np.r_[0.0, recall[last_of_group]])
    return float((recall_steps * precision[last_of_group]).sum())


def f1_at_contamination(scores, labels) -> float:
    """F1 after flagging the top-n scores, n = number of true anomalies.

    Ties at the cut break by (score desc, index asc). With this threshold
    precision equals recall, so F1 reduces to TP / n.
    """
    labels = _check_labels(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise ValueError("f1_at_contamination needs at least one positive label")
    flagged = np.argsort(-scores, kind="stable")[:n_pos]
    tp = int((labels[flagged] == 1).sum())
    return tp / n_pos


def _run_seed(dataset: Dataset, method: str, mode: str, seed: int,
              config: TrainConfig, k: int) -> SeedResult:
    split = split_dataset(dataset, mode, seed)
    d = split.train.shape[1]

    wall_train = 0.0
    t0 = time.perf_counter()
    if method in PARAMETRIC_METHODS:
        model = train(method, split.train, config_with_seed(config, seed),
                      standardizer=split.standardizer)
        wall_train = time.perf_counter() - t0

    t0 = time.perf_counter()
    if method == METHOD_ANALYTIC:
        sched = build_schedule(config.timesteps, config.beta_hi)
        scores = np.array([analytic_score(row, split.train, sched)
                           for row in split.test])
    elif method == METHOD_NONPARAM:
        index = build_index(split.train)
        scores = np.array([nonparametric_score(row, index, k, d)
                           for row in split.test])
    else:
        scores = score_standardized(model, split.test)
    wall_score = time.perf_counter() - t0

    return SeedResult(seed=seed,
                      auc_roc=auc_roc(scores, split.test_labels),
                      auc_pr=auc_pr(scores, split.test_labels),
                      f1=f1_at_contamination(scores, split.test_labels),
                      wall_time_train=wall_train, wall_time_score=wall_score)


def run_benchmark(dataset: Dataset, method: str, mode: str, seeds,
                  config: TrainConfig | None = None, k: int = DEFAULT_K,
                  jobs: int = 1) -> EvalReport:
    """One split/train/score/metric pipeline per seed, then aggregate."""
    if method not in ALL_METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {ALL_METHODS}")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ConfigError("at least one seed is required")
    if config is None:
        config = TrainConfig()

    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_seed, [dataset] * len(seeds),
                                        [method] * len(seeds), [mode] * len(seeds),
                                        seeds, [config] * len(seeds),
                                        [k] * len(seeds)))
        else:
            results = [_run_seed(dataset, method, mode, s, config, k) for s in seeds]
    except DtpmError as err:
        raise type(err)(f"benchmark failed ({dataset.name}, {method}, {mode}): {err}") from err

    results.sort(key=lambda r: seeds.index(r.seed))
    return EvalReport(method=method, dataset=dataset.name, mode=mode,
                      per_seed=tuple(results))


def report_to_dict(report: EvalReport) -> dict:
    """Canonical report content. Wall times are deliberately excluded so
    the file is byte-identical across reruns; they go to the timing CSV."""
    return {
        "schema_version": 1,
        "dataset": report.dataset,
        "method": report.method,
        "mode": report.mode,
        "seeds": [r.seed for r in report.per_seed],
        "per_seed": [{"seed": r.seed, "auc_roc": r.auc_roc,
                      "auc_pr": r.auc_pr, "f1": r.f1} for r in report.per_seed],
        "mean": {m: report.mean(m) for m in METRIC_NAMES},
        "std": {m: report.std(m) for m in METRIC_NAMES},
        "stderr": {m: report.stderr(m) for m in METRIC_NAMES},
    }


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_per_seed_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "auc_roc", "auc_pr", "f1"])
        for r in report.per_seed:
            writer.writerow([r.seed, repr(r.auc_roc), repr(r.auc_pr), repr(r.f1)])


def write_timing_csv(report: EvalReport, path) -> None:
    """Per-seed wall times plus a mean row usable for time-vs-AUC scatter plots."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "seed", "auc_roc", "wall_time_train",
                         "wall_time_score"])
        for r in report.per_seed:
            writer.writerow([report.method, r.seed, repr(r.auc_roc),
                             repr(r.wall_time_train), repr(r.wall_time_score)])
        writer.writerow([report.method, "mean", repr(report.mean("auc_roc")),
                         repr(float(np.mean([r.wall_time_train
                                             for r in report.per_seed]))),
                         repr(float(np.mean([r.wall_time_score
                                             for r in report.per_seed])))])
