"""Dataset ingestion, standardization, and train/test split protocols.

CSV schema: a header row, one column named "label" holding 0 (normal) or
1 (anomaly), every other column numeric. Standardization statistics are
always fit on the train rows only and applied to both sides of a split.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataError

MODE_SEMI = "semi"
MODE_UNSUP = "unsup"
DEFAULT_MAX_ROWS = 50_000


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    name: str = ""

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean and (population) std fit on training rows.

    Zero-variance features get std 1, so they transform to all zeros.
    """

    mean: np.ndarray = field(repr=False)
    std: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray = field(repr=False)        # standardized
    test: np.ndarray = field(repr=False)         # standardized
    test_labels: np.ndarray = field(repr=False)
    standardizer: Standardizer
    mode: str
    seed: int


def make_dataset(features, labels, name: str = "") -> Dataset:
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[1] < 1:
        raise DataError(f"features must be a 2-D matrix, got shape {features.shape}")
    if labels.shape != (features.shape[0],):
        raise DataError("labels length does not match feature rows")
    if not np.all(np.isfinite(features)):
        raise DataError("features contain NaN or Inf")
    if not np.isin(labels, (0, 1)).all():
        raise DataError("labels must be 0 (normal) or 1 (anomaly)")
    return Dataset(features=features, labels=labels.astype(np.int64), name=name)


def load_csv(path) -> Dataset:
    """Load a labeled dataset; the label column is located by name."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "label" not in header:
            raise DataError(f"{path}: no column named 'label' in header {header}")
        label_col = header.index("label")
        feature_cols = [i for i in range(len(header)) if i != label_col]
        if not feature_cols:
            raise DataError(f"{path}: no feature columns besides 'label'")

        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{line_no}: expected {len(header)} cells, got {len(row)}")
            try:
                lab = int(float(row[label_col]))
            except ValueError:
                raise DataError(
                    f"{path}:{line_no}: non-numeric label {row[label_col]!r}") from None
            vals = []
            for c in feature_cols:
                try:
                    vals.append(float(row[c]))
                except ValueError:
                    raise DataError(
                        f"{path}:{line_no}: non-numeric cell {row[c]!r} "
                        f"in column {header[c]!r}") from None
            rows.append(vals)
            labels.append(lab)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return make_dataset(np.array(rows), np.array(labels), name=path.stem)


def save_csv(path, dataset: Dataset) -> None:
    """Inverse of load_csv; feature columns f0..f{d-1}, label column last."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(dataset.d)] + ["label"])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def cap_rows(dataset: Dataset, max_rows: int = DEFAULT_MAX_ROWS) -> Dataset:
    """Truncate to the first max_rows rows; applied before any split."""
    if max_rows < 1:
        raise DataError(f"max_rows must be >= 1, got {max_rows}")
    if dataset.n <= max_rows:
        return dataset
    return Dataset(features=dataset.features[:max_rows],
                   labels=dataset.labels[:max_rows], name=dataset.name)


def fit_standardizer(train: np.ndarray) -> Standardizer:
    train = np.asarray(train, dtype=np.float64)
    mean = train.mean(axis=0)
    std = train.std(axis=0)  # population (1/n) convention
    std = np.where(std == 0.0, 1.0, std)
    return Standardizer(mean=mean, std=std)


def standardize_apply(standardizer: Standardizer, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[-1] != standardizer.mean.shape[0]:
        raise DataError(f"width {matrix.shape[-1]} != standardizer width "
                        f"{standardizer.mean.shape[0]}")
    return (matrix - standardizer.mean) / standardizer.std


def standardize_invert(standardizer: Standardizer, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[-1] != standardizer.mean.shape[0]:
        raise DataError(f"width {matrix.shape[-1]} != standardizer width "
                        f"{standardizer.mean.shape[0]}")
    return matrix * standardizer.std + standardizer.mean


def split_semi_supervised(ds: Dataset, seed: int) -> DatasetSplit:
    """Half the normals train; the other half plus all anomalies test."""
    normal_idx = np.flatnonzero(ds.labels == 0)
    if normal_idx.size < 2:
        raise DataError("semi-supervised split needs at least 2 normal rows")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(normal_idx)
    n_train = normal_idx.size // 2
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(np.concatenate([perm[n_train:], np.flatnonzero(ds.labels == 1)]))

    standardizer = fit_standardizer(ds.features[train_idx])
    return DatasetSplit(
        train=standardize_apply(standardizer, ds.features[train_idx]),
        test=standardize_apply(standardizer, ds.features[test_idx]),
        test_labels=ds.labels[test_idx],
        standardizer=standardizer, mode=MODE_SEMI, seed=seed)


def split_unsupervised_bootstrap(ds: Dataset, seed: int) -> DatasetSplit:
    """Train on an n-draw bootstrap of the whole set; test on the whole set."""
    if ds.n < 1:
        raise DataError("empty dataset")
    rng = np.random.default_rng(seed)
    boot_idx = rng.integers(0, ds.n, size=ds.n)

    standardizer = fit_standardizer(ds.features[boot_idx])
    return DatasetSplit(
        train=standardize_apply(standardizer, ds.features[boot_idx]),
        test=standardize_apply(standardizer, ds.features),
        test_labels=ds.labels.copy(),
        standardizer=standardizer, mode=MODE_UNSUP, seed=seed)


def split_dataset(ds: Dataset, mode: str, seed: int) -> DatasetSplit:
    if mode == MODE_SEMI:
        return split_semi_supervised(ds, seed)
    if mode == MODE_UNSUP:
        return split_unsupervised_bootstrap(ds, seed)
    raise DataError(f"unknown split mode {mode!r}")


def export_split_csv(split: DatasetSplit, prefix) -> tuple[Path, Path]:
    """Audit export: write the standardized split as <prefix>_{train,test}.csv."""
    train_path = Path(f"{prefix}_train.csv")
    test_path = Path(f"{prefix}_test.csv")
    d = split.train.shape[1]
    save_csv(train_path, Dataset(features=split.train,
                                 labels=np.zeros(split.train.shape[0], dtype=np.int64),
                                 name="train"))
    with open(test_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(d)] + ["label"])
        for x, y in zip(split.test, split.test_labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
    return train_path, test_path
