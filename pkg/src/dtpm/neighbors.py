"""Exact k-nearest-neighbor queries over the training matrix.

Brute force is the reference implementation: with k = 32 and at most
50k rows a full scan per query is tractable, and exactness is what the
posterior estimators assume. Ties are broken by row index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DataError


@dataclass(frozen=True)
class KnnIndex:
    points: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def build_index(points: np.ndarray) -> KnnIndex:
    """Wrap a finite, nonempty (n, d) matrix as an immutable index."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
        raise DataError(f"index needs a nonempty 2-D matrix, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise DataError("index points contain NaN or Inf")
    points = points.copy()
    points.setflags(write=False)
    return KnnIndex(points=points)


def query_knn(index: KnnIndex, x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (indices, squared_distances) of the k nearest rows, ascending.

    Distances are squared Euclidean; equal distances are ordered by row
    index (stable sort), so results are deterministic.
    """
    if not 1 <= k <= index.n:
        raise ConfigError(f"k must be in 1..{index.n}, got {k}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (index.d,):
        raise DataError(f"query must have shape ({index.d},), got {x.shape}")
    diff = index.points - x
    sq = np.einsum("ij,ij->i", diff, diff)
    order = np.argsort(sq, kind="stable")[:k]
    return order, sq[order]
