"""Posterior distributions over diffusion time.

Conditioning a variance-exploding process on an observation makes the
noise variance inverse-Gamma distributed: shape a = d/2 - 1 depends only
on the dimensionality, scale b on the squared distance to nearby data.
This module evaluates that density, the exact dataset posterior on a
schedule's discrete sigma^2 grid, and the k-NN approximation of the
scale parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .neighbors import KnnIndex, query_knn
from .schedule import DiffusionSchedule

# Smallest admissible scale: keeps log b finite when a query coincides
# with training points.
MIN_SCALE = 1e-12


@dataclass(frozen=True)
class InverseGammaParams:
    a: float  # shape, dimensionless
    b: float  # scale, units of sigma^2

    def __post_init__(self):
        if self.a <= 0.0:
            raise ValueError(f"shape must be positive, got {self.a}")
        if self.b < 0.0:
            raise ValueError(f"scale must be nonnegative, got {self.b}")

    @property
    def mode(self) -> float:
        return self.b / (self.a + 1.0)


@dataclass(frozen=True)
class GridPosterior:
    """Posterior over the schedule's discrete sigma^2 values."""

    sigma2_grid: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        assert abs(self.probs.sum() - 1.0) < 1e-9
        assert np.all(self.probs >= 0.0)
        assert np.all(np.diff(self.sigma2_grid) > 0.0)

    def mean_sigma2(self) -> float:
        """Posterior mean of sigma^2; scalar summary used for ranking."""
        return float(self.probs @ self.sigma2_grid)


def shape_for_dim(d: int) -> float:
    """Shape parameter for dimensionality d.

    a = d/2 - 1 is only a proper shape for d >= 3; floor at 0.5 so the
    density stays well defined on low-dimensional fixtures.
    """
    return max(d / 2.0 - 1.0, 0.5)


def inv_gamma_log_density(s: float, p: InverseGammaParams) -> float:
    """log p(s; a, b) = a*log(b) - lgamma(a) - (a+1)*log(s) - b/s."""
    if s <= 0.0:
        raise ValueError(f"sigma^2 value must be positive, got {s}")
    if p.b <= 0.0:
        raise ValueError(f"scale must be positive for the density, got {p.b}")
    return float(p.a * np.log(p.b) - gammaln(p.a) - (p.a + 1.0) * np.log(s) - p.b / s)


def logsumexp(values) -> float:
    """Numerically stable log(sum(exp(values))) for a nonempty 1-D array."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("logsumexp of an empty array")
    m = values.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.exp(values - m).sum()))


def analytic_posterior(x_s: np.ndarray, train: np.ndarray,
                       schedule: DiffusionSchedule) -> GridPosterior:
    """Exact posterior over the schedule grid given the full train set.

    Unnormalized log-weight per timestep t is
    logsumexp over x0 of [-d*log(sigma_t) - ||x_s - x0||^2 / (2 sigma_t^2)],
    normalized across timesteps. Duplicating train points or rescaling
    the weights leaves the result unchanged.
    """
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 1:
        raise ValueError(f"train set must be a nonempty matrix, got shape {train.shape}")
    x_s = np.asarray(x_s, dtype=np.float64)
    d = train.shape[1]
    diff = train - x_s
    sq = np.einsum("ij,ij->i", diff, diff)
    sq_min = sq.min()

    sigma2 = schedule.sigma2
    # logsumexp_i(-sq_i / (2 s)) = -sq_min / (2 s) + log sum exp(-(sq_i - sq_min) / (2 s))
    shifted = sq - sq_min
    log_w = np.empty(schedule.T)
    for t in range(schedule.T):
        s = sigma2[t]
        log_w[t] = (-0.5 * d * np.log(s)
                    - sq_min / (2.0 * s)
                    + np.log(np.exp(-shifted / (2.0 * s)).sum()))

    log_w -= log_w.max()
    probs = np.exp(log_w)
    probs /= probs.sum()
    return GridPosterior(sigma2_grid=sigma2.copy(), probs=probs)


def analytic_score(x_s: np.ndarray, train: np.ndarray,
                   schedule: DiffusionSchedule) -> float:
    """Posterior mean of sigma^2 under the exact dataset posterior."""
    return analytic_posterior(x_s, train, schedule).mean_sigma2()


def nonparametric_scale(x_s: np.ndarray, index: KnnIndex, k: int) -> float:
    """Scale parameter b = mean over the k nearest neighbors of ||x_s - x0||^2 / 2."""
    _, sq = query_knn(index, x_s, k)
    return float(sq.mean() / 2.0)


def nonparametric_score(x_s: np.ndarray, index: KnnIndex, k: int, d: int) -> float:
    """Posterior mode b/(a+1) with the k-NN scale estimate; higher = more anomalous."""
    b = max(nonparametric_scale(x_s, index, k), MIN_SCALE)
    a = shape_for_dim(d)
    return b / (a + 1.0)


def inv_gamma_grid_posterior(params: InverseGammaParams,
                             schedule: DiffusionSchedule) -> GridPosterior:
    """Inverse-Gamma density evaluated on the schedule grid, renormalized."""
    b = max(params.b, MIN_SCALE)
    log_dens = np.array([inv_gamma_log_density(s, InverseGammaParams(params.a, b))
                         for s in schedule.sigma2])
    probs = np.exp(log_dens - log_dens.max())
    probs /= probs.sum()
    return GridPosterior(sigma2_grid=schedule.sigma2.copy(), probs=probs)


def nonparametric_posterior(x_s: np.ndarray, index: KnnIndex, k: int,
                            schedule: DiffusionSchedule) -> GridPosterior:
    """Approximate posterior curve from the k-NN scale, for plotting/export."""
    params = InverseGammaParams(a=shape_for_dim(index.d),
                                b=max(nonparametric_scale(x_s, index, k), MIN_SCALE))
    return inv_gamma_grid_posterior(params, schedule)


def grid_posterior_csv_rows(posterior: GridPosterior):
    """Yield (t, sigma2, prob) rows for CSV export of a posterior curve."""
    for t, (s, p) in enumerate(zip(posterior.sigma2_grid, posterior.probs)):
        yield t, float(s), float(p)
