"""Variance-exploding noise schedule.

The forward process adds Gaussian noise without shrinking the signal:
x_t = x_0 + sigma_t * eps, where sigma_t**2 = 1 - prod_{s<=t}(1 - beta_s).
Betas follow a shifted linear grid beta_t = beta_hi * (t+1) / T so that
beta_0 > 0 and therefore sigma_0 > 0; a grid starting at zero would make
log(sigma_0**2) undefined in the scale-parameter likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError

DEFAULT_TIMESTEPS = 300
DEFAULT_BETA_HI = 0.01


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-timestep noise scales, immutable after construction."""

    T: int
    beta_hi: float
    betas: np.ndarray = field(repr=False)
    alpha_bars: np.ndarray = field(repr=False)
    sigmas: np.ndarray = field(repr=False)

    @property
    def sigma2(self) -> np.ndarray:
        """Noise variances 1 - alpha_bar_t (exact, not sigmas squared)."""
        return 1.0 - self.alpha_bars


def build_schedule(T: int = DEFAULT_TIMESTEPS, beta_hi: float = DEFAULT_BETA_HI) -> DiffusionSchedule:
    """Build the schedule for timesteps t = 0 .. T-1.

    Raises ConfigError unless T >= 2 and 0 < beta_hi < 1.
    """
    if not isinstance(T, (int, np.integer)) or T < 2:
        raise ConfigError(f"timesteps must be an integer >= 2, got {T}")
    if not (0.0 < beta_hi < 1.0):
        raise ConfigError(f"beta_hi must lie in (0, 1), got {beta_hi}")

    betas = beta_hi * (np.arange(1, T + 1, dtype=np.float64) / T)
    alpha_bars = np.cumprod(1.0 - betas)
    # Mathematically 0 < alpha_bar < 1 always, but the product can
    # underflow toward 0 for large T * beta_hi, saturating sigma at 1.0
    # and breaking strict monotonicity in float64. Such schedules are
    # useless (constant noise scale at the tail), so reject them.
    if alpha_bars[-1] < 1e-10:
        raise ConfigError(
            f"schedule saturates: retained signal falls below 1e-10 at "
            f"T={T}, beta_hi={beta_hi}; reduce T or beta_hi")
    sigmas = np.sqrt(1.0 - alpha_bars)
    assert sigmas[0] > 0.0 and sigmas[-1] < 1.0
    assert np.all(np.diff(sigmas) > 0.0)
    return DiffusionSchedule(T=int(T), beta_hi=float(beta_hi), betas=betas,
                             alpha_bars=alpha_bars, sigmas=sigmas)


def noising_sample(schedule: DiffusionSchedule, x0: np.ndarray, t: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Draw x_t = x0 + sigma_t * eps with eps ~ N(0, I), i.i.d. per coordinate."""
    if not 0 <= t < schedule.T:
        raise IndexError(f"timestep {t} outside 0..{schedule.T - 1}")
    x0 = np.asarray(x0, dtype=np.float64)
    eps = rng.standard_normal(x0.shape)
    return x0 + schedule.sigmas[t] * eps
