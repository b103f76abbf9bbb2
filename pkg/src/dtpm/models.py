"""Trainable diffusion-time anomaly detectors.

Two parametric variants share one training loop: per batch, each row is
noised at a uniformly drawn timestep (x_t = x_0 + sigma_t * eps) and the
network learns to recover the noise scale.

  invgamma    -- positive scalar head predicting the inverse-Gamma scale b;
                 negative log-likelihood a*log(b) - (a+1)*log(sigma^2) - b/sigma^2
                 (the b-independent middle term has no parameter gradient but
                 is retained so the reported loss matches the likelihood).
  categorical -- softmax head over B timestep bins, cross-entropy against
                 the bin of the true timestep, bin = floor(t*B/T).

Anomaly scores on clean inputs: invgamma uses the posterior mode
b/(a+1); categorical uses the probability-weighted mean bin index,
a value in [0, B-1]. Higher means more anomalous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Standardizer, standardize_apply, standardize_invert
from .exceptions import ConfigError, DataError, NumericError
from .mlp import (HEAD_SOFTMAX, HEAD_SOFTPLUS, MlpModel, backward, forward,
                  init_adam_state, init_model, adam_step)
from .posterior import shape_for_dim
from .schedule import (DEFAULT_BETA_HI, DEFAULT_TIMESTEPS, DiffusionSchedule,
                       build_schedule)

METHOD_INVGAMMA = "invgamma"
METHOD_CATEGORICAL = "categorical"
PARAMETRIC_METHODS = (METHOD_INVGAMMA, METHOD_CATEGORICAL)

MODEL_SCHEMA_VERSION = 1

DEFAULT_HIDDEN_DIMS = (256, 512, 256)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 400
    batch_size: int = 64
    lr: float = 1e-4
    dropout: float = 0.5
    timesteps: int = DEFAULT_TIMESTEPS
    bins: int = 7  # categorical head only
    beta_hi: float = DEFAULT_BETA_HI
    hidden_dims: tuple[int, ...] = DEFAULT_HIDDEN_DIMS
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.lr <= 0.0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.timesteps < 2:
            raise ConfigError(f"timesteps must be >= 2, got {self.timesteps}")
        if not 1 <= self.bins <= self.timesteps:
            raise ConfigError(f"bins must be in 1..timesteps, got {self.bins}")
        if not 0.0 < self.beta_hi < 1.0:
            raise ConfigError(f"beta_hi must be in (0, 1), got {self.beta_hi}")
        if not self.hidden_dims or any(h < 1 for h in self.hidden_dims):
            raise ConfigError(f"hidden_dims must be positive, got {self.hidden_dims}")


@dataclass(frozen=True)
class InvGammaModel:
    mlp: MlpModel = field(repr=False)
    a: float
    schedule: DiffusionSchedule = field(repr=False)
    standardizer: Standardizer = field(repr=False)
    epoch_losses: tuple[float, ...] = ()

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else float("nan")

    @property
    def method(self) -> str:
        return METHOD_INVGAMMA


@dataclass(frozen=True)
class CategoricalModel:
    mlp: MlpModel = field(repr=False)
    bins: int
    schedule: DiffusionSchedule = field(repr=False)
    standardizer: Standardizer = field(repr=False)
    epoch_losses: tuple[float, ...] = ()

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else float("nan")

    @property
    def method(self) -> str:
        return METHOD_CATEGORICAL


def inv_gamma_loss(b_pred: np.ndarray, sigma2: np.ndarray,
                   a: float) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient w.r.t. b_pred.

    Per element: -(a*log(b) - (a+1)*log(sigma^2) - b/sigma^2); gradient
    -(a/b - 1/sigma^2) / batch. Minimized at b = a * sigma^2.
    """
    b_pred = np.asarray(b_pred, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    if np.any(b_pred <= 0.0):
        raise ValueError("predicted scale must be positive")
    if np.any(sigma2 <= 0.0):
        raise ValueError("sigma^2 must be positive")
    nll = -(a * np.log(b_pred) - (a + 1.0) * np.log(sigma2) - b_pred / sigma2)
    grad = -(a / b_pred - 1.0 / sigma2) / b_pred.size
    return float(nll.mean()), grad


def categorical_targets(t, T: int, B: int):
    """Bin index floor(t*B/T) for timestep t; scalar or array t."""
    if not 1 <= B <= T:
        raise ValueError(f"bins must be in 1..{T}, got {B}")
    t_arr = np.asarray(t)
    if np.any(t_arr < 0) or np.any(t_arr >= T):
        raise ValueError(f"timestep {t} outside 0..{T - 1}")
    bins = (t_arr * B) // T
    return int(bins) if np.isscalar(t) else bins


def categorical_loss(probs: np.ndarray, bins: np.ndarray) -> tuple[float, np.ndarray]:
    """Cross-entropy against one-hot bin targets; gradient w.r.t. the probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    p_target = np.maximum(probs[np.arange(n), bins], 1e-300)
    loss = float(-np.log(p_target).mean())
    grad = np.zeros_like(probs)
    grad[np.arange(n), bins] = -1.0 / (p_target * n)
    return loss, grad


def _identity_standardizer(d: int) -> Standardizer:
    return Standardizer(mean=np.zeros(d), std=np.ones(d))


def train(method: str, train_data: np.ndarray, config: TrainConfig,
          standardizer: Standardizer | None = None):
    """Train a parametric model on an already-standardized matrix.

    The standardizer (fit by whoever produced train_data) is stored on the
    model so raw inputs can be scored later; it defaults to the identity.
    One seeded generator drives weight init, epoch shuffles, per-row
    timesteps and noise, and dropout masks, so a seed fixes the trajectory.
    """
    if method not in PARAMETRIC_METHODS:
        raise ConfigError(f"unknown parametric method {method!r}")
    X = np.asarray(train_data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DataError(f"train data must be a nonempty matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("train data contains NaN or Inf")
    n, d = X.shape
    if standardizer is None:
        standardizer = _identity_standardizer(d)

    rng = np.random.default_rng(config.seed)
    sched = build_schedule(config.timesteps, config.beta_hi)
    if method == METHOD_INVGAMMA:
        a = shape_for_dim(d)
        net = init_model([d, *config.hidden_dims, 1], HEAD_SOFTPLUS, config.dropout, rng)
    else:
        net = init_model([d, *config.hidden_dims, config.bins], HEAD_SOFTMAX,
                         config.dropout, rng)
    net.train_mode = True
    adam = init_adam_state(net, config.lr)

    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        n_batches = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            x0 = X[idx]
            t = rng.integers(0, sched.T, size=idx.size)
            eps = rng.standard_normal((idx.size, d))
            xt = x0 + sched.sigmas[t][:, None] * eps

            out, tape = forward(net, xt, rng)
            try:
                if method == METHOD_INVGAMMA:
                    b_pred = out[:, 0]
                    if not np.all(np.isfinite(b_pred)) or np.any(b_pred <= 0.0):
                        raise NumericError("non-positive or non-finite scale prediction")
                    loss, g = inv_gamma_loss(b_pred, sched.sigma2[t], a)
                    loss_grad = g[:, np.newaxis]
                else:
                    bins_t = categorical_targets(t, sched.T, config.bins)
                    loss, loss_grad = categorical_loss(out, bins_t)
                if not np.isfinite(loss):
                    raise NumericError(f"loss is {loss}")
                grads = backward(net, tape, loss_grad)
                adam_step(net, adam, grads)
            except NumericError as err:
                raise NumericError(
                    f"training aborted at epoch {epoch}, batch {n_batches}: {err}") from err
            loss_sum += loss
            n_batches += 1
        epoch_losses.append(loss_sum / n_batches)

    net.train_mode = False
    if method == METHOD_INVGAMMA:
        return InvGammaModel(mlp=net, a=a, schedule=sched,
                             standardizer=standardizer,
                             epoch_losses=tuple(epoch_losses))
    return CategoricalModel(mlp=net, bins=config.bins, schedule=sched,
                            standardizer=standardizer,
                            epoch_losses=tuple(epoch_losses))


def score_standardized(model, X: np.ndarray) -> np.ndarray:
    """Score rows that are already on the model's standardized scale."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out, _ = forward(model.mlp, X)
    if model.method == METHOD_INVGAMMA:
        return out[:, 0] / (model.a + 1.0)
    return out @ np.arange(model.bins, dtype=np.float64)


def score(model, x: np.ndarray):
    """Anomaly score(s) for raw input; a vector gives a float, a matrix a vector."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    scores = score_standardized(model, standardize_apply(model.standardizer,
                                                         np.atleast_2d(x)))
    return float(scores[0]) if single else scores


def _score_with_input_gradient(model, x_std: np.ndarray) -> tuple[float, np.ndarray]:
    """Score of one standardized row and its gradient w.r.t. that row."""
    out, tape = forward(model.mlp, x_std)
    if model.method == METHOD_INVGAMMA:
        value = float(out[0, 0]) / (model.a + 1.0)
        head_grad = np.full((1, 1), 1.0 / (model.a + 1.0))
    else:
        weights = np.arange(model.bins, dtype=np.float64)
        value = float(out[0] @ weights)
        head_grad = weights[np.newaxis, :]
    grads = backward(model.mlp, tape, head_grad)
    return value, grads.inputs[0]


def denoise(model, x: np.ndarray, steps: int = 100,
            step_size: float = 0.01) -> np.ndarray:
    """Gradient descent on the anomaly score starting from raw input x.

    The descent runs on the standardized scale (step_size is in those
    units); the returned trajectory is in raw coordinates, starting with
    x itself. Stops early after two consecutive score increases, or at a
    non-finite gradient (the last valid iterate is kept).
    """
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError(f"denoise expects a single vector, got shape {x.shape}")
    x_std = standardize_apply(model.standardizer, x[np.newaxis, :])

    trajectory = [x.copy()]
    prev_score, grad = _score_with_input_gradient(model, x_std)
    rises = 0
    for _ in range(steps):
        if not np.all(np.isfinite(grad)):
            break
        x_std = x_std - step_size * grad
        trajectory.append(standardize_invert(model.standardizer, x_std)[0])
        cur_score, grad = _score_with_input_gradient(model, x_std)
        rises = rises + 1 if cur_score > prev_score else 0
        prev_score = cur_score
        if rises >= 2:
            break
    return np.array(trajectory)


def model_to_dict(model) -> dict:
    if model.method == METHOD_INVGAMMA:
        head_meta = {"a": model.a}
    else:
        head_meta = {"B": model.bins, "T": model.schedule.T}
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "layer_dims": list(model.mlp.layer_dims),
        "head": model.mlp.head,
        "dropout_rate": model.mlp.dropout_rate,
        "weights": [W.tolist() for W in model.mlp.weights],
        "biases": [b.tolist() for b in model.mlp.biases],
        "standardization": {"mean": model.standardizer.mean.tolist(),
                            "std": model.standardizer.std.tolist()},
        "schedule": {"T": model.schedule.T, "beta_hi": model.schedule.beta_hi},
        "head_meta": head_meta,
    }


def model_from_dict(obj: dict):
    if obj.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise DataError(f"unsupported model schema_version {obj.get('schema_version')!r}")
    net = MlpModel(
        layer_dims=[int(v) for v in obj["layer_dims"]],
        weights=[np.array(W, dtype=np.float64) for W in obj["weights"]],
        biases=[np.array(b, dtype=np.float64) for b in obj["biases"]],
        head=obj["head"], dropout_rate=float(obj["dropout_rate"]))
    standardizer = Standardizer(
        mean=np.array(obj["standardization"]["mean"], dtype=np.float64),
        std=np.array(obj["standardization"]["std"], dtype=np.float64))
    sched = build_schedule(int(obj["schedule"]["T"]), float(obj["schedule"]["beta_hi"]))
    if net.head == HEAD_SOFTPLUS:
        return InvGammaModel(mlp=net, a=float(obj["head_meta"]["a"]),
                             schedule=sched, standardizer=standardizer)
    return CategoricalModel(mlp=net, bins=int(obj["head_meta"]["B"]),
                            schedule=sched, standardizer=standardizer)


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, separators=(",", ":"))


def load_model(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as err:
            raise DataError(f"{path}: not a valid model file: {err}") from err
    return model_from_dict(obj)


def config_with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=seed)
