"""Dense feed-forward network with exact manual backpropagation.

Layout: weights[i] has shape (out, in), row-major, so a layer computes
z = h @ W.T + b. Hidden layers are ReLU with inverted dropout (masks are
scaled by 1/(1-p) at train time, so inference needs no rescaling). Two
output heads are supported:

  softplus -- scalar positive output, log(1 + exp(z)), width 1
  softmax  -- categorical probabilities, arbitrary width

backward() consumes the gradient of the loss with respect to the *head
output* (probabilities for softmax, the positive scalar for softplus)
and returns gradients for every parameter plus the input batch, using
exactly the dropout masks recorded on the tape. All math is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import DataError, NumericError

HEAD_SOFTPLUS = "softplus"
HEAD_SOFTMAX = "softmax"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class MlpModel:
    layer_dims: list[int]
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    head: str = HEAD_SOFTPLUS
    dropout_rate: float = 0.0
    train_mode: bool = False

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]


@dataclass
class Tape:
    """Activation cache from one forward pass; consumed by backward()."""

    model: MlpModel = field(repr=False)
    x: np.ndarray = field(repr=False)
    pre_acts: list[np.ndarray] = field(repr=False)     # z per layer, output last
    hidden_acts: list[np.ndarray] = field(repr=False)  # post ReLU+dropout per hidden layer
    drop_mults: list[np.ndarray | None] = field(repr=False)
    out: np.ndarray = field(repr=False)


@dataclass
class Gradients:
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    inputs: np.ndarray = field(repr=False)


@dataclass
class AdamState:
    lr: float
    step_count: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    m_w: list[np.ndarray] = field(default_factory=list, repr=False)
    v_w: list[np.ndarray] = field(default_factory=list, repr=False)
    m_b: list[np.ndarray] = field(default_factory=list, repr=False)
    v_b: list[np.ndarray] = field(default_factory=list, repr=False)


def init_model(layer_dims, head: str, dropout_rate: float = 0.0,
               rng: np.random.Generator | None = None) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    layer_dims = [int(d) for d in layer_dims]
    if len(layer_dims) < 2 or any(d < 1 for d in layer_dims):
        raise DataError(f"layer_dims must chain >= 2 positive sizes, got {layer_dims}")
    if head not in (HEAD_SOFTPLUS, HEAD_SOFTMAX):
        raise DataError(f"unknown head {head!r}")
    if head == HEAD_SOFTPLUS and layer_dims[-1] != 1:
        raise DataError("softplus head requires output width 1")
    if not 0.0 <= dropout_rate < 1.0:
        raise DataError(f"dropout_rate must be in [0, 1), got {dropout_rate}")
    if rng is None:
        rng = np.random.default_rng()
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_dims=layer_dims, weights=weights, biases=biases,
                    head=head, dropout_rate=float(dropout_rate))


def softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: MlpModel, batch: np.ndarray,
            rng: np.random.Generator | None = None) -> tuple[np.ndarray, Tape]:
    """Run the network on an (n, d) batch; returns (head outputs, tape).

    With train_mode off the pass is deterministic; with train_mode on and
    dropout_rate > 0 an rng must be supplied for the masks.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[1] != model.input_dim:
        raise DataError(f"batch width {batch.shape[1]} != input dim {model.input_dim}")
    if not np.all(np.isfinite(batch)):
        raise NumericError("forward input contains NaN or Inf")
    use_dropout = model.train_mode and model.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ValueError("train-mode forward with dropout needs an rng for the masks")

    h = batch
    pre_acts: list[np.ndarray] = []
    hidden_acts: list[np.ndarray] = []
    drop_mults: list[np.ndarray | None] = []
    n_layers = len(model.weights)
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W.T + b
        pre_acts.append(z)
        if i == n_layers - 1:
            break
        h = np.maximum(z, 0.0)
        if use_dropout:
            keep = 1.0 - model.dropout_rate
            mult = (rng.random(h.shape) < keep) / keep
            h = h * mult
            drop_mults.append(mult)
        else:
            drop_mults.append(None)
        hidden_acts.append(h)

    z_out = pre_acts[-1]
    if model.head == HEAD_SOFTPLUS:
        out = softplus(z_out)
    else:
        out = softmax(z_out)
    tape = Tape(model=model, x=batch, pre_acts=pre_acts, hidden_acts=hidden_acts,
                drop_mults=drop_mults, out=out)
    return out, tape


def backward(model: MlpModel, tape: Tape, loss_grad: np.ndarray) -> Gradients:
    """Backpropagate d(loss)/d(head output) through the taped forward pass."""
    if tape.model is not model:
        raise ValueError("tape does not belong to this model")
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    if loss_grad.shape != tape.out.shape:
        raise ValueError(f"loss_grad shape {loss_grad.shape} != output shape {tape.out.shape}")

    z_out = tape.pre_acts[-1]
    if model.head == HEAD_SOFTPLUS:
        dz = loss_grad * expit(z_out)
    else:
        p = tape.out
        dz = p * (loss_grad - (loss_grad * p).sum(axis=1, keepdims=True))

    g_w = [np.empty(0)] * len(model.weights)
    g_b = [np.empty(0)] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        inp = tape.x if i == 0 else tape.hidden_acts[i - 1]
        g_w[i] = dz.T @ inp
        g_b[i] = dz.sum(axis=0)
        dh = dz @ model.weights[i]
        if i == 0:
            return Gradients(weights=g_w, biases=g_b, inputs=dh)
        if tape.drop_mults[i - 1] is not None:
            dh = dh * tape.drop_mults[i - 1]
        dz = dh * (tape.pre_acts[i - 1] > 0.0)
    raise AssertionError("unreachable")


def init_adam_state(model: MlpModel, lr: float) -> AdamState:
    state = AdamState(lr=float(lr))
    state.m_w = [np.zeros_like(W) for W in model.weights]
    state.v_w = [np.zeros_like(W) for W in model.weights]
    state.m_b = [np.zeros_like(b) for b in model.biases]
    state.v_b = [np.zeros_like(b) for b in model.biases]
    return state


def adam_step(model: MlpModel, state: AdamState,
              grads: Gradients) -> tuple[MlpModel, AdamState]:
    """Bias-corrected Adam update, in place; returns the updated pair."""
    for g in (*grads.weights, *grads.biases):
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient in adam_step")
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t

    def update(param, m, v, g):
        if g.shape != param.shape:
            raise DataError(f"gradient shape {g.shape} != parameter shape {param.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        param -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)

    for W, m, v, g in zip(model.weights, state.m_w, state.v_w, grads.weights):
        update(W, m, v, g)
    for b, m, v, g in zip(model.biases, state.m_b, state.v_b, grads.biases):
        update(b, m, v, g)
    return model, state
