"""Dense feed-forward networks in plain numpy.

Everything here is float64. A model is a list of weight matrices shaped
(fan_in, fan_out) with matching bias vectors; hidden layers use ReLU and
the output head is either softmax + cross-entropy or identity + half
squared error.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError, ShapeError, TrainingDiverged

SOFTMAX = "softmax_cross_entropy"
IDENTITY = "identity_squared_error"
HEADS = (SOFTMAX, IDENTITY)

LOG_CLAMP = 1e-12


@dataclass
class NetworkModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_head: str = SOFTMAX
    hidden_activation: str = "relu"
    rng_seed: int = 0

    def __post_init__(self):
        if self.output_head not in HEADS:
            raise ConfigError(f"unknown output head {self.output_head!r}")
        if self.hidden_activation != "relu":
            raise ConfigError(f"unsupported activation {self.hidden_activation!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("weights and biases must be non-empty and paired")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ShapeError(f"layer {k}: weight {W.shape} / bias {b.shape}")
            if k and W.shape[0] != self.weights[k - 1].shape[1]:
                raise ShapeError(f"layer {k} fan-in {W.shape[0]} does not chain")

    @classmethod
    def initialize(cls, layer_dims, output_head=SOFTMAX, seed=0):
        """Glorot-uniform weights, zero biases."""
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2 or min(dims) < 1:
            raise ConfigError(f"bad layer_dims {layer_dims!r}")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, output_head=output_head, rng_seed=seed)

    @property
    def layer_dims(self):
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    @property
    def n_inputs(self):
        return self.weights[0].shape[0]

    def copy(self):
        return copy.deepcopy(self)

    def is_finite(self):
        return all(np.isfinite(a).all() for a in self.weights + self.biases)


@dataclass
class TrainConfig:
    batch_size: int = 50
    learning_rate: float = 0.05
    max_epochs: int = 200
    patience: int = 5
    shuffle_seed: int = 0
    # relative validation improvement needed to reset the patience counter
    min_delta: float = 1e-2

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("batch_size, max_epochs and patience must be positive")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.patience > self.max_epochs:
            raise ConfigError("patience cannot exceed max_epochs")
        if self.min_delta < 0:
            raise ConfigError("min_delta must be non-negative")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def epochs(self):
        return len(self.val_loss) - 1


def _as_matrix(x, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    return x


def _check_inputs(model, X):
    X = _as_matrix(X, "inputs")
    if X.shape[1] != model.n_inputs:
        raise ShapeError(f"inputs have {X.shape[1]} columns, model expects {model.n_inputs}")
    return X


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cache(model, X):
    # pre-activations of every layer plus the activations feeding each layer
    acts = [X]
    pre = []
    h = X
    last = len(model.weights) - 1
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W + b
        pre.append(z)
        if k < last:
            h = np.maximum(z, 0.0)
            acts.append(h)
    out = softmax(pre[-1]) if model.output_head == SOFTMAX else pre[-1]
    return out, acts, pre


def forward(model, X):
    """Network outputs for the rows of ``X`` (probabilities for softmax heads)."""
    X = _check_inputs(model, X)
    return _forward_cache(model, X)[0]


def per_sample_loss(outputs, targets, head):
    outputs = _as_matrix(outputs, "outputs")
    targets = _as_matrix(targets, "targets")
    if outputs.shape != targets.shape:
        raise ShapeError(f"outputs {outputs.shape} vs targets {targets.shape}")
    if not (np.isfinite(outputs).all() and np.isfinite(targets).all()):
        raise NumericError("non-finite values in outputs or targets")
    return _raw_loss(outputs, targets, head)


def _raw_loss(outputs, targets, head):
    if head == SOFTMAX:
        return -(targets * np.log(np.maximum(outputs, LOG_CLAMP))).sum(axis=1)
    if head == IDENTITY:
        return 0.5 * ((targets - outputs) ** 2).sum(axis=1)
    raise ConfigError(f"unknown output head {head!r}")


def loss(outputs, targets, head):
    """Mean per-sample loss: cross-entropy or half squared error."""
    return float(per_sample_loss(outputs, targets, head).mean())


def _backward(model, out, acts, pre, Y):
    """Return (delta at each layer's pre-activation, gradient w.r.t. inputs).

    Deltas are per-sample derivatives of the per-sample loss; the softmax
    and identity heads both reduce to ``out - Y`` at the output.
    """
    delta = out - Y
    deltas = [None] * len(model.weights)
    for k in range(len(model.weights) - 1, -1, -1):
        deltas[k] = delta
        delta = delta @ model.weights[k].T
        if k > 0:
            delta = delta * (pre[k - 1] > 0)
    return deltas, delta


def input_gradients(model, X, Y):
    """Per-sample gradient of the single-sample loss w.r.t. each input.

    Row ``i`` holds dL(y_i, f(x_i))/dx for sample ``i``; nothing is
    averaged over the batch.
    """
    X = _check_inputs(model, X)
    Y = _as_matrix(Y, "targets")
    if Y.shape != (X.shape[0], model.layer_dims[-1]):
        raise ShapeError(f"targets shape {Y.shape} does not match outputs")
    out, acts, pre = _forward_cache(model, X)
    return _backward(model, out, acts, pre, Y)[1]


def _sgd_step(model, X, Y, lr):
    """One update on the batch-mean loss; returns the summed pre-update loss."""
    out, acts, pre = _forward_cache(model, X)
    deltas, _ = _backward(model, out, acts, pre, Y)
    scale = lr / X.shape[0]
    for k, d in enumerate(deltas):
        model.weights[k] -= scale * (acts[k].T @ d)
        model.biases[k] -= scale * d.sum(axis=0)
    return _raw_loss(out, Y, model.output_head).sum()


def _dataset_loss(model, X, Y, batch=4096):
    total = 0.0
    for start in range(0, X.shape[0], batch):
        xb = X[start:start + batch]
        out = _forward_cache(model, xb)[0]
        total += _raw_loss(out, Y[start:start + batch], model.output_head).sum()
    return total / X.shape[0]


def train(model, X_train, Y_train, X_val, Y_val, cfg=None):
    """Minibatch SGD with early stopping on validation loss.

    The input model is left untouched. Returns ``(best_model, history)``
    where ``best_model`` is the snapshot with the lowest validation loss
    seen (epoch 0 being the starting weights). Training stops after
    ``patience`` epochs without a relative improvement of ``min_delta``
    over the reference loss. Recorded training losses are running means
    over each epoch's minibatches.
    """
    cfg = cfg or TrainConfig()
    X_train = _check_inputs(model, X_train)
    X_val = _check_inputs(model, X_val)
    Y_train = _as_matrix(Y_train, "targets")
    Y_val = _as_matrix(Y_val, "targets")
    n = X_train.shape[0]
    if n == 0 or X_val.shape[0] == 0:
        raise ConfigError("training and validation splits must be non-empty")
    if cfg.batch_size > n:
        raise ConfigError(f"batch_size {cfg.batch_size} exceeds training size {n}")

    rng = np.random.default_rng(cfg.shuffle_seed)
    current = model.copy()
    history = TrainHistory()
    best = current.copy()
    best_val = _dataset_loss(current, X_val, Y_val)
    history.val_loss.append(best_val)
    history.train_loss.append(_dataset_loss(current, X_train, Y_train))
    reference = best_val
    stale = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.max_epochs + 1):
            order = rng.permutation(n)
            running = 0.0
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                running += _sgd_step(current, X_train[idx], Y_train[idx], cfg.learning_rate)
            val = _dataset_loss(current, X_val, Y_val)
            if not (np.isfinite(val) and np.isfinite(running) and current.is_finite()):
                raise TrainingDiverged(epoch, val)
            history.val_loss.append(val)
            history.train_loss.append(running / n)
            if val < best_val:
                best_val, best = val, current.copy()
                history.best_epoch = epoch
            if val < reference * (1.0 - cfg.min_delta):
                reference, stale = val, 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    return best, history


def drop_input_columns(model, keep_indices):
    """Remove input neurons, keeping only the rows of the first weight matrix in
    ``keep_indices``. All surviving parameters are copied bit-for-bit."""
    keep = np.asarray(keep_indices, dtype=np.int64)
    if keep.ndim != 1 or keep.size == 0:
        raise ConfigError("keep_indices must be a non-empty 1-D index list")
    if np.any(np.diff(keep) <= 0):
        raise ConfigError("keep_indices must be strictly increasing")
    if keep[0] < 0 or keep[-1] >= model.n_inputs:
        raise ConfigError("keep_indices out of range")
    reduced = model.copy()
    reduced.weights[0] = model.weights[0][keep].copy()
    return reduced
