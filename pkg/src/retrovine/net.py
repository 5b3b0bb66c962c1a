"""Small feedforward regression networks in numpy.

A trunk maps inputs through ReLU hidden layers to a linear output. Its
embedding is the pre-activation of the last hidden layer, and a head is a
one-hidden-layer network on that embedding. Both are trained with plain
mini-batch SGD on mean-squared error. Inputs and targets are standardised
inside the model so one learning rate works across problems.
"""
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .rng import make_rng, subseed

JSON_FORMAT = "retrovine.mlp/1"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-2
    batch_size: int = 32
    seed: int = 0
    lr_decay: float = 1.0
    decay_every: int = 0
    standardize: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(eq=False)
class MlpModel:
    """Weights ``weights[l]`` have shape (in, out); hidden activation is ReLU."""

    layer_widths: tuple
    weights: list
    biases: list
    x_shift: np.ndarray = None
    x_scale: np.ndarray = None
    y_shift: float = 0.0
    y_scale: float = 1.0
    activation: str = "relu"

    def __post_init__(self):
        self.layer_widths = tuple(int(w) for w in self.layer_widths)
        if len(self.layer_widths) < 3:
            raise ValueError("need an input, at least one hidden and an output layer")
        if self.layer_widths[-1] != 1:
            raise ValueError("output width must be 1")
        p = self.layer_widths[0]
        if self.x_shift is None:
            self.x_shift = np.zeros(p)
        if self.x_scale is None:
            self.x_scale = np.ones(p)
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_widths[l], self.layer_widths[l + 1]) or b.shape != (self.layer_widths[l + 1],):
                raise ValueError(f"layer {l} has inconsistent shapes")

    @property
    def input_dim(self):
        return self.layer_widths[0]

    @property
    def embedding_dim(self):
        return self.layer_widths[-2]

    def copy(self):
        return replace(self, weights=[w.copy() for w in self.weights],
                       biases=[b.copy() for b in self.biases],
                       x_shift=self.x_shift.copy(), x_scale=self.x_scale.copy())

    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def to_dict(self):
        return {
            "format": JSON_FORMAT,
            "layer_widths": list(self.layer_widths),
            "activation": self.activation,
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "x_shift": self.x_shift.tolist(),
            "x_scale": self.x_scale.tolist(),
            "y_shift": self.y_shift,
            "y_scale": self.y_scale,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != JSON_FORMAT:
            raise ValueError(f"not a {JSON_FORMAT} document")
        widths = [int(w) for w in d["layer_widths"]]
        weights = [np.asarray(w, dtype=np.float64).reshape(widths[l], widths[l + 1])
                   for l, w in enumerate(d["weights"])]
        biases = [np.asarray(b, dtype=np.float64) for b in d["biases"]]
        return cls(tuple(widths), weights, biases,
                   np.asarray(d["x_shift"], dtype=np.float64),
                   np.asarray(d["x_scale"], dtype=np.float64),
                   float(d["y_shift"]), float(d["y_scale"]), d.get("activation", "relu"))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class Head(MlpModel):
    """A one-hidden-layer network on trunk embeddings."""


@dataclass(eq=False)
class HeadEnsemble:
    heads: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.heads) < 2:
            raise ValueError("a head ensemble needs at least 2 heads")
        dims = {h.input_dim for h in self.heads}
        if len(dims) != 1:
            raise ValueError("all heads must share the input dimension")

    @property
    def size(self):
        return len(self.heads)

    def predict_all(self, xi):
        """Predictions of every head, shape (S, L)."""
        return np.stack([predict(h, xi) for h in self.heads])


def init_mlp(layer_widths, seed, cls=MlpModel):
    """Glorot-uniform weights, zero biases."""
    rng = make_rng(seed)
    widths = [int(w) for w in layer_widths]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return cls(tuple(widths), weights, biases)


def _check_input(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, model.input_dim) if model.input_dim > 1 else X[:, None]
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ValueError(f"expected inputs of width {model.input_dim}, got shape {X.shape}")
    return X


def _forward(model, Xs):
    """Pre-activations and activations on standardised inputs."""
    pre, act = [], [Xs]
    a = Xs
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        pre.append(z)
        a = z if l == last else np.maximum(z, 0.0)
        act.append(a)
    return pre, act


def embed(model, X):
    """Pre-activation of the last hidden layer, shape (N, d)."""
    X = _check_input(model, X)
    pre, _ = _forward(model, (X - model.x_shift) / model.x_scale)
    return pre[-2]


def output_from_embedding(model, xi):
    """Apply the activation and output layer to embeddings."""
    xi = np.asarray(xi, dtype=np.float64)
    out = np.maximum(xi, 0.0) @ model.weights[-1] + model.biases[-1]
    return model.y_shift + model.y_scale * out[:, 0]


def predict(model, X):
    X = _check_input(model, X)
    _, act = _forward(model, (X - model.x_shift) / model.x_scale)
    return model.y_shift + model.y_scale * act[-1][:, 0]


def loss_and_grads(model, Xs, ys):
    """MSE on standardised data and its gradients (weights then biases)."""
    pre, act = _forward(model, Xs)
    n = Xs.shape[0]
    resid = act[-1][:, 0] - ys
    loss = float(np.mean(resid * resid))
    delta = (2.0 / n) * resid[:, None]
    gw = [None] * len(model.weights)
    gb = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        gw[l] = act[l].T @ delta
        gb[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ model.weights[l].T) * (pre[l - 1] > 0.0)
    return loss, gw, gb


def _standardizer(a):
    shift = a.mean(axis=0)
    scale = a.std(axis=0)
    return shift, np.where(scale > 0, scale, 1.0)


def _fit(model, X, y, config):
    X = _check_input(model, X)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if y.size != n:
        raise ValueError("X and y have different numbers of rows")
    if n < config.batch_size:
        raise ValueError("need at least batch_size training rows")
    if config.standardize and config.epochs > 0:
        model.x_shift, model.x_scale = _standardizer(X)
        ys, yscale = _standardizer(y)
        model.y_shift, model.y_scale = float(ys), float(yscale)
    Xs = (X - model.x_shift) / model.x_scale
    ys = (y - model.y_shift) / model.y_scale
    rng = make_rng(subseed(config.seed, "shuffle"))
    lr = config.learning_rate
    trace = []
    for epoch in range(config.epochs):
        if config.decay_every and epoch and epoch % config.decay_every == 0:
            lr *= config.lr_decay
        perm = rng.permutation(n)
        total = 0.0
        batches = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, gw, gb = loss_and_grads(model, Xs[idx], ys[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, batch {batches}; "
                    f"try a smaller learning rate (now {lr})")
            for l in range(len(model.weights)):
                # finite loss with overflowing gradients shows up as NaN next batch
                model.weights[l] -= lr * gw[l]
                model.biases[l] -= lr * gb[l]
            total += loss
            batches += 1
        trace.append({"epoch": epoch, "loss": total / batches, "learning_rate": lr})
    return model, trace


def train_mlp(X, y, layer_widths, config=None):
    """Train a trunk network; returns ``(model, loss_trace)``.

    ``layer_widths`` runs from the input width through the hidden widths to
    the output width 1. The trace holds one record per epoch with the mean
    mini-batch loss on the standardised scale.
    """
    config = config or TrainConfig()
    model = init_mlp(layer_widths, subseed(config.seed, "init"))
    return _fit(model, X, y, config)


def train_head(xi, y, config=None):
    """Fit a fresh head (hidden width = embedding width) on ``(xi, y)``."""
    config = config or TrainConfig()
    xi = np.asarray(xi, dtype=np.float64)
    if xi.ndim == 1:
        xi = xi[:, None]
    if xi.shape[0] < 2:
        raise ValueError("train_head needs at least 2 rows")
    d = xi.shape[1]
    cfg = config if xi.shape[0] >= config.batch_size else replace(config, batch_size=xi.shape[0])
    head = init_mlp((d, d, 1), subseed(cfg.seed, "init"), cls=Head)
    head, _ = _fit(head, xi, y, cfg)
    return head


def mse(model, X, y):
    r = predict(model, X) - np.asarray(y, dtype=np.float64).ravel()
    return float(np.mean(r * r))
