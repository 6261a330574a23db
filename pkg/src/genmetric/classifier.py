"""Softmax classifier trained by momentum SGD with warmup + step decay.

The estimator follows the sklearn fit/predict API so it composes with
the wider ecosystem; the trainer itself is deliberately from-scratch
numpy so that every arithmetic step is inspectable and deterministic:
fixed Glorot-uniform init, fixed shuffle order, per-epoch learning rate
from `learning_rate_at`, plain momentum update (v = mu*v + g;
w -= lr*v), L2 weight decay on weight matrices only.

Input standardization (per-dimension mean/scale of the *training* set)
is baked into the fitted model, so a classifier trained on synthetic
data never peeks at real statistics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .data import LabeledDataset
from .validation import check_feature_matrix, check_labels

__all__ = [
    "SoftmaxClassifier",
    "TrainingDivergedError",
    "TrainingTrace",
    "learning_rate_at",
    "evaluate_topk",
    "save_model",
    "load_model",
]


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainingTrace:
    """Per-epoch diagnostics recorded during fit."""

    losses: list = field(default_factory=list)
    learning_rates: list = field(default_factory=list)
    final_train_accuracy: float = float("nan")


def learning_rate_at(
    epoch: int,
    epochs: int,
    peak_lr: float,
    warmup_epochs: int,
    decay_epochs,
    decay_factor: float,
) -> float:
    """Learning rate for `epoch`: linear ramp to peak_lr over the warmup
    epochs (lr(e) = peak_lr*(e+1)/warmup for e < warmup), then peak_lr
    times decay_factor once per decay epoch passed."""
    if not 0 <= epoch < epochs:
        raise ValueError(f"epoch {epoch} out of range [0, {epochs})")
    if warmup_epochs > 0 and epoch < warmup_epochs:
        return peak_lr * (epoch + 1) / warmup_epochs
    n_decays = sum(1 for d in decay_epochs if d <= epoch)
    return peak_lr * decay_factor**n_decays


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class SoftmaxClassifier(BaseEstimator, ClassifierMixin):
    """Linear or small multilayer softmax classifier.

    Parameters
    ----------
    hidden_widths : tuple of int
        Hidden layer sizes; () gives a linear (logistic-regression-like)
        model. Default (64,).
    activation : "relu" or "tanh"
        Elementwise nonlinearity between hidden layers.
    epochs, batch_size, peak_lr, warmup_epochs, decay_epochs,
    decay_factor, momentum, weight_decay, seed
        Training schedule and optimizer knobs; defaults are the
        desk-scale recipe (30 epochs, batch 64, peak 0.1 with 3 warmup
        epochs and x0.1 decays at epochs 15 and 25, momentum 0.9,
        weight decay 1e-4).
    """

    def __init__(
        self,
        hidden_widths=(64,),
        activation="relu",
        epochs=30,
        batch_size=64,
        peak_lr=0.1,
        warmup_epochs=3,
        decay_epochs=(15, 25),
        decay_factor=0.1,
        momentum=0.9,
        weight_decay=1e-4,
        seed=0,
    ):
        self.hidden_widths = hidden_widths
        self.activation = activation
        self.epochs = epochs
        self.batch_size = batch_size
        self.peak_lr = peak_lr
        self.warmup_epochs = warmup_epochs
        self.decay_epochs = decay_epochs
        self.decay_factor = decay_factor
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.seed = seed

    # -- parameter validation -------------------------------------------

    def _validate_params_(self):
        if self.activation not in ("relu", "tanh"):
            raise ValueError(f"activation must be 'relu' or 'tanh', got {self.activation!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.peak_lr > 0:
            raise ValueError("peak_lr must be > 0")
        decays = tuple(self.decay_epochs)
        if any(b <= a for a, b in zip(decays, decays[1:])):
            raise ValueError("decay_epochs must be strictly increasing")
        if decays and decays[-1] >= self.epochs:
            raise ValueError("decay_epochs must be < epochs")
        if not 0.0 < self.decay_factor < 1.0:
            raise ValueError("decay_factor must be in (0, 1)")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")

    def lr_at(self, epoch: int) -> float:
        self._validate_params_()
        return learning_rate_at(
            epoch, self.epochs, self.peak_lr, self.warmup_epochs,
            tuple(self.decay_epochs), self.decay_factor,
        )

    # -- core math -------------------------------------------------------

    def _forward(self, Z: np.ndarray):
        """Standardized input -> (activations per layer, logits)."""
        acts = [Z]
        h = Z
        for W, b in zip(self.coefs_[:-1], self.intercepts_[:-1]):
            pre = h @ W + b
            h = np.maximum(pre, 0.0) if self.activation == "relu" else np.tanh(pre)
            acts.append(h)
        logits = h @ self.coefs_[-1] + self.intercepts_[-1]
        return acts, logits

    def _loss_grad(self, Z: np.ndarray, y: np.ndarray):
        """Mean cross-entropy + weight decay, with gradients per parameter."""
        n = Z.shape[0]
        acts, logits = self._forward(Z)
        logp = logits - logits.max(axis=1, keepdims=True)
        logp = logp - np.log(np.exp(logp).sum(axis=1, keepdims=True))
        ce = -float(logp[np.arange(n), y].mean())
        probs = np.exp(logp)

        delta = probs
        delta[np.arange(n), y] -= 1.0
        delta /= n
        gws, gbs = [], []
        for layer in range(len(self.coefs_) - 1, -1, -1):
            gws.append(acts[layer].T @ delta + self.weight_decay * self.coefs_[layer])
            gbs.append(delta.sum(axis=0))
            if layer > 0:
                delta = delta @ self.coefs_[layer].T
                if self.activation == "relu":
                    delta = delta * (acts[layer] > 0)
                else:
                    delta = delta * (1.0 - acts[layer] ** 2)
        gws.reverse()
        gbs.reverse()
        penalty = 0.5 * self.weight_decay * sum(float(np.sum(W * W)) for W in self.coefs_)
        return ce + penalty, ce, gws, gbs

    # -- sklearn API -----------------------------------------------------

    def fit(self, X, y, n_classes: int | None = None):
        """Train on (X, y); deterministic given `seed`.

        Standardization statistics come from X itself. `n_classes`
        widens the output beyond max(y)+1 when the training labels do
        not cover every class. Raises TrainingDivergedError (with the
        offending epoch) if the loss leaves the reals.
        """
        self._validate_params_()
        X = check_feature_matrix(X)
        y = np.asarray(y, dtype=np.int64)
        classes = int(y.max()) + 1
        if n_classes is not None:
            if n_classes < classes:
                raise ValueError(f"n_classes={n_classes} smaller than max label {classes - 1}")
            classes = int(n_classes)
        y = check_labels(y, X.shape[0], classes, name="y")
        n, d = X.shape

        self.n_features_in_ = d
        self.classes_ = np.arange(classes)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self.input_mean_ = mean
        self.input_scale_ = scale
        Z = (X - mean) / scale

        rng = np.random.default_rng(self.seed)
        widths = [d, *self.hidden_widths, classes]
        self.coefs_, self.intercepts_ = [], []
        for fan_in, fan_out in zip(widths, widths[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.coefs_.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.intercepts_.append(np.zeros(fan_out))

        velocity_w = [np.zeros_like(W) for W in self.coefs_]
        velocity_b = [np.zeros_like(b) for b in self.intercepts_]
        trace = TrainingTrace()
        for epoch in range(self.epochs):
            lr = self.lr_at(epoch)
            order = rng.permutation(n)
            total_ce = 0.0
            for start in range(0, n, self.batch_size):
                batch = order[start : start + self.batch_size]
                loss, ce, gws, gbs = self._loss_grad(Z[batch], y[batch])
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch)
                total_ce += ce * batch.size
                for i in range(len(self.coefs_)):
                    velocity_w[i] = self.momentum * velocity_w[i] + gws[i]
                    velocity_b[i] = self.momentum * velocity_b[i] + gbs[i]
                    self.coefs_[i] -= lr * velocity_w[i]
                    self.intercepts_[i] -= lr * velocity_b[i]
            trace.losses.append(total_ce / n)
            trace.learning_rates.append(lr)
        trace.final_train_accuracy = float((self.predict(X) == y).mean())
        self.trace_ = trace
        return self

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        X = check_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return (X - self.input_mean_) / self.input_scale_

    def decision_function(self, X) -> np.ndarray:
        _, logits = self._forward(self._standardize(X))
        return logits

    def predict_proba(self, X) -> np.ndarray:
        """Softmax probabilities (max-subtracted; rows sum to 1)."""
        return _softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def predict_topk(self, X, k: int) -> np.ndarray:
        """Top-k labels per row, descending probability, ties toward the
        lower label index."""
        if not 1 <= k <= len(self.classes_):
            raise ValueError(f"k must be in [1, {len(self.classes_)}], got {k}")
        probs = self.predict_proba(X)
        return np.argsort(-probs, axis=1, kind="stable")[:, :k]

    def hidden_activations(self, X) -> np.ndarray:
        """Activation of the last hidden layer (the standardized input for
        a linear model); the penultimate feature space used for embeddings."""
        acts, _ = self._forward(self._standardize(X))
        return acts[-1]


def loss_and_gradient(model: SoftmaxClassifier, X, y) -> tuple[float, np.ndarray]:
    """Mean cross-entropy + weight-decay penalty on a batch, with the
    gradient over all parameters flattened layer by layer as
    [W0.ravel(), b0, W1.ravel(), b1, ...]."""
    X = check_feature_matrix(X)
    y = check_labels(np.asarray(y), X.shape[0], len(model.classes_), name="y")
    loss, _, gws, gbs = model._loss_grad(model._standardize(X), y)
    flat = np.concatenate([np.concatenate([W.ravel(), b]) for W, b in zip(gws, gbs)])
    return loss, flat


def get_flat_params(model: SoftmaxClassifier) -> np.ndarray:
    return np.concatenate(
        [np.concatenate([W.ravel(), b]) for W, b in zip(model.coefs_, model.intercepts_)]
    )


def set_flat_params(model: SoftmaxClassifier, flat: np.ndarray) -> None:
    pos = 0
    for i, W in enumerate(model.coefs_):
        model.coefs_[i] = flat[pos : pos + W.size].reshape(W.shape).copy()
        pos += W.size
        b = model.intercepts_[i]
        model.intercepts_[i] = flat[pos : pos + b.size].copy()
        pos += b.size


def evaluate_topk(model: SoftmaxClassifier, ds: LabeledDataset, k: int):
    """Top-k accuracy on a dataset plus the per-class breakdown.

    Classes with no test examples get NaN in the per-class vector. The
    overall accuracy is the class-count-weighted mean of the rest.
    """
    topk = model.predict_topk(ds.features.astype(np.float64), k)
    hit = (topk == ds.labels[:, None]).any(axis=1)
    per_class = np.full(ds.num_classes, np.nan)
    for c in range(ds.num_classes):
        mask = ds.labels == c
        if mask.any():
            per_class[c] = float(hit[mask].mean())
    return float(hit.mean()), per_class


# -- serialization: JSON header + little-endian float32 payload ----------

MODEL_HEADER_NAME = "model.json"
MODEL_WEIGHTS_NAME = "weights.f32le"


def save_model(model: SoftmaxClassifier, directory) -> None:
    """Write the architecture/standardization header and the flat f32
    weight payload (same parameter order as loss_and_gradient)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    header = {
        "hidden_widths": [int(w) for w in model.hidden_widths],
        "activation": model.activation,
        "input_dim": int(model.n_features_in_),
        "num_classes": int(len(model.classes_)),
        "input_mean": model.input_mean_.tolist(),
        "input_scale": model.input_scale_.tolist(),
    }
    payload = get_flat_params(model).astype("<f4").tobytes()
    (directory / MODEL_HEADER_NAME).write_text(json.dumps(header, indent=2) + "\n")
    (directory / MODEL_WEIGHTS_NAME).write_bytes(payload)


def load_model(directory) -> SoftmaxClassifier:
    directory = Path(directory)
    header = json.loads((directory / MODEL_HEADER_NAME).read_text())
    model = SoftmaxClassifier(
        hidden_widths=tuple(header["hidden_widths"]), activation=header["activation"]
    )
    d, k = header["input_dim"], header["num_classes"]
    model.n_features_in_ = d
    model.classes_ = np.arange(k)
    model.input_mean_ = np.asarray(header["input_mean"], dtype=np.float64)
    model.input_scale_ = np.asarray(header["input_scale"], dtype=np.float64)
    widths = [d, *header["hidden_widths"], k]
    model.coefs_ = [np.zeros((a, b)) for a, b in zip(widths, widths[1:])]
    model.intercepts_ = [np.zeros(b) for b in widths[1:]]
    flat = np.frombuffer((directory / MODEL_WEIGHTS_NAME).read_bytes(), dtype="<f4")
    expected = sum(W.size + b.size for W, b in zip(model.coefs_, model.intercepts_))
    if flat.size != expected:
        raise ValueError(f"weight payload has {flat.size} values, expected {expected}")
    set_flat_params(model, flat.astype(np.float64))
    return model
