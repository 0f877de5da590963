"""Multi-class linear SVM, one-against-all, trained from scratch.

Each class gets a binary L2-regularized hinge-loss subproblem solved by
deterministic epoch-wise subgradient descent with step 1/(lambda * t)
(Pegasos-style).  All subproblems share the per-epoch shuffle so the whole
multi-class update vectorizes.  The returned model holds the averaged
iterate, which makes the epoch-boundary objective well behaved.
"""

from __future__ import annotations

import ast
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ShapeError, TrainingError
from .vectorizers import FeatureVector

MODEL_MAGIC = "spikecode-linear-model v1"


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (n_classes, dim)
    biases: np.ndarray  # (n_classes,)
    class_labels: tuple
    regularization_lambda: float
    train_meta: dict = field(default_factory=dict)
    objective_history: np.ndarray | None = None  # (epochs + 1, n_classes)

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def _as_matrix(data):
    X = np.stack([np.asarray(vec.values, dtype=np.float64) for vec, _ in data])
    labels = [label for _, label in data]
    return X, labels


def hinge_objective(W, b, X, Y, lam) -> np.ndarray:
    """Per-class lambda/2 ||w||^2 + mean hinge loss; Y holds +/-1 targets."""
    margins = Y * (X @ W.T + b)
    loss = np.maximum(0.0, 1.0 - margins).mean(axis=0)
    return 0.5 * lam * np.sum(W * W, axis=1) + loss


def train_ova_svm(data, lam: float = 1e-4, epochs: int = 50,
                  seed: int = 0, train_meta: dict | None = None) -> LinearModel:
    if not data:
        raise TrainingError("empty training set")
    X, labels = _as_matrix(data)
    if X.ndim != 2:
        raise ShapeError("feature vectors have inconsistent lengths")
    # train in a scale-free space (mean feature norm 1) so the fixed lambda
    # and 1/(lambda*t) step behave the same regardless of feature magnitude;
    # the returned weights are mapped back to raw-feature space
    scale = float(np.mean(np.linalg.norm(X, axis=1)))
    if scale <= 0.0:
        scale = 1.0
    X = X / scale
    class_labels = tuple(sorted(set(labels)))
    if len(class_labels) < 2:
        raise TrainingError("need at least 2 distinct labels")
    index = {lab: i for i, lab in enumerate(class_labels)}
    n, d = X.shape
    n_classes = len(class_labels)
    Y = -np.ones((n, n_classes))
    for row, lab in enumerate(labels):
        Y[row, index[lab]] = 1.0

    rng = np.random.default_rng(seed)
    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    # the returned model is the average of the second-half iterates; the raw
    # 1/(lambda*t) iterates never settle at small lambda, and averaging only
    # the tail discards the wild early steps.  the objective history tracks
    # the same averaged iterate (still the zero initialization before the
    # tail begins), so it describes the model actually being built.
    W_tail = np.zeros_like(W)
    b_tail = np.zeros_like(b)
    history = np.empty((epochs + 1, n_classes))
    history[0] = hinge_objective(W_tail, b_tail, X, Y, lam)
    t = 0
    n_tail = 0
    tail_start = epochs // 2
    radius = 1.0 / math.sqrt(lam)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for row in order:
            t += 1
            x = X[row]
            y = Y[row]
            eta = 1.0 / (lam * t)
            W *= 1.0 - 1.0 / t
            violated = y * (W @ x + b) < 1.0
            if np.any(violated):
                W[violated] += (eta * y[violated])[:, None] * x
                # the unregularized bias takes a bounded 1/t step, keeping the
                # early iterates (eta = 1/(lambda*t) is huge at first) sane
                b[violated] += y[violated] / t
            # project each class row onto the 1/sqrt(lambda) ball
            norms = np.sqrt(np.sum(W * W, axis=1))
            over = norms > radius
            if np.any(over):
                W[over] *= (radius / norms[over])[:, None]
            if epoch >= tail_start:
                n_tail += 1
                W_tail += (W - W_tail) / n_tail
                b_tail += (b - b_tail) / n_tail
        history[epoch + 1] = hinge_objective(W_tail, b_tail, X, Y, lam)
    if n_tail == 0:
        W_tail = W.copy()
        b_tail = b.copy()

    meta = {"epochs": epochs, "seed": seed, "feature_scale": scale}
    if train_meta:
        meta.update(train_meta)
    return LinearModel(weights=W_tail / scale, biases=b_tail,
                       class_labels=class_labels,
                       regularization_lambda=lam, train_meta=meta,
                       objective_history=history)


def decision_values(model: LinearModel, x: FeatureVector | np.ndarray) -> np.ndarray:
    values = x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=np.float64)
    if values.shape[0] != model.dim:
        raise ShapeError("feature length %d != model dim %d"
                         % (values.shape[0], model.dim))
    return model.weights @ values + model.biases


def predict(model: LinearModel, x: FeatureVector | np.ndarray):
    """argmax over one-vs-all decision values; ties go to the lowest index."""
    return model.class_labels[int(np.argmax(decision_values(model, x)))]


def accuracy(model: LinearModel, data) -> float:
    if not data:
        return 0.0
    hits = sum(1 for vec, label in data if predict(model, vec) == label)
    return 100.0 * hits / len(data)


def save_model(model: LinearModel) -> str:
    """Text serialization; float repr keeps the reload bit-exact."""
    out = io.StringIO()
    out.write(MODEL_MAGIC + "\n")
    out.write("n_classes=%d\n" % model.n_classes)
    out.write("dim=%d\n" % model.dim)
    out.write("labels=%s\n" % ",".join(str(l) for l in model.class_labels))
    out.write("lambda=%r\n" % model.regularization_lambda)
    for key in sorted(model.train_meta):
        out.write("meta.%s=%r\n" % (key, model.train_meta[key]))
    out.write("biases=%s\n" % " ".join(repr(float(v)) for v in model.biases))
    for c in range(model.n_classes):
        out.write("w=%s\n" % " ".join(repr(float(v)) for v in model.weights[c]))
    return out.getvalue()


def load_model(text: str) -> LinearModel:
    lines = text.strip().splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ParseError("not a linear model file")
    fields = {}
    weights = []
    for line in lines[1:]:
        key, _, value = line.partition("=")
        if key == "w":
            weights.append(np.array([float(v) for v in value.split()]))
        else:
            fields[key] = value
    try:
        n_classes = int(fields["n_classes"])
        dim = int(fields["dim"])
        labels = tuple(fields["labels"].split(","))
        lam = float(fields["lambda"])
        biases = np.array([float(v) for v in fields["biases"].split()])
    except KeyError as exc:
        raise ParseError("missing model field %s" % exc)
    meta = {}
    for key, value in fields.items():
        if key.startswith("meta."):
            meta[key[5:]] = ast.literal_eval(value)
    W = np.stack(weights)
    if W.shape != (n_classes, dim) or len(biases) != n_classes:
        raise ParseError("model dimensions inconsistent")
    return LinearModel(weights=W, biases=biases, class_labels=labels,
                       regularization_lambda=lam, train_meta=meta)
