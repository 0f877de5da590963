"""Tempotron classifier pool: one LIF neuron per class, one-against-all.

Each neuron's membrane potential is a weighted sum of double-exponential
post-synaptic kernels over the afferent spikes.  Training nudges weights at
the time of peak potential: upward when a target pattern stayed subthreshold,
downward when a non-target pattern crossed threshold (max-potential
formulation, no reset dynamics).
"""

from __future__ import annotations

import ast
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import ParseError, ShapeError, TrainingError
from .encoders import SpikePattern

MODEL_MAGIC = "spikecode-tempotron-model v1"

DEFAULT_TAU_M = 0.020
DEFAULT_TAU_S = 0.005
DEFAULT_LEARN_RATE = 1e-3
DEFAULT_GRID_STEP = 0.001
WEIGHT_INIT_SCALE = 1e-3


def kernel_peak_time(tau_m: float, tau_s: float) -> float:
    """Delay at which the un-normalized kernel difference is maximal."""
    return tau_m * tau_s / (tau_m - tau_s) * math.log(tau_m / tau_s)


def kernel_norm(tau_m: float, tau_s: float) -> float:
    """V0 such that the kernel peak is exactly 1."""
    tp = kernel_peak_time(tau_m, tau_s)
    return 1.0 / (math.exp(-tp / tau_m) - math.exp(-tp / tau_s))


def psp_kernel(dt, tau_m: float = DEFAULT_TAU_M, tau_s: float = DEFAULT_TAU_S,
               v0: float | None = None):
    """K(dt) = V0 (exp(-dt/tau_m) - exp(-dt/tau_s)) for dt >= 0, else 0."""
    if v0 is None:
        v0 = kernel_norm(tau_m, tau_s)
    dt = np.asarray(dt, dtype=np.float64)
    dt_pos = np.where(dt >= 0, dt, 0.0)
    k = v0 * (np.exp(-dt_pos / tau_m) - np.exp(-dt_pos / tau_s))
    k = np.where(dt >= 0, k, 0.0)
    return float(k) if k.ndim == 0 else k


@dataclass(frozen=True)
class TempotronModel:
    weights: np.ndarray  # (n_classes, n_afferents)
    class_labels: tuple
    tau_m: float = DEFAULT_TAU_M
    tau_s: float = DEFAULT_TAU_S
    v_threshold: float = 1.0
    v_rest: float = 0.0
    learn_rate: float = DEFAULT_LEARN_RATE
    grid_step: float = DEFAULT_GRID_STEP
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.tau_m > self.tau_s > 0):
            raise TrainingError("need tau_m > tau_s > 0")

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    @property
    def n_afferents(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_v0(self) -> float:
        return kernel_norm(self.tau_m, self.tau_s)


def init_model(n_afferents: int, class_labels, seed: int = 0,
               **kwargs) -> TempotronModel:
    """Uniform [0, 1e-3] weight init from the seed."""
    labels = tuple(class_labels)
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0.0, WEIGHT_INIT_SCALE, size=(len(labels), n_afferents))
    return TempotronModel(weights=weights, class_labels=labels, **kwargs)


def _pattern_arrays(pattern: SpikePattern, model: TempotronModel):
    if pattern.n_neurons != model.n_afferents:
        raise ShapeError("pattern has %d afferents, model expects %d"
                         % (pattern.n_neurons, model.n_afferents))
    times, neurons = pattern.as_arrays()
    tp = kernel_peak_time(model.tau_m, model.tau_s)
    uniform = np.arange(0.0, pattern.duration + model.grid_step / 2, model.grid_step)
    grid = np.unique(np.concatenate([times, times + tp, uniform]))
    return times, neurons, grid


def membrane_potential(pattern: SpikePattern, w: np.ndarray,
                       model: TempotronModel, t: float) -> float:
    """V(t) for one weight row; sums kernels over all spikes at or before t."""
    times, neurons = pattern.as_arrays()
    k = _kernels.kernel_sums(times, neurons, model.n_afferents, t,
                             model.tau_m, model.tau_s, model.kernel_v0)
    return float(np.dot(w, k))


def peak_potentials(model: TempotronModel, pattern: SpikePattern,
                    _cache=None):
    """Peak potential and its time for every class neuron."""
    if _cache is None:
        times, neurons, grid = _pattern_arrays(pattern, model)
    else:
        times, neurons, grid = _cache
    return _kernels.peak_potential(times, neurons, model.weights, grid,
                                   model.tau_m, model.tau_s, model.kernel_v0)


def train_tempotron(data, model: TempotronModel, epochs: int = 200,
                    seed: int = 0) -> TempotronModel:
    if not data:
        raise TrainingError("empty training set")
    labels = {label for _, label in data}
    if len(labels) < 2:
        raise TrainingError("need at least 2 classes")
    unknown = labels - set(model.class_labels)
    if unknown:
        raise TrainingError("labels %r not in model" % sorted(unknown))
    index = {lab: i for i, lab in enumerate(model.class_labels)}
    caches = [_pattern_arrays(p, model) for p, _ in data]
    targets = [index[label] for _, label in data]

    weights = model.weights.copy()
    theta = model.v_threshold
    lam = model.learn_rate
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(len(data))
        for row in order:
            times, neurons, grid = caches[row]
            v, t_max = _kernels.peak_potential(
                times, neurons, weights, grid,
                model.tau_m, model.tau_s, model.kernel_v0)
            target = targets[row]
            for c in range(model.n_classes):
                if c == target and v[c] < theta:
                    weights[c] += lam * _kernels.kernel_sums(
                        times, neurons, model.n_afferents, t_max[c],
                        model.tau_m, model.tau_s, model.kernel_v0)
                elif c != target and v[c] >= theta:
                    weights[c] -= lam * _kernels.kernel_sums(
                        times, neurons, model.n_afferents, t_max[c],
                        model.tau_m, model.tau_s, model.kernel_v0)
    meta = dict(model.train_meta)
    meta.update({"epochs": epochs, "seed": seed})
    return replace(model, weights=weights, train_meta=meta)


def classify(model: TempotronModel, pattern: SpikePattern):
    """Threshold-crossing neurons compete first; fallback is peak argmax."""
    v, _ = peak_potentials(model, pattern)
    crossing = v >= model.v_threshold
    if np.any(crossing):
        scores = np.where(crossing, v, -np.inf)
    else:
        scores = v
    return model.class_labels[int(np.argmax(scores))]


def accuracy(model: TempotronModel, data) -> float:
    if not data:
        return 0.0
    hits = sum(1 for p, label in data if classify(model, p) == label)
    return 100.0 * hits / len(data)


def save_model(model: TempotronModel) -> str:
    out = io.StringIO()
    out.write(MODEL_MAGIC + "\n")
    out.write("n_classes=%d\n" % model.n_classes)
    out.write("n_afferents=%d\n" % model.n_afferents)
    out.write("labels=%s\n" % ",".join(str(l) for l in model.class_labels))
    for name in ("tau_m", "tau_s", "v_threshold", "v_rest",
                 "learn_rate", "grid_step"):
        out.write("%s=%r\n" % (name, getattr(model, name)))
    for key in sorted(model.train_meta):
        out.write("meta.%s=%r\n" % (key, model.train_meta[key]))
    for c in range(model.n_classes):
        out.write("w=%s\n" % " ".join(repr(float(v)) for v in model.weights[c]))
    return out.getvalue()


def load_model(text: str) -> TempotronModel:
    lines = text.strip().splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ParseError("not a tempotron model file")
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
        n_afferents = int(fields["n_afferents"])
        labels = tuple(fields["labels"].split(","))
    except KeyError as exc:
        raise ParseError("missing model field %s" % exc)
    meta = {k[5:]: ast.literal_eval(v) for k, v in fields.items()
            if k.startswith("meta.")}
    W = np.stack(weights)
    if W.shape != (n_classes, n_afferents):
        raise ParseError("model dimensions inconsistent")
    return TempotronModel(
        weights=W, class_labels=labels,
        tau_m=float(fields["tau_m"]), tau_s=float(fields["tau_s"]),
        v_threshold=float(fields["v_threshold"]), v_rest=float(fields["v_rest"]),
        learn_rate=float(fields["learn_rate"]),
        grid_step=float(fields["grid_step"]), train_meta=meta)
