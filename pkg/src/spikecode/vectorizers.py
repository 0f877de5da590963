"""Flattening of 2-D spike patterns into fixed-length feature vectors.

Two schemes: V1 keeps only spatial information (duration-scaled spike counts
per neuron); V2 keeps spatial and temporal information (timing values on a
fixed neuron x time-bin grid, reshaped neuron-major).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ParseError, VectorizationError
from .encoders import SpikePattern

V1 = "v1"
V2 = "v2"

# V2 sentinel: 0 means "no spike"; a spike at bin start maps to 1 and a
# spike at bin end is floored here so it stays distinguishable from silence
V2_MIN_VALUE = 1e-6


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    scheme: str
    clip_id: str = ""

    @property
    def length(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class VectorizerConfig:
    scheme: str = V1
    n_time_bins: int | None = None  # V2 only
    mean_duration: float | None = None  # V1 only, a training-split statistic

    def __post_init__(self):
        if self.scheme not in (V1, V2):
            raise ConfigurationError("vectorizer scheme must be v1 or v2")
        if self.scheme == V2 and (self.n_time_bins is None or self.n_time_bins < 1):
            raise ConfigurationError("V2 needs n_time_bins >= 1")
        if self.scheme == V1 and self.mean_duration is not None and self.mean_duration <= 0:
            raise ConfigurationError("mean_duration must be positive")


def vectorize_rate(p: SpikePattern, cfg: VectorizerConfig) -> FeatureVector:
    """V1: per-neuron spike counts scaled by mean_duration / duration."""
    if cfg.scheme != V1 or cfg.mean_duration is None:
        raise ConfigurationError("vectorize_rate needs a V1 config with mean_duration")
    if p.duration <= 0:
        raise VectorizationError("pattern duration must be positive")
    counts = p.spike_counts().astype(np.float64)
    return FeatureVector(values=counts * (cfg.mean_duration / p.duration),
                         scheme=V1, clip_id=p.clip_id)


def vectorize_timing(p: SpikePattern, cfg: VectorizerConfig) -> FeatureVector:
    """V2: first-spike timing per (neuron, time bin), neuron-major reshape.

    Bin b of neuron n lands at index n * N_T + b.  A cell holds
    (bin_end - t_first) / bin_width clamped into [V2_MIN_VALUE, 1], so
    earlier spikes get larger values and 0 unambiguously means no spike.
    """
    if cfg.scheme != V2:
        raise ConfigurationError("vectorize_timing needs a V2 config")
    n_t = cfg.n_time_bins
    width = p.duration / n_t
    grid = np.zeros((p.n_neurons, n_t))
    for tr in p.trains:
        if not len(tr):
            continue
        bins = np.minimum((tr.times / width).astype(np.int64), n_t - 1)
        # times are sorted, so the first spike seen per bin wins
        first = np.full(n_t, -1.0)
        seen = np.zeros(n_t, dtype=bool)
        for t, b in zip(tr.times, bins):
            if not seen[b]:
                seen[b] = True
                first[b] = t
        ends = (np.arange(n_t) + 1) * width
        vals = np.clip((ends - first) / width, V2_MIN_VALUE, 1.0)
        grid[tr.neuron_id, seen] = vals[seen]
    return FeatureVector(values=grid.reshape(-1), scheme=V2, clip_id=p.clip_id)


def vectorize(p: SpikePattern, cfg: VectorizerConfig) -> FeatureVector:
    if cfg.scheme == V1:
        return vectorize_rate(p, cfg)
    return vectorize_timing(p, cfg)


def dataset_to_csv(rows) -> str:
    """Rows of (FeatureVector, label) as one CSV with a fixed header."""
    rows = list(rows)
    if not rows:
        raise VectorizationError("empty dataset")
    length = rows[0][0].length
    out = io.StringIO()
    out.write("clip_id,label," + ",".join("v_%d" % i for i in range(length)) + "\n")
    for vec, label in rows:
        out.write("%s,%s," % (vec.clip_id, label))
        out.write(",".join("%.9g" % v for v in vec.values))
        out.write("\n")
    return out.getvalue()


def dataset_from_csv(text: str, scheme: str = V1):
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("clip_id,label,"):
        raise ParseError("bad feature CSV header")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) < 3:
            raise ParseError("line %d: too few fields" % ln)
        vec = FeatureVector(values=np.array([float(v) for v in parts[2:]]),
                            scheme=scheme, clip_id=parts[0])
        rows.append((vec, parts[1]))
    return rows
