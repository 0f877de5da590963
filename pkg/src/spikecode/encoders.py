"""Five spike encoding schemes over log-energy spectrograms.

Single-neuron codes: latency (first-spike time within each encoding window)
and phase (latency spikes snapped to peaks of a sub-threshold membrane
oscillation, phase-shifted per channel).  Population codes: latency/phase
routed through overlapping Gaussian receptive fields, and threshold coding
of onset/offset crossing events.

Neuron id layout is channel-major: population neuron j of channel c is
c * n_fields + j; threshold neurons are c * 2K + 2k (onset) and
c * 2K + 2k + 1 (offset).  This fixed layout makes vectorization order
reproducible.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, EncodingError, ParseError
from .frontend import Spectrogram

TWO_PI = 2.0 * math.pi

SCHEME_LATENCY = "latency"
SCHEME_PHASE = "phase"
SCHEME_POP_LATENCY = "pop-latency"
SCHEME_POP_PHASE = "pop-phase"
SCHEME_THRESHOLD = "threshold"
ALL_SCHEMES = (SCHEME_LATENCY, SCHEME_PHASE, SCHEME_POP_LATENCY,
               SCHEME_POP_PHASE, SCHEME_THRESHOLD)


@dataclass(frozen=True)
class SpikeTrain:
    neuron_id: int
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", t)
        if self.neuron_id < 0:
            raise EncodingError("neuron_id must be >= 0")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise EncodingError("spike times must be strictly increasing")

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class SpikePattern:
    trains: tuple  # of SpikeTrain, sorted by neuron_id
    n_neurons: int
    duration: float
    clip_id: str = ""
    scheme: str = SCHEME_LATENCY

    def __post_init__(self):
        trains = tuple(sorted(self.trains, key=lambda tr: tr.neuron_id))
        object.__setattr__(self, "trains", trains)
        if self.duration <= 0:
            raise EncodingError("pattern duration must be positive")
        ids = [tr.neuron_id for tr in trains]
        if len(set(ids)) != len(ids):
            raise EncodingError("duplicate neuron ids")
        if ids and max(ids) >= self.n_neurons:
            raise EncodingError("neuron_id beyond n_neurons")
        for tr in trains:
            if len(tr) and (tr.times[0] < 0 or tr.times[-1] > self.duration + 1e-12):
                raise EncodingError("spike time outside [0, duration]")

    @property
    def total_spikes(self) -> int:
        return sum(len(tr) for tr in self.trains)

    def spike_counts(self) -> np.ndarray:
        counts = np.zeros(self.n_neurons, dtype=np.int64)
        for tr in self.trains:
            counts[tr.neuron_id] = len(tr)
        return counts

    def as_arrays(self):
        """All spikes as (times, neuron_ids), sorted by time (stable)."""
        if self.total_spikes == 0:
            return np.empty(0), np.empty(0, dtype=np.int64)
        times = np.concatenate([tr.times for tr in self.trains])
        ids = np.concatenate([np.full(len(tr), tr.neuron_id, dtype=np.int64)
                              for tr in self.trains])
        order = np.argsort(times, kind="stable")
        return times[order], ids[order]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("neuron_id,time_s\n")
        for tr in self.trains:
            for t in tr.times:
                out.write("%d,%.9f\n" % (tr.neuron_id, t))
        return out.getvalue()

    def metadata(self) -> str:
        return ("scheme=%s\nn_neurons=%d\nduration=%r\nclip_id=%s\n"
                % (self.scheme, self.n_neurons, self.duration, self.clip_id))

    @classmethod
    def from_csv(cls, csv_text: str, metadata_text: str) -> "SpikePattern":
        meta = {}
        for line in metadata_text.strip().splitlines():
            if "=" not in line:
                raise ParseError("bad metadata line: %r" % line)
            key, _, value = line.partition("=")
            meta[key] = value
        lines = csv_text.strip().splitlines()
        if not lines or lines[0].strip() != "neuron_id,time_s":
            raise ParseError("bad spike CSV header")
        by_neuron: dict[int, list] = {}
        for ln, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError("line %d: expected 2 fields" % ln)
            by_neuron.setdefault(int(parts[0]), []).append(float(parts[1]))
        trains = tuple(SpikeTrain(nid, np.array(ts))
                       for nid, ts in sorted(by_neuron.items()))
        return cls(trains=trains, n_neurons=int(meta["n_neurons"]),
                   duration=float(meta["duration"]), clip_id=meta.get("clip_id", ""),
                   scheme=meta["scheme"])


@dataclass(frozen=True)
class LatencyConfig:
    rate_r: float = 100.0  # encoding windows per second; 1/frame_stride
    min_intensity_eps: float = 0.01

    def __post_init__(self):
        if self.rate_r <= 0:
            raise ConfigurationError("rate_r must be positive")
        if not (0.0 <= self.min_intensity_eps < 1.0):
            raise ConfigurationError("min_intensity_eps must be in [0, 1)")


@dataclass(frozen=True)
class PhaseConfig:
    base: LatencyConfig = field(default_factory=LatencyConfig)
    smo_freq: float = 200.0
    phase_step: float = TWO_PI / 20.0

    def __post_init__(self):
        if self.smo_freq <= 0:
            raise ConfigurationError("smo_freq must be positive")


@dataclass(frozen=True)
class PopulationConfig:
    base_scheme: str = SCHEME_LATENCY  # "latency" or "phase"
    base: LatencyConfig | PhaseConfig = field(default_factory=LatencyConfig)
    n_fields: int = 10
    sigma: float | None = None  # None -> window / (1.5 * (n_fields - 1))
    min_response_gamma: float = 0.1
    resnap_output: bool = False  # re-snap field spikes to the channel SMO

    def __post_init__(self):
        if self.base_scheme not in (SCHEME_LATENCY, SCHEME_PHASE):
            raise ConfigurationError("base_scheme must be latency or phase")
        if self.n_fields < 2:
            raise ConfigurationError("n_fields must be >= 2")
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigurationError("sigma must be positive")
        if self.base_scheme == SCHEME_PHASE and not isinstance(self.base, PhaseConfig):
            raise ConfigurationError("phase base_scheme needs a PhaseConfig base")

    @property
    def latency_base(self) -> LatencyConfig:
        return self.base.base if isinstance(self.base, PhaseConfig) else self.base

    def effective_sigma(self) -> float:
        if self.sigma is not None:
            return self.sigma
        window = 1.0 / self.latency_base.rate_r
        return window / (1.5 * (self.n_fields - 1))


def default_thresholds(k: int = 10) -> tuple:
    return tuple(0.05 + 0.1 * i for i in range(k))


@dataclass(frozen=True)
class ThresholdConfig:
    thresholds: tuple = field(default_factory=default_thresholds)

    def __post_init__(self):
        th = tuple(float(t) for t in self.thresholds)
        object.__setattr__(self, "thresholds", th)
        if not th:
            raise ConfigurationError("need at least one threshold")
        if any(not (0.0 < t < 1.0) for t in th):
            raise ConfigurationError("thresholds must lie in (0, 1)")
        if any(b <= a for a, b in zip(th, th[1:])):
            raise ConfigurationError("thresholds must be strictly increasing")

    @property
    def n_thresholds(self) -> int:
        return len(self.thresholds)


EncoderConfig = LatencyConfig | PhaseConfig | PopulationConfig | ThresholdConfig


def _check_row(row: np.ndarray):
    if row.size and (row.min() < 0.0 or row.max() > 1.0):
        raise EncodingError("normalized intensities must lie in [0, 1]")


def encode_latency(row, cfg: LatencyConfig, channel: int = 0) -> SpikeTrain:
    """First-spike latency code: window i fires at (i - x_i)/r, 1-based i."""
    row = np.asarray(row, dtype=np.float64)
    _check_row(row)
    i = np.arange(1, len(row) + 1, dtype=np.float64)
    mask = row >= cfg.min_intensity_eps
    times = (i[mask] - row[mask]) / cfg.rate_r
    return SpikeTrain(neuron_id=channel, times=times)


def _snap_to_peaks(t: np.ndarray, smo_freq: float, phase: float) -> np.ndarray:
    """Nearest peak of cos(2*pi*f*t + phase); ties resolve to the earlier peak."""
    shift = phase / TWO_PI
    a = t * smo_freq + shift
    k = np.floor(a)
    k = np.where(a - k > 0.5, k + 1.0, k)
    p = (k - shift) / smo_freq
    # a nearest peak before time zero moves forward to the first usable one;
    # rounding-level negatives clamp to zero instead
    while np.any(p < -1e-12):
        k = np.where(p < -1e-12, k + 1.0, k)
        p = (k - shift) / smo_freq
    return np.maximum(p, 0.0)


def smo_nearest_peak(t: float, smo_freq: float, phase: float = 0.0) -> float:
    if smo_freq <= 0:
        raise ConfigurationError("smo_freq must be positive")
    return float(_snap_to_peaks(np.array([t], dtype=np.float64), smo_freq, phase)[0])


def encode_phase(row, cfg: PhaseConfig, channel: int = 0) -> SpikeTrain:
    """Latency code snapped to the channel's SMO peaks; duplicates collapse."""
    base = encode_latency(row, cfg.base, channel)
    snapped = _snap_to_peaks(base.times, cfg.smo_freq, channel * cfg.phase_step)
    return SpikeTrain(neuron_id=channel, times=np.unique(snapped))


def receptive_field_response(t_in: float, mu: float, sigma: float) -> float:
    if sigma <= 0:
        raise ConfigurationError("sigma must be positive")
    d = (t_in - mu) / sigma
    return math.exp(-0.5 * d * d)


def field_centers(n_fields: int, window: float) -> np.ndarray:
    """Receptive-field centers evenly spaced across one encoding window."""
    return np.linspace(0.0, window, n_fields)


def encode_population(row, cfg: PopulationConfig, channel: int = 0) -> list:
    """Population latency/phase code: n_fields trains for one channel."""
    row = np.asarray(row, dtype=np.float64)
    _check_row(row)
    base = cfg.latency_base
    r = base.rate_r
    window = 1.0 / r
    mu = field_centers(cfg.n_fields, window)
    sigma = cfg.effective_sigma()
    gamma = cfg.min_response_gamma

    i = np.arange(1, len(row) + 1, dtype=np.float64)
    mask = row >= base.min_intensity_eps
    idx = i[mask]
    prelim = (idx - row[mask]) / r
    if cfg.base_scheme == SCHEME_PHASE:
        prelim = _snap_to_peaks(prelim, cfg.base.smo_freq,
                                channel * cfg.base.phase_step)
    starts = (idx - 1.0) / r
    u = np.clip(prelim - starts, 0.0, window)

    # (n_windows, n_fields) Gaussian responses
    d = (u[:, None] - mu[None, :]) / sigma
    g = np.exp(-0.5 * d * d)
    active = g >= gamma
    spike_times = starts[:, None] + (1.0 - g) * window

    trains = []
    for j in range(cfg.n_fields):
        times = spike_times[active[:, j], j]
        if cfg.resnap_output and isinstance(cfg.base, PhaseConfig):
            times = np.unique(_snap_to_peaks(times, cfg.base.smo_freq,
                                             channel * cfg.base.phase_step))
        trains.append(SpikeTrain(neuron_id=channel * cfg.n_fields + j, times=times))
    return trains


def detect_crossings(row, theta: float, frame_stride: float):
    """Onset/offset crossing times of one threshold, linearly interpolated.

    Frame i (1-based) sits at time i * frame_stride.  Crossing predicates are
    (x_i < theta <= x_{i+1}) for onsets and (x_i >= theta > x_{i+1}) for
    offsets, so a frame exactly at theta counts as above.
    """
    row = np.asarray(row, dtype=np.float64)
    if not (0.0 < theta < 1.0):
        raise ConfigurationError("theta must lie in (0, 1)")
    onsets, offsets = [], []
    for i in range(len(row) - 1):
        a, b = row[i], row[i + 1]
        t_i = (i + 1) * frame_stride
        if a < theta <= b:
            onsets.append(t_i + frame_stride * (theta - a) / (b - a))
        elif a >= theta > b:
            offsets.append(t_i + frame_stride * (theta - a) / (b - a))
    return np.array(onsets), np.array(offsets)


def encode_threshold(row, cfg: ThresholdConfig, channel: int = 0,
                     frame_stride: float = 0.010) -> list:
    """Onset/offset event code: 2K trains for one channel."""
    row = np.asarray(row, dtype=np.float64)
    _check_row(row)
    k2 = 2 * cfg.n_thresholds
    trains = []
    for k, theta in enumerate(cfg.thresholds):
        onsets, offsets = detect_crossings(row, theta, frame_stride)
        trains.append(SpikeTrain(neuron_id=channel * k2 + 2 * k, times=onsets))
        trains.append(SpikeTrain(neuron_id=channel * k2 + 2 * k + 1, times=offsets))
    return trains


def scheme_of(cfg: EncoderConfig) -> str:
    if isinstance(cfg, ThresholdConfig):
        return SCHEME_THRESHOLD
    if isinstance(cfg, PopulationConfig):
        return (SCHEME_POP_PHASE if cfg.base_scheme == SCHEME_PHASE
                else SCHEME_POP_LATENCY)
    if isinstance(cfg, PhaseConfig):
        return SCHEME_PHASE
    if isinstance(cfg, LatencyConfig):
        return SCHEME_LATENCY
    raise ConfigurationError("unknown encoder config %r" % (cfg,))


def neurons_per_channel(cfg: EncoderConfig) -> int:
    if isinstance(cfg, ThresholdConfig):
        return 2 * cfg.n_thresholds
    if isinstance(cfg, PopulationConfig):
        return cfg.n_fields
    return 1


def default_config(scheme: str, frame_stride: float = 0.010, **kwargs) -> EncoderConfig:
    """Scheme defaults with rate_r tied to the frame stride."""
    rate = 1.0 / frame_stride
    lat = LatencyConfig(rate_r=rate)
    if scheme == SCHEME_LATENCY:
        return lat
    if scheme == SCHEME_PHASE:
        return PhaseConfig(base=lat, **kwargs)
    if scheme == SCHEME_POP_LATENCY:
        return PopulationConfig(base_scheme=SCHEME_LATENCY, base=lat, **kwargs)
    if scheme == SCHEME_POP_PHASE:
        return PopulationConfig(base_scheme=SCHEME_PHASE,
                                base=PhaseConfig(base=lat), **kwargs)
    if scheme == SCHEME_THRESHOLD:
        return ThresholdConfig(**kwargs)
    raise ConfigurationError("unknown scheme %r" % scheme)


def encode(spectrogram: Spectrogram, cfg: EncoderConfig) -> SpikePattern:
    """Encode every channel row, assembling the full spike pattern."""
    duration = spectrogram.duration
    n_neurons = spectrogram.n_channels * neurons_per_channel(cfg)
    trains = []
    for c in range(spectrogram.n_channels):
        row = spectrogram.values[c]
        if isinstance(cfg, LatencyConfig):
            trains.append(encode_latency(row, cfg, c))
        elif isinstance(cfg, PhaseConfig):
            trains.append(encode_phase(row, cfg, c))
        elif isinstance(cfg, PopulationConfig):
            trains.extend(encode_population(row, cfg, c))
        elif isinstance(cfg, ThresholdConfig):
            trains.extend(encode_threshold(row, cfg, c, spectrogram.frame_stride))
        else:
            raise ConfigurationError("unknown encoder config %r" % (cfg,))
    # phase snapping of the final window can overshoot the pattern end by up
    # to half an SMO period; those spikes are dropped
    clipped = []
    for tr in trains:
        times = tr.times
        if len(times) and times[-1] > duration:
            times = times[times <= duration]
        clipped.append(SpikeTrain(tr.neuron_id, times))
    return SpikePattern(trains=tuple(clipped), n_neurons=n_neurons,
                        duration=duration, clip_id=spectrogram.clip_id,
                        scheme=scheme_of(cfg))
