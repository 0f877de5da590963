"""Audio front end: WAV ingestion, constant-Q filterbank, log-energy spectrogram.

The analysis chain is: decode WAV -> 20-channel constant-Q bandpass filterbank
-> 20 ms / 10 ms framing -> per-frame log energy -> per-clip min-max
normalization into [0, 1].  Every stage is a pure function of its inputs.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps
from scipy.io import wavfile

from .errors import ConfigurationError, IngestionError, ParseError

DEFAULT_FRAME_LENGTH = 0.020
DEFAULT_FRAME_STRIDE = 0.010
LOG_ENERGY_FLOOR = 1e-10

# Each channel is a cascade of two identical second-order peaking sections.
# For that cascade the overall -3 dB bandwidth is center * c / Q_stage with
# c = sqrt(sqrt(2) - 1), so choosing Q_stage = q * c yields bandwidth
# center / q for the cascade.
_CASCADE_BW_FACTOR = math.sqrt(math.sqrt(2.0) - 1.0)


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray  # float64, amplitudes in [-1, 1]
    sample_rate: float
    id: str = ""

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigurationError("sample_rate must be positive")
        if len(self.samples) == 0:
            raise IngestionError("clip %r has no samples" % self.id)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FilterbankSpec:
    n_channels: int = 20
    f_low: float = 100.0
    f_high: float = 8000.0
    q_factor: float = 8.0

    def __post_init__(self):
        if self.n_channels < 1:
            raise ConfigurationError("n_channels must be >= 1")
        if not (0.0 < self.f_low < self.f_high):
            raise ConfigurationError("need 0 < f_low < f_high")
        if self.q_factor <= 0:
            raise ConfigurationError("q_factor must be positive")

    def center_frequencies(self) -> np.ndarray:
        """Log-spaced centers from f_low to f_high inclusive."""
        if self.n_channels == 1:
            return np.array([self.f_low])
        c = np.arange(self.n_channels)
        return self.f_low * (self.f_high / self.f_low) ** (c / (self.n_channels - 1))


def default_filterbank_spec(sample_rate: float) -> FilterbankSpec:
    return FilterbankSpec(f_high=min(8000.0, 0.45 * sample_rate))


@dataclass(frozen=True)
class FilterCoefficients:
    sos: np.ndarray  # (n_channels, 2, 6) second-order sections
    centers: np.ndarray  # (n_channels,) Hz
    bandwidths: np.ndarray  # (n_channels,) design -3 dB bandwidths, Hz
    sample_rate: float

    @property
    def n_channels(self) -> int:
        return self.sos.shape[0]


@dataclass(frozen=True)
class Spectrogram:
    values: np.ndarray  # (n_channels, n_frames), all in [0, 1]
    frame_stride: float = DEFAULT_FRAME_STRIDE
    frame_length: float = DEFAULT_FRAME_LENGTH
    clip_id: str = ""

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        """Pattern duration seen by the encoders: n_frames * frame_stride."""
        return self.n_frames * self.frame_stride

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("channel,frame,value\n")
        for c in range(self.n_channels):
            for f in range(self.n_frames):
                out.write("%d,%d,%.9g\n" % (c, f, self.values[c, f]))
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str, frame_stride: float = DEFAULT_FRAME_STRIDE,
                 frame_length: float = DEFAULT_FRAME_LENGTH, clip_id: str = "") -> "Spectrogram":
        lines = text.strip().splitlines()
        if not lines or lines[0].strip() != "channel,frame,value":
            raise ParseError("bad spectrogram CSV header")
        triples = []
        for ln, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError("line %d: expected 3 fields" % ln)
            triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
        n_ch = max(t[0] for t in triples) + 1
        n_fr = max(t[1] for t in triples) + 1
        values = np.zeros((n_ch, n_fr))
        for c, f, v in triples:
            values[c, f] = v
        return cls(values=values, frame_stride=frame_stride,
                   frame_length=frame_length, clip_id=clip_id)


def load_wav(path, clip_id: str | None = None) -> AudioClip:
    """Read a RIFF WAV (int 8/16/24/32 or float32 PCM, mono or stereo)."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise IngestionError("missing WAV file: %s" % path)
    except Exception as exc:
        raise IngestionError("cannot decode %s: %s" % (path, exc))
    dtype = data.dtype
    samples = data.astype(np.float64)
    if data.ndim > 1:
        samples = samples.mean(axis=1)
    if dtype == np.uint8:
        samples = (samples - 128.0) / 128.0
    elif dtype == np.int16:
        samples = samples / 32768.0
    elif dtype == np.int32:
        # 24-bit PCM arrives left-justified in int32, so one scale covers both
        samples = samples / 2147483648.0
    samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(samples=samples, sample_rate=float(rate),
                     id=clip_id if clip_id is not None else str(path))


def design_filterbank(spec: FilterbankSpec, sample_rate: float) -> FilterCoefficients:
    """Design the per-channel bandpass cascades for one sample rate."""
    nyquist = sample_rate / 2.0
    if spec.f_high > nyquist:
        raise ConfigurationError(
            "f_high=%g above Nyquist %g" % (spec.f_high, nyquist))
    centers = spec.center_frequencies()
    q_stage = spec.q_factor * _CASCADE_BW_FACTOR
    sos = np.empty((spec.n_channels, 2, 6))
    for c, fc in enumerate(centers):
        b, a = sps.iirpeak(fc, q_stage, fs=sample_rate)
        stage = np.concatenate([b, a])
        sos[c, 0] = stage
        sos[c, 1] = stage
    return FilterCoefficients(sos=sos, centers=centers,
                              bandwidths=centers / spec.q_factor,
                              sample_rate=sample_rate)


def frame_count(n_samples: int, sample_rate: float,
                frame_length: float = DEFAULT_FRAME_LENGTH,
                frame_stride: float = DEFAULT_FRAME_STRIDE) -> int:
    """floor((duration - frame_length)/frame_stride) + 1, computed in samples."""
    fl = int(round(frame_length * sample_rate))
    st = int(round(frame_stride * sample_rate))
    if n_samples < fl:
        raise IngestionError("clip shorter than one frame")
    return (n_samples - fl) // st + 1


def analyze(clip: AudioClip, spec: FilterbankSpec,
            frame_length: float = DEFAULT_FRAME_LENGTH,
            frame_stride: float = DEFAULT_FRAME_STRIDE,
            coeffs: FilterCoefficients | None = None) -> Spectrogram:
    """Filterbank + framing + log energy + per-clip min-max normalization."""
    if coeffs is None:
        coeffs = design_filterbank(spec, clip.sample_rate)
    fl = int(round(frame_length * clip.sample_rate))
    st = int(round(frame_stride * clip.sample_rate))
    n_frames = frame_count(len(clip.samples), clip.sample_rate,
                           frame_length, frame_stride)
    energies = np.empty((coeffs.n_channels, n_frames))
    x = clip.samples
    for c in range(coeffs.n_channels):
        y = sps.sosfilt(coeffs.sos[c], x)
        windows = np.lib.stride_tricks.sliding_window_view(y, fl)[::st][:n_frames]
        energies[c] = np.log(LOG_ENERGY_FLOOR + np.sum(windows * windows, axis=1))
    lo = energies.min()
    hi = energies.max()
    if hi > lo:
        values = (energies - lo) / (hi - lo)
    else:
        values = np.zeros_like(energies)
    return Spectrogram(values=values, frame_stride=frame_stride,
                       frame_length=frame_length, clip_id=clip.id)
