"""Experiment harness: manifests, synthetic corpora, end-to-end runs, stats.

The synthetic corpus stands in for licensed speech/sound datasets.  Its four
default classes share two always-on carriers (so every class emits the same
per-channel spike *counts* under single-neuron latency coding) but differ in
the amplitude trajectory of each carrier (ramp vs steady).  Collapsing to
per-neuron rates (V1 + single-neuron codes) therefore destroys the class
information, while population codes, which bin the within-window intensity
spatially, keep it.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from . import encoders, svm, tempotron, vectorizers
from .errors import ConfigurationError, IngestionError, ParseError
from .frontend import (AudioClip, FilterbankSpec, Spectrogram, analyze,
                       default_filterbank_spec, load_wav,
                       DEFAULT_FRAME_LENGTH, DEFAULT_FRAME_STRIDE)

DEFAULT_ARCHETYPES = ("ramp-low", "ramp-high", "ramp-both", "steady")
EXTRA_ARCHETYPES = ("up-chirp", "down-chirp", "low-high", "high-low")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str  # "train" or "test"


@dataclass(frozen=True)
class Manifest:
    entries: tuple
    root: str = "."

    def split(self, which: str):
        return [e for e in self.entries if e.split == which]

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else Path(self.root) / p

    def to_csv(self) -> str:
        lines = ["# path,label,split"]
        lines += ["%s,%s,%s" % (e.path, e.label, e.split) for e in self.entries]
        return "\n".join(lines) + "\n"


def load_manifest(path) -> Manifest:
    """CSV rows `path,label,split`; `#` comments allowed; file order kept."""
    path = Path(path)
    if not path.exists():
        raise IngestionError("missing manifest: %s" % path)
    entries = []
    for ln, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3 or not all(parts):
            raise ParseError("%s line %d: expected path,label,split" % (path, ln))
        if parts[2] not in ("train", "test"):
            raise ParseError("%s line %d: split must be train or test" % (path, ln))
        entries.append(ManifestEntry(*parts))
    manifest = Manifest(entries=tuple(entries), root=str(path.parent))
    missing = [str(manifest.resolve(e)) for e in entries
               if not manifest.resolve(e).exists()]
    if missing:
        raise IngestionError("manifest references missing files: %s"
                             % ", ".join(missing))
    return manifest


@dataclass(frozen=True)
class SyntheticSpec:
    n_classes: int = 4
    clips_per_class: int = 40
    sample_rate: float = 16000.0
    duration_range: tuple = (0.49, 0.51)
    archetypes: tuple = DEFAULT_ARCHETYPES
    noise_level: float = 0.006
    seed: int = 42

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigurationError("n_classes must be >= 2")
        if self.n_classes > len(self.archetypes):
            raise ConfigurationError("need one archetype per class")
        if self.clips_per_class < 2:
            raise ConfigurationError("clips_per_class must be >= 2")


def _archetype_signal(name: str, duration: float, sample_rate: float) -> np.ndarray:
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    f_low, f_high = 300.0, 4000.0
    if name in ("ramp-low", "ramp-high", "ramp-both", "steady"):
        # two always-on carriers; classes differ only in amplitude trajectory,
        # so per-channel spike counts match while intensity histograms differ
        ramp = 0.15 + 0.8 * t / duration
        steady = np.full(n, 0.55)
        a_low = ramp if name in ("ramp-low", "ramp-both") else steady
        a_high = ramp if name in ("ramp-high", "ramp-both") else steady
        sig = a_low * np.sin(2 * np.pi * 600.0 * t)
        sig += a_high * np.sin(2 * np.pi * 2400.0 * t)
        return 0.45 * sig / 0.9  # _generate rescales by 0.9; net peak <= 0.95
    if name in ("up-chirp", "down-chirp"):
        # log sweep; the down-chirp is the exact time reversal, so both share
        # one long-run per-channel energy profile
        k = np.log(f_high / f_low) / duration
        phase = 2 * np.pi * f_low * (np.exp(k * t) - 1.0) / k
        sig = np.sin(phase)
        if name == "down-chirp":
            sig = sig[::-1]
        return sig
    if name in ("low-high", "high-low"):
        f_a, f_b = 500.0, 3000.0
        if name == "high-low":
            f_a, f_b = f_b, f_a
        seg = n // 4
        freqs = np.empty(n)
        for s in range(4):
            hi = n if s == 3 else (s + 1) * seg
            freqs[s * seg:hi] = f_a if s % 2 == 0 else f_b
        phase = 2 * np.pi * np.cumsum(freqs) / sample_rate
        return np.sin(phase)
    raise ConfigurationError("unknown archetype %r" % name)


def generate_synthetic(spec: SyntheticSpec, out_dir=None):
    """Deterministic corpus from the seed; stratified 50/50 train/test split.

    Returns (clips, manifest) where clips maps manifest paths to AudioClips.
    If out_dir is given, int16 WAVs and a manifest.csv are written there.
    """
    rng = np.random.default_rng(spec.seed)
    clips = {}
    entries = []
    half = spec.clips_per_class // 2
    for c in range(spec.n_classes):
        label = "class%d" % c
        for i in range(spec.clips_per_class):
            lo, hi = spec.duration_range
            duration = rng.uniform(lo, hi)
            sig = _archetype_signal(spec.archetypes[c], duration, spec.sample_rate)
            sig = 0.9 * sig + spec.noise_level * rng.standard_normal(len(sig))
            sig = np.clip(sig, -1.0, 1.0)
            name = "%s_%03d.wav" % (label, i)
            split = "train" if i < half else "test"
            clips[name] = AudioClip(samples=sig, sample_rate=spec.sample_rate,
                                    id=name)
            entries.append(ManifestEntry(path=name, label=label, split=split))
    manifest = Manifest(entries=tuple(entries),
                        root=str(out_dir) if out_dir else ".")
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, clip in clips.items():
            pcm = np.round(clip.samples * 32767.0).astype(np.int16)
            wavfile.write(out_dir / name, int(spec.sample_rate), pcm)
        (out_dir / "manifest.csv").write_text(manifest.to_csv())
    return clips, manifest


@dataclass(frozen=True)
class Metrics:
    train_accuracy: float
    test_accuracy: float
    confusion: np.ndarray  # (n_classes, n_classes) test counts, rows = truth
    class_labels: tuple
    wall_time: float
    scheme: str = ""
    classifier: str = ""
    vector_scheme: str = ""
    vector_length: int = 0


@dataclass(frozen=True)
class SpikeStats:
    total_rate: float  # spikes/s summed over neurons
    per_neuron_rate: float
    scheme: str
    n_neurons: int


def _encode_entry(args):
    clip, spec, frame_length, frame_stride, encoder_cfg = args
    fb = spec if spec is not None else default_filterbank_spec(clip.sample_rate)
    spect = analyze(clip, fb, frame_length, frame_stride)
    return encoders.encode(spect, encoder_cfg)


def encode_corpus(dataset, encoder_cfg, filterbank_spec=None,
                  frame_length=DEFAULT_FRAME_LENGTH,
                  frame_stride=DEFAULT_FRAME_STRIDE, jobs: int = 1):
    """dataset: list of (AudioClip, label, split) -> list of patterns (aligned)."""
    work = [(clip, filterbank_spec, frame_length, frame_stride, encoder_cfg)
            for clip, _, _ in dataset]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_encode_entry, work))
    return [_encode_entry(w) for w in work]


def load_dataset(manifest: Manifest, clips=None):
    """Materialize (AudioClip, label, split) rows in manifest order."""
    out = []
    for e in manifest.entries:
        if clips is not None and e.path in clips:
            clip = clips[e.path]
        else:
            clip = load_wav(manifest.resolve(e), clip_id=e.path)
        out.append((clip, e.label, e.split))
    return out


def confusion_matrix(truth, predicted, class_labels) -> np.ndarray:
    index = {lab: i for i, lab in enumerate(class_labels)}
    m = np.zeros((len(class_labels), len(class_labels)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        m[index[t], index[p]] += 1
    return m


def run_experiment(manifest: Manifest, encoder_cfg, classifier: str = "svm",
                   vector_scheme: str = vectorizers.V1, seed: int = 0,
                   clips=None, filterbank_spec: FilterbankSpec | None = None,
                   frame_length: float = DEFAULT_FRAME_LENGTH,
                   frame_stride: float = DEFAULT_FRAME_STRIDE,
                   svm_lambda: float = 1e-4, svm_epochs: int = 50,
                   tempotron_epochs: int = 200,
                   tempotron_learn_rate: float = tempotron.DEFAULT_LEARN_RATE,
                   jobs: int = 1, patterns=None) -> Metrics:
    """Train on the train split only, evaluate both splits."""
    if isinstance(encoder_cfg, str):
        encoder_cfg = encoders.default_config(encoder_cfg, frame_stride)
    dataset = load_dataset(manifest, clips)
    started = time.perf_counter()
    if patterns is None:
        patterns = encode_corpus(dataset, encoder_cfg, filterbank_spec,
                                 frame_length, frame_stride, jobs)
    rows = [(p, label, split) for p, (_, label, split) in zip(patterns, dataset)]
    train = [(p, lab) for p, lab, s in rows if s == "train"]
    test = [(p, lab) for p, lab, s in rows if s == "test"]
    if not train or not test:
        raise ConfigurationError("need non-empty train and test splits")
    scheme = train[0][0].scheme

    if classifier == "svm":
        if vector_scheme == vectorizers.V1:
            mean_duration = float(np.mean([p.duration for p, _ in train]))
            vcfg = vectorizers.VectorizerConfig(scheme=vectorizers.V1,
                                                mean_duration=mean_duration)
            meta = {"mean_duration": mean_duration}
        else:
            n_t = int(round(np.mean([p.duration / frame_stride for p, _ in train])))
            vcfg = vectorizers.VectorizerConfig(scheme=vectorizers.V2,
                                                n_time_bins=n_t)
            meta = {"n_time_bins": n_t}
        train_vec = [(vectorizers.vectorize(p, vcfg), lab) for p, lab in train]
        test_vec = [(vectorizers.vectorize(p, vcfg), lab) for p, lab in test]
        model = svm.train_ova_svm(train_vec, lam=svm_lambda, epochs=svm_epochs,
                                  seed=seed, train_meta=meta)
        train_acc = svm.accuracy(model, train_vec)
        test_acc = svm.accuracy(model, test_vec)
        predicted = [svm.predict(model, v) for v, _ in test_vec]
        labels = model.class_labels
        vec_len = train_vec[0][0].length
    elif classifier == "tempotron":
        labels = tuple(sorted({lab for _, lab in train}))
        model = tempotron.init_model(train[0][0].n_neurons, labels, seed=seed,
                                     learn_rate=tempotron_learn_rate)
        model = tempotron.train_tempotron(train, model,
                                          epochs=tempotron_epochs, seed=seed)
        train_acc = tempotron.accuracy(model, train)
        test_acc = tempotron.accuracy(model, test)
        predicted = [tempotron.classify(model, p) for p, _ in test]
        vector_scheme = ""
        vec_len = train[0][0].n_neurons
    else:
        raise ConfigurationError("classifier must be svm or tempotron")

    confusion = confusion_matrix([lab for _, lab in test], predicted, labels)
    return Metrics(train_accuracy=train_acc, test_accuracy=test_acc,
                   confusion=confusion, class_labels=labels,
                   wall_time=time.perf_counter() - started, scheme=scheme,
                   classifier=classifier, vector_scheme=vector_scheme,
                   vector_length=vec_len)


def spike_rate_stats(patterns) -> SpikeStats:
    """Corpus-level spike rates: total spikes over total duration."""
    patterns = list(patterns)
    if not patterns:
        raise ConfigurationError("no patterns")
    schemes = {p.scheme for p in patterns}
    counts = {p.n_neurons for p in patterns}
    if len(schemes) > 1 or len(counts) > 1:
        raise ConfigurationError("patterns must share scheme and n_neurons")
    total_spikes = sum(p.total_spikes for p in patterns)
    total_duration = sum(p.duration for p in patterns)
    total_rate = total_spikes / total_duration if total_duration > 0 else 0.0
    n = counts.pop()
    return SpikeStats(total_rate=total_rate, per_neuron_rate=total_rate / n,
                      scheme=schemes.pop(), n_neurons=n)


def accuracy_table(metrics_list) -> str:
    """Accuracy CSV with rows per scheme, V1/V2 columns, 1 decimal place."""
    by_scheme: dict = {}
    for m in metrics_list:
        if m.classifier == "svm" and m.vector_scheme in (vectorizers.V1,
                                                         vectorizers.V2):
            by_scheme.setdefault(m.scheme, {})[m.vector_scheme] = m
    lines = ["scheme,vector_length_v1,train_v1,test_v1,"
             "vector_length_v2,train_v2,test_v2"]
    for scheme in encoders.ALL_SCHEMES:
        if scheme not in by_scheme:
            continue
        cells = [scheme]
        for vs in (vectorizers.V1, vectorizers.V2):
            m = by_scheme[scheme].get(vs)
            if m is None:
                cells += ["", "", ""]
            else:
                cells += [str(m.vector_length), "%.1f" % m.train_accuracy,
                          "%.1f" % m.test_accuracy]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _metrics_dict(m: Metrics) -> dict:
    # wall_time is deliberately not serialized so reruns are byte-identical
    return {
        "scheme": m.scheme,
        "classifier": m.classifier,
        "vector_scheme": m.vector_scheme,
        "vector_length": m.vector_length,
        "train_accuracy": round(m.train_accuracy, 6),
        "test_accuracy": round(m.test_accuracy, 6),
        "class_labels": list(m.class_labels),
        "confusion": m.confusion.tolist(),
    }


def export_report(metrics_list, stats_list, path, config: dict | None = None):
    """JSON report + accuracy CSV next to it; re-export is byte-identical."""
    import numpy
    import scipy
    path = Path(path)
    report = {
        "config": config or {},
        "metrics": [_metrics_dict(m) for m in metrics_list],
        "stats": [{"scheme": s.scheme, "n_neurons": s.n_neurons,
                   "total_rate": round(s.total_rate, 6),
                   "per_neuron_rate": round(s.per_neuron_rate, 6)}
                  for s in stats_list],
        "versions": {"spikecode": "0.1.0", "numpy": numpy.__version__,
                     "scipy": scipy.__version__},
    }
    _atomic_write(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    csv_path = path.with_suffix(".csv")
    _atomic_write(csv_path, accuracy_table(metrics_list))
    return path, csv_path


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)
