"""Command line surface: encode, run, synth, stats.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Flags override config-file values; all randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import encoders, harness, vectorizers
from .errors import ConfigurationError, ParseError, SpikecodeError
from .frontend import (FilterbankSpec, DEFAULT_FRAME_LENGTH,
                       DEFAULT_FRAME_STRIDE, load_wav)

KNOWN_SECTIONS = {"frontend", "encoder", "vectorizer", "classifier", "seed"}
KNOWN_KEYS = {
    "frontend": {"n_channels", "f_low", "f_high", "q_factor",
                 "frame_length", "frame_stride"},
    "encoder": {"scheme", "schemes", "rate_r", "min_intensity_eps", "smo_freq",
                "phase_step", "n_fields", "sigma", "min_response_gamma",
                "resnap_output", "thresholds"},
    "vectorizer": {"schemes"},
    "classifier": {"kinds", "svm_lambda", "svm_epochs", "tempotron_epochs",
                   "tempotron_learn_rate"},
}


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError("missing config file: %s" % path)
    except json.JSONDecodeError as exc:
        raise ConfigurationError("config is not valid JSON: %s" % exc)
    if not isinstance(cfg, dict):
        raise ConfigurationError("config root must be an object")
    unknown = set(cfg) - KNOWN_SECTIONS
    if unknown:
        raise ConfigurationError("unknown config key(s): %s"
                                 % ", ".join(sorted(unknown)))
    for section, keys in KNOWN_KEYS.items():
        extra = set(cfg.get(section, {})) - keys
        if extra:
            raise ConfigurationError("unknown %s config key(s): %s"
                                     % (section, ", ".join(sorted(extra))))
    return cfg


def encoder_config(scheme: str, cfg: dict, frame_stride: float):
    enc = dict(cfg.get("encoder", {}))
    enc.pop("scheme", None)
    enc.pop("schemes", None)
    rate = enc.pop("rate_r", 1.0 / frame_stride)
    eps = enc.pop("min_intensity_eps", 0.01)
    lat = encoders.LatencyConfig(rate_r=rate, min_intensity_eps=eps)
    if scheme == encoders.SCHEME_LATENCY:
        return lat
    if scheme == encoders.SCHEME_PHASE:
        return encoders.PhaseConfig(
            base=lat, smo_freq=enc.get("smo_freq", 200.0),
            phase_step=enc.get("phase_step", encoders.TWO_PI / 20.0))
    if scheme in (encoders.SCHEME_POP_LATENCY, encoders.SCHEME_POP_PHASE):
        if scheme == encoders.SCHEME_POP_PHASE:
            base_scheme = encoders.SCHEME_PHASE
            base = encoders.PhaseConfig(
                base=lat, smo_freq=enc.get("smo_freq", 200.0),
                phase_step=enc.get("phase_step", encoders.TWO_PI / 20.0))
        else:
            base_scheme, base = encoders.SCHEME_LATENCY, lat
        return encoders.PopulationConfig(
            base_scheme=base_scheme, base=base,
            n_fields=enc.get("n_fields", 10), sigma=enc.get("sigma"),
            min_response_gamma=enc.get("min_response_gamma", 0.1),
            resnap_output=enc.get("resnap_output", False))
    if scheme == encoders.SCHEME_THRESHOLD:
        thresholds = enc.get("thresholds")
        if thresholds is not None:
            return encoders.ThresholdConfig(thresholds=tuple(thresholds))
        return encoders.ThresholdConfig()
    raise ConfigurationError("unknown scheme %r" % scheme)


def frontend_params(cfg: dict):
    fr = cfg.get("frontend", {})
    frame_length = fr.get("frame_length", DEFAULT_FRAME_LENGTH)
    frame_stride = fr.get("frame_stride", DEFAULT_FRAME_STRIDE)
    spec = None
    if {"n_channels", "f_low", "f_high", "q_factor"} & set(fr):
        spec = FilterbankSpec(n_channels=fr.get("n_channels", 20),
                              f_low=fr.get("f_low", 100.0),
                              f_high=fr.get("f_high", 8000.0),
                              q_factor=fr.get("q_factor", 8.0))
    return spec, frame_length, frame_stride


def cmd_encode(args) -> int:
    cfg = load_config(args.config)
    spec, frame_length, frame_stride = frontend_params(cfg)
    scheme = args.scheme or cfg.get("encoder", {}).get(
        "scheme", encoders.SCHEME_LATENCY)
    enc_cfg = encoder_config(scheme, cfg, frame_stride)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    source = Path(args.input)
    if source.suffix == ".csv":
        manifest = harness.load_manifest(source)
        dataset = harness.load_dataset(manifest)
    else:
        dataset = [(load_wav(source, clip_id=source.name), "", "train")]
    patterns = harness.encode_corpus(dataset, enc_cfg, spec, frame_length,
                                     frame_stride, jobs=args.jobs)
    for pattern in patterns:
        stem = Path(pattern.clip_id).stem
        harness._atomic_write(out_dir / (stem + ".spikes.csv"), pattern.to_csv())
        harness._atomic_write(out_dir / (stem + ".meta.txt"), pattern.metadata())
    print("encoded %d clip(s) to %s" % (len(patterns), out_dir))
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    spec, frame_length, frame_stride = frontend_params(cfg)
    schemes = args.scheme or cfg.get("encoder", {}).get(
        "schemes", list(encoders.ALL_SCHEMES))
    vec_schemes = cfg.get("vectorizer", {}).get(
        "schemes", [vectorizers.V1, vectorizers.V2])
    cls_cfg = cfg.get("classifier", {})
    classifiers = [args.classifier] if args.classifier else cls_cfg.get(
        "kinds", ["svm"])
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)

    manifest = harness.load_manifest(args.manifest)
    dataset = harness.load_dataset(manifest)
    metrics_list, stats_list = [], []
    for scheme in schemes:
        enc_cfg = encoder_config(scheme, cfg, frame_stride)
        patterns = harness.encode_corpus(dataset, enc_cfg, spec, frame_length,
                                         frame_stride, jobs=args.jobs)
        stats_list.append(harness.spike_rate_stats(patterns))
        for classifier in classifiers:
            vss = vec_schemes if classifier == "svm" else [""]
            for vs in vss:
                metrics_list.append(harness.run_experiment(
                    manifest, enc_cfg, classifier=classifier, vector_scheme=vs,
                    seed=seed, filterbank_spec=spec, frame_length=frame_length,
                    frame_stride=frame_stride,
                    svm_lambda=cls_cfg.get("svm_lambda", 1e-4),
                    svm_epochs=cls_cfg.get("svm_epochs", 50),
                    tempotron_epochs=cls_cfg.get("tempotron_epochs", 200),
                    tempotron_learn_rate=cls_cfg.get("tempotron_learn_rate",
                                                     1e-3),
                    patterns=patterns))
    provenance = dict(cfg)
    provenance["seed"] = seed
    provenance["schemes"] = list(schemes)
    provenance["classifiers"] = list(classifiers)
    report_path, csv_path = harness.export_report(
        metrics_list, stats_list, Path(args.out), config=provenance)
    print("wrote %s and %s" % (report_path, csv_path))
    return 0


def cmd_synth(args) -> int:
    spec = harness.SyntheticSpec(
        n_classes=args.classes, clips_per_class=args.clips_per_class,
        sample_rate=args.sample_rate, noise_level=args.noise,
        seed=args.seed if args.seed is not None else 42)
    clips, manifest = harness.generate_synthetic(spec, out_dir=args.out)
    print("wrote %d WAVs and manifest.csv to %s" % (len(clips), args.out))
    return 0


def cmd_stats(args) -> int:
    src = Path(args.input)
    files = sorted(src.glob("*.spikes.csv"))
    if not files:
        raise ConfigurationError("no *.spikes.csv files in %s" % src)
    patterns = []
    for f in files:
        meta = f.with_name(f.name.replace(".spikes.csv", ".meta.txt"))
        if not meta.exists():
            raise ConfigurationError("missing metadata sidecar for %s" % f)
        patterns.append(encoders.SpikePattern.from_csv(f.read_text(),
                                                       meta.read_text()))
    stats = harness.spike_rate_stats(patterns)
    if args.format == "json":
        print(json.dumps({"scheme": stats.scheme, "n_neurons": stats.n_neurons,
                          "total_rate": stats.total_rate,
                          "per_neuron_rate": stats.per_neuron_rate},
                         sort_keys=True))
    else:
        print("scheme,n_neurons,total_rate,per_neuron_rate")
        print("%s,%d,%.6g,%.6g" % (stats.scheme, stats.n_neurons,
                                   stats.total_rate, stats.per_neuron_rate))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikecode",
        description="Spike encodings of audio with SVM / Tempotron classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode WAV(s) into spike CSV files")
    enc.add_argument("input", help="a WAV file or a manifest CSV")
    enc.add_argument("--config")
    enc.add_argument("--scheme", choices=encoders.ALL_SCHEMES)
    enc.add_argument("--seed", type=int, default=None)
    enc.add_argument("--jobs", type=int, default=1)
    enc.add_argument("--out", required=True)
    enc.set_defaults(func=cmd_encode)

    run = sub.add_parser("run", help="run the full experiment sweep")
    run.add_argument("manifest")
    run.add_argument("--config")
    run.add_argument("--scheme", action="append", choices=encoders.ALL_SCHEMES)
    run.add_argument("--classifier", choices=["svm", "tempotron"])
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", required=True, help="report JSON path")
    run.set_defaults(func=cmd_run)

    synth = sub.add_parser("synth", help="generate the synthetic corpus")
    synth.add_argument("--classes", type=int, default=4)
    synth.add_argument("--clips-per-class", type=int, default=40)
    synth.add_argument("--sample-rate", type=float, default=16000.0)
    synth.add_argument("--noise", type=float, default=0.006)
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--jobs", type=int, default=1)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    stats = sub.add_parser("stats", help="spike-rate stats of encoded patterns")
    stats.add_argument("input", help="directory of *.spikes.csv files")
    stats.add_argument("--format", choices=["json", "csv"], default="csv")
    stats.add_argument("--seed", type=int, default=None)
    stats.add_argument("--jobs", type=int, default=1)
    stats.add_argument("--out")
    stats.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ParseError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except SpikecodeError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
