"""Command line surface: featurize, decode, footprint, per, gen-weights,
selftest.

Every command is a deterministic composition of library operations: same
config, inputs and seed give byte-identical outputs.  File-level work runs
on a bounded worker pool (PHONOPRINT_THREADS caps it); outputs are written
by the submitting thread per file and the run ledger by the main thread.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import ctc, dsp, fileio
from .config import PipelineConfig, RunLedger, load_config, worker_count
from .errors import EmptyReferenceError, FormatError, PhonoprintError
from .manifest import ingest_manifest, write_report_bundle
from .model import ModelGraph, generate_weights, load_weights, model_forward, save_weights
from .selftest import run_selftest


def _build_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    for field in ("beam_width", "mpp_mode", "seed", "snr_db", "threads"):
        value = getattr(args, field, None)
        if value is not None:
            overrides[field] = value
    if getattr(args, "out", None):
        overrides["out_dir"] = args.out
    if getattr(args, "weights", None):
        overrides["weights_path"] = str(args.weights)
    return cfg.with_overrides(**overrides)


def _load_input_features(path: Path, cfg: PipelineConfig):
    if path.suffix.lower() == ".wav":
        buf = fileio.load_wav(path)
        return dsp.featurize_file_pipeline(buf, cfg.dsp, snr_db=cfg.snr_db, seed=cfg.seed)
    return fileio.read_features(path)


def cmd_featurize(args) -> int:
    cfg = _build_config(args)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ledger = RunLedger(config_hash=cfg.hash())

    def work(path: Path):
        buf = fileio.load_wav(path)
        feats = dsp.featurize_file_pipeline(buf, cfg.dsp, snr_db=cfg.snr_db, seed=cfg.seed)
        target = out_dir / (path.stem + ".pfpf")
        fileio.write_features(target, feats)
        if args.csv:
            fileio.write_feature_csv(out_dir / (path.stem + ".csv"), feats.frames)
        return target, feats.frames.shape

    paths = [Path(p) for p in args.audio]
    for p in paths:
        if not p.exists():
            raise FileNotFoundError(p)
        ledger.add_input(p)
    with ThreadPoolExecutor(max_workers=worker_count(cfg.threads)) as pool:
        for target, shape in pool.map(work, paths):
            ledger.set_status(target, f"ok {shape[0]}x{shape[1]}x{shape[2]}")
            print(f"{target} {shape[0]}x{shape[1]}x{shape[2]}")
    ledger.write(out_dir / "run_ledger.json")
    return 0


def cmd_decode(args) -> int:
    cfg = _build_config(args)
    if not cfg.weights_path:
        raise FormatError("decode requires --weights")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = load_weights(cfg.weights_path)
    graph = ModelGraph.build(store.variant)
    store.validate_against(graph)
    ledger = RunLedger(config_hash=cfg.hash())
    ledger.add_input(cfg.weights_path)

    def work(path: Path):
        feats = _load_input_features(path, cfg)
        grid, trace = model_forward(feats, store, graph)
        seq = ctc.beam_search_decode(
            grid, beam_width=cfg.beam_width,
            merge_prefixes=cfg.merge_prefixes,
            confidence_mode=cfg.confidence_mode,
        )
        seq.speaker = path.stem
        trace_path = None
        if not args.no_traces:
            trace_path = out_dir / (path.stem + ".trace.pfpf")
            fileio.write_feature_blob(trace_path, trace)
            seq.trace_path = trace_path.name
        target = out_dir / (path.stem + ".jsonl")
        ctc.write_jsonl([seq], target)
        return target, len(seq)

    paths = [Path(p) for p in args.inputs]
    for p in paths:
        if not p.exists():
            raise FileNotFoundError(p)
        ledger.add_input(p)
    with ThreadPoolExecutor(max_workers=worker_count(cfg.threads)) as pool:
        for target, n in pool.map(work, paths):
            ledger.set_status(target, f"ok {n} phones")
            print(f"{target} {n} phones")
    ledger.write(out_dir / "run_ledger.json")
    return 0


def cmd_footprint(args) -> int:
    from .footprint import build_report

    cfg = _build_config(args)
    out_dir = Path(cfg.out_dir)
    manifest = Path(args.manifest)
    if not manifest.exists():
        raise FileNotFoundError(manifest)

    decoder = None
    if cfg.weights_path:
        store = load_weights(cfg.weights_path)
        graph = ModelGraph.build(store.variant)
        store.validate_against(graph)

        def decoder(audio_path):
            buf = fileio.load_wav(audio_path)
            feats = dsp.featurize_file_pipeline(buf, cfg.dsp, snr_db=cfg.snr_db,
                                                seed=cfg.seed)
            grid, trace = model_forward(feats, store, graph)
            seq = ctc.beam_search_decode(
                grid, beam_width=cfg.beam_width,
                merge_prefixes=cfg.merge_prefixes,
                confidence_mode=cfg.confidence_mode,
            )
            return seq, trace

    speakers = ingest_manifest(manifest, decoder=decoder)
    report = build_report(speakers, cfg.report_config())
    written = write_report_bundle(report, out_dir)
    ledger = RunLedger(config_hash=cfg.hash())
    ledger.add_input(manifest)
    for path in written:
        ledger.set_status(path, "ok")
        print(path)
    ledger.write(out_dir / "run_ledger.json")
    return 0


def cmd_per(args) -> int:
    refs = {(s.speaker, s.task, s.recording): s for s in ctc.read_jsonl(args.reference)}
    hyps = {(s.speaker, s.task, s.recording): s for s in ctc.read_jsonl(args.hypothesis)}
    common = sorted(set(refs) & set(hyps))
    if not common:
        raise FormatError("no (speaker, task, recording) pairs shared by both files")
    distance = 0
    ref_len = 0
    for key in common:
        ref = refs[key].symbols()
        if not ref:
            raise EmptyReferenceError(f"empty reference sequence for {key}")
        distance += ctc.levenshtein(ref, hyps[key].symbols())
        ref_len += len(ref)
    per = distance / ref_len
    print(f"{per:.6f}")
    return 0


def cmd_gen_weights(args) -> int:
    store = generate_weights(seed=args.seed, variant=args.variant)
    out = Path(args.out or f"{args.variant}-seed{args.seed}.pfpw")
    save_weights(out, store)
    print(f"{out} {len(store)} tensors")
    return 0


def cmd_selftest(args) -> int:
    return 0 if run_selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonoprint",
        description="Phonetic footprint pipeline: featurize, decode, analyze.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--beam-width", dest="beam_width", type=int)
        p.add_argument("--mpp-mode", dest="mpp_mode", choices=("count", "confidence"))
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        if out:
            p.add_argument("--out", help="output directory")

    p = sub.add_parser("featurize", help="audio files to feature containers")
    p.add_argument("audio", nargs="+")
    p.add_argument("--csv", action="store_true", help="also write CSV dumps")
    p.add_argument("--snr-db", dest="snr_db", type=float,
                   help="add seeded Gaussian noise at this SNR")
    common(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("decode", help="features or audio to phone sequences")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--weights", required=True)
    p.add_argument("--no-traces", action="store_true",
                   help="skip writing hidden-state trace files")
    p.add_argument("--snr-db", dest="snr_db", type=float)
    common(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("footprint", help="manifest to analysis report bundle")
    p.add_argument("manifest")
    p.add_argument("--weights", help="needed when the manifest lists audio paths")
    common(p)
    p.set_defaults(func=cmd_footprint)

    p = sub.add_parser("per", help="phone error rate between two decoded JSONL files")
    p.add_argument("reference")
    p.add_argument("hypothesis")
    p.set_defaults(func=cmd_per)

    p = sub.add_parser("gen-weights", help="write a seeded random weight container")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=("ctc", "framewise"), default="ctc")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_weights)

    p = sub.add_parser("selftest", help="run the built-in oracle suites")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return 2
    except PhonoprintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
