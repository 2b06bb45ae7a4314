"""Synthetic corpus generation.

Builds [pa]/[ta]/[ka]-style posterior streams (and free-speech-like
mixtures) with a controllable stop-to-fricative substitution probability,
plus hidden-state traces whose drift scales with the severity knob.  The
generated corpus exercises the full footprint report path without any
clinical data.  Run as a module to write a corpus to disk:

    python -m phonoprint.synthetic --out corpus_dir
"""

from __future__ import annotations

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from . import ctc, fileio
from .dsp import AudioBuffer
from .footprint import DDK_TASKS, TASKS
from .inventory import build_default_inventory
from .model.graph import output_labels

SYLLABLE_STOPS = {"DDK-pa": "p", "DDK-ta": "t", "DDK-ka": "k"}
SUBSTITUTES = {"p": "f", "t": "ð", "k": "x"}  # slurred-stop stand-ins
TRACE_WIDTH = 480


def _grid_labels() -> tuple[str, ...]:
    return output_labels("ctc")


def _rows_for_symbol(symbol_index, frames, num_classes, peak):
    rows = np.full((frames, num_classes), (1.0 - peak) / (num_classes - 1))
    rows[:, symbol_index] = peak
    return rows


def syllable_grid(
    task: str = "DDK-pa",
    reps: int = 12,
    frames_per_phone: int = 4,
    blank_frames: int = 2,
    substitution_prob: float = 0.0,
    peak: float = 0.9,
    seed: int = 0,
) -> ctc.PosteriorGrid:
    """Posterior stream of repeated stop-vowel syllables.

    Each phone occupies ``frames_per_phone`` frames at posterior ``peak``;
    a blank gap separates phones so best-path decoding recovers the
    alternating sequence exactly.  With probability ``substitution_prob``
    a repetition's stop is replaced by its fricative stand-in.
    """
    labels = _grid_labels()
    inv = build_default_inventory()
    stop = SYLLABLE_STOPS[task]
    rng = np.random.default_rng(seed)
    num_classes = len(labels) + 1  # + blank
    blank = num_classes - 1
    chunks = []
    for _ in range(reps):
        consonant = stop
        if substitution_prob > 0.0 and rng.random() < substitution_prob:
            consonant = SUBSTITUTES[stop]
        for symbol in (consonant, "a"):
            chunks.append(
                _rows_for_symbol(inv.index_of(symbol), frames_per_phone, num_classes, peak)
            )
            chunks.append(_rows_for_symbol(blank, blank_frames, num_classes, peak))
    probs = np.vstack(chunks)
    return ctc.PosteriorGrid(probs, labels=labels, frame_seconds=0.01)


def speech_grid(
    task: str = "monologue",
    num_phones: int = 60,
    frames_per_phone: int = 4,
    blank_frames: int = 2,
    substitution_prob: float = 0.0,
    silence_prob: float = 0.05,
    peak: float = 0.9,
    seed: int = 0,
) -> ctc.PosteriorGrid:
    """Free-speech-like stream mixing vowels, stops, fricatives and nasals.

    The substitution knob degrades stops into fricatives; ``silence_prob``
    inserts silence symbols, mirroring intermittent pauses.
    """
    labels = _grid_labels()
    inv = build_default_inventory()
    pool = ["a", "e", "i", "o", "u", "p", "t", "k", "b", "d",
            "s", "f", "m", "n", "l", "r"]
    rng = np.random.default_rng(seed)
    num_classes = len(labels) + 1
    blank = num_classes - 1
    chunks = []
    for _ in range(num_phones):
        if rng.random() < silence_prob:
            symbol = "sil"
        else:
            symbol = pool[int(rng.integers(len(pool)))]
            if symbol in SUBSTITUTES and rng.random() < substitution_prob:
                symbol = SUBSTITUTES[symbol]
        chunks.append(
            _rows_for_symbol(inv.index_of(symbol), frames_per_phone, num_classes, peak)
        )
        chunks.append(_rows_for_symbol(blank, blank_frames, num_classes, peak))
    probs = np.vstack(chunks)
    return ctc.PosteriorGrid(probs, labels=labels, frame_seconds=0.01)


def synthetic_trace(grid: ctc.PosteriorGrid, severity: float, seed: int) -> np.ndarray:
    """Hidden-state stand-in: isotropic noise plus a severity-scaled drift
    along a fixed direction, so 1-D PCA separates severity groups."""
    rng = np.random.default_rng(seed)
    direction = np.random.default_rng(1234).standard_normal(TRACE_WIDTH)
    direction /= np.linalg.norm(direction)
    trace = 0.1 * rng.standard_normal((grid.num_frames, TRACE_WIDTH))
    trace += (2.0 * severity - 1.0) * direction
    return trace.astype(np.float32)


def synthetic_audio(seconds: float = 60.0, rate: int = 16000, seed: int = 0) -> AudioBuffer:
    """Band-limited test signal: a few tones over pink-ish noise."""
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    t = np.arange(n) / rate
    x = np.zeros(n)
    for freq, amp in ((220.0, 0.25), (550.0, 0.15), (1375.0, 0.1)):
        x += amp * np.sin(2 * math.pi * freq * t + rng.uniform(0, 2 * math.pi))
    noise = rng.standard_normal(n)
    x += 0.05 * np.cumsum(noise) / np.sqrt(np.arange(1, n + 1))
    x /= np.max(np.abs(x)) * 1.05
    return AudioBuffer(x, rate)


# ---------------------------------------------------------------------------
# Corpus on disk
# ---------------------------------------------------------------------------

_SCORE_COLUMNS = ("lips", "palate", "larynx", "respiration",
                  "intelligibility", "monotonicity", "tongue")


def _speaker_plan(n_hc: int, n_pd: int, rng):
    plans = []
    for i in range(n_hc):
        scores = {item: int(rng.integers(0, 2)) for item in _SCORE_COLUMNS}
        plans.append((f"hc{i:02d}", "HC", scores, 0.0))
    for i in range(n_pd):
        severity = (i + 1) / n_pd  # spread over (0, 1]
        scores = {
            "lips": min(8, int(round(7 * severity)) + int(rng.integers(0, 2))),
            "palate": int(round(6 * severity)),
            "larynx": int(round(9 * severity)),
            "respiration": int(round(6 * severity)),
            "intelligibility": min(4, int(round(4 * severity))),
            "monotonicity": int(round(3 * severity)),
            "tongue": min(8, int(round(7 * severity)) + int(rng.integers(0, 2))),
        }
        plans.append((f"pd{i:02d}", "PD", scores, severity))
    return plans


def generate_corpus(
    out_dir,
    n_hc: int = 4,
    n_pd: int = 6,
    reps: int = 12,
    beam_width: int = 4,
    seed: int = 0,
    with_traces: bool = True,
) -> Path:
    """Write a decoded synthetic corpus plus manifest; returns the manifest
    path.  Decodings come from the real beam-search decoder run over the
    generated posterior streams."""
    out = Path(out_dir)
    (out / "decoded").mkdir(parents=True, exist_ok=True)
    if with_traces:
        (out / "traces").mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for sp_idx, (sid, cohort, scores, severity) in enumerate(_speaker_plan(n_hc, n_pd, rng)):
        age = 55 + int(rng.integers(0, 20))
        gender = "f" if rng.random() < 0.5 else "m"
        for task_idx, task in enumerate(TASKS):
            gseed = seed * 10007 + sp_idx * 101 + task_idx
            peak = 0.9 - 0.25 * severity
            if task in DDK_TASKS:
                grid = syllable_grid(
                    task, reps=reps, substitution_prob=0.55 * severity,
                    peak=peak, seed=gseed,
                )
            else:
                grid = speech_grid(
                    task, num_phones=5 * reps,
                    substitution_prob=0.4 * severity,
                    silence_prob=0.04 + 0.08 * severity,
                    peak=peak, seed=gseed,
                )
            seq = ctc.beam_search_decode(grid, beam_width=beam_width)
            seq.speaker = sid
            seq.task = task
            seq.recording = "r0"
            decoded_path = out / "decoded" / f"{sid}_{task}.jsonl"
            if with_traces:
                trace = synthetic_trace(grid, severity, seed=gseed + 7)
                trace_path = out / "traces" / f"{sid}_{task}.pfpf"
                fileio.write_feature_blob(trace_path, trace)
                seq.trace_path = str(trace_path)
            ctc.write_jsonl([seq], decoded_path)
            row = {
                "id": sid, "cohort": cohort, "age": age, "gender": gender,
                **{k: scores[k] for k in _SCORE_COLUMNS},
                "task": task, "audio_path": "", "decoded_path": str(decoded_path),
            }
            rows.append(row)
    manifest = out / "manifest.csv"
    fieldnames = ["id", "cohort", "age", "gender", *_SCORE_COLUMNS,
                  "task", "audio_path", "decoded_path"]
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="corpus output directory")
    parser.add_argument("--hc", type=int, default=4)
    parser.add_argument("--pd", type=int, default=6)
    parser.add_argument("--reps", type=int, default=12)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--no-traces", action="store_true")
    args = parser.parse_args(argv)
    manifest = generate_corpus(
        args.out, n_hc=args.hc, n_pd=args.pd, reps=args.reps,
        seed=args.seed, with_traces=not args.no_traces,
    )
    print(manifest)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
