"""Manifest ingestion and report bundle serialization.

The manifest is a CSV with one row per recording: speaker metadata, the
seven clinical score items, the task label, and either a decoded_path
(JSONL produced by the decoder, optionally referencing a trace file) or
an audio_path to run through the recognition pipeline.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import ctc, fileio
from .errors import FormatError
from .footprint import SCORE_RANGES, MfdaScores, Recording, SpeakerRecord

REQUIRED_COLUMNS = ("id", "cohort", "age", "gender", *SCORE_RANGES, "task")


def ingest_manifest(path, decoder=None) -> list[SpeakerRecord]:
    """Parse a manifest into speaker records.

    Rows with ``decoded_path`` load the stored JSONL (and any referenced
    trace container); rows with only ``audio_path`` are run through
    ``decoder``, a callable audio_path -> (PhoneSequence, trace or None).
    """
    path = Path(path)
    speakers: dict[str, SpeakerRecord] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise FormatError(f"{path}: manifest missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            sid = (row.get("id") or "").strip()
            if not sid:
                raise FormatError(f"{where}: empty speaker id")
            try:
                scores = MfdaScores(**{k: float(row[k]) for k in SCORE_RANGES})
            except (TypeError, ValueError) as exc:
                raise FormatError(f"{where}: bad scores ({exc})") from None
            if sid not in speakers:
                try:
                    speakers[sid] = SpeakerRecord(
                        id=sid,
                        cohort=(row.get("cohort") or "").strip(),
                        age=float(row.get("age") or 0),
                        gender=(row.get("gender") or "").strip(),
                        scores=scores,
                    )
                except ValueError as exc:
                    raise FormatError(f"{where}: {exc}") from None
            speaker = speakers[sid]
            task = (row.get("task") or "").strip()
            decoded_path = (row.get("decoded_path") or "").strip()
            audio_path = (row.get("audio_path") or "").strip()
            try:
                if decoded_path:
                    for seq in ctc.read_jsonl(_resolve(path, decoded_path)):
                        trace = None
                        if seq.trace_path:
                            trace = fileio.read_feature_blob(
                                _resolve(path, seq.trace_path)
                            )[:, :, 0]
                        speaker.recordings.append(
                            Recording(task=task, sequence=seq, trace=trace)
                        )
                elif audio_path:
                    if decoder is None:
                        raise FormatError(
                            f"{where}: audio_path given but no weights/decoder available"
                        )
                    seq, trace = decoder(_resolve(path, audio_path))
                    seq.speaker, seq.task = sid, task
                    speaker.recordings.append(
                        Recording(task=task, sequence=seq, trace=trace)
                    )
                else:
                    raise FormatError(
                        f"{where}: need either decoded_path or audio_path"
                    )
            except FileNotFoundError as exc:
                raise FormatError(f"{where}: referenced file missing ({exc})") from None
            except ValueError as exc:
                raise FormatError(f"{where}: {exc}") from None
    return sorted(speakers.values(), key=lambda s: s.id)


def _resolve(manifest_path: Path, ref: str) -> Path:
    p = Path(ref)
    if p.is_absolute() or p.exists():
        return p
    return manifest_path.parent / p


# ---------------------------------------------------------------------------
# Report bundle output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        if np.isnan(value):
            return "nan"
        return f"{value:.6g}"
    return str(value)


def write_report_bundle(report: dict, out_dir) -> list[Path]:
    """Write report.json plus the per-table and plot-ready CSVs.

    Returns the written paths (deterministic order and content).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, header, rows):
        p = out / name
        with open(p, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        written.append(p)

    path = out / "report.json"
    path.write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    written.append(path)

    # Long-format footprint data (full, unfiltered).
    rows = []
    for view, levels in report.get("footprints", {}).items():
        for level, sets in levels.items():
            for set_name, labels in sets.items():
                for label, cell in labels.items():
                    rows.append((view, level, set_name, label,
                                 cell["mpp"], cell["stddev"]))
    emit("footprint_long.csv", ("task", "level", "set", "label", "mpp", "stddev"), rows)

    # Figure-analog per-table CSVs; phone-level tables apply the display
    # threshold (a label stays if any set exceeds it).
    threshold = report.get("config", {}).get("display_threshold", 0.0)
    for view, levels in report.get("footprints", {}).items():
        for level, sets in levels.items():
            set_names = list(sets)
            labels = []
            for name in set_names:
                labels = list(sets[name]) or labels
            if level == "phone":
                labels = [
                    lab for lab in labels
                    if any(sets[n].get(lab, {}).get("mpp", 0.0) > threshold
                           for n in set_names)
                ]
            header = ["label"]
            for name in set_names:
                header += [f"{name} mpp", f"{name} stddev"]
            rows = []
            for lab in labels:
                row = [lab]
                for name in set_names:
                    cell = sets[name].get(lab, {"mpp": float("nan"),
                                                "stddev": float("nan")})
                    row += [cell["mpp"], cell["stddev"]]
                rows.append(row)
            emit(f"footprint_{view}_{level}.csv", header, rows)

    rows = [
        (view, set_name, sid)
        for view, sets in report.get("splits", {}).items()
        for set_name, ids in sets.items()
        for sid in ids
    ]
    emit("splits.csv", ("task", "set", "speaker"), rows)

    conf = report.get("confidence", {})
    if conf:
        set_names = list(next(iter(conf.values())))
        rows = [(task, *[values.get(n, float("nan")) for n in set_names])
                for task, values in conf.items()]
        emit("confidence.csv", ("task", *set_names), rows)

    pca = report.get("pca", {})
    if "omitted" not in pca:
        summary, long_rows = [], []
        for task, entry in pca.items():
            if "omitted" in entry:
                summary.append((task, "omitted", entry["omitted"], "", ""))
                continue
            for set_name, cell in entry["sets"].items():
                summary.append((task, set_name, cell["n"], cell["mean"],
                                cell["variance"]))
            for set_name, values in entry["projections"].items():
                long_rows += [(task, set_name, i, v)
                              for i, v in enumerate(values)]
        emit("pca_summary.csv", ("task", "set", "n", "mean", "variance"), summary)
        emit("pca_long.csv", ("task", "set", "occurrence", "projection"), long_rows)

    stats_rows = []
    for section, content in report.get("stats", {}).items():
        if section == "confidence":
            for task, entry in content.items():
                n = entry.get("n", "")
                for key, value in entry.items():
                    if key.startswith("spearman"):
                        stats_rows.append((section, task, "", "", key, value,
                                           n, "", ""))
            continue
        blocks = content if isinstance(content, dict) else {"fine": content}
        for level, rows in blocks.items():
            for row in rows:
                stats_rows.append((section, level, row["class"], "",
                                   "spearman_rho", row["spearman_rho"],
                                   row["n"], "", ""))
                for set_name, cell in row["sets"].items():
                    stats_rows.append((section, level, row["class"], set_name,
                                       "cohens_d", cell["cohens_d"],
                                       cell["n"], "", ""))
                    stats_rows.append((section, level, row["class"], set_name,
                                       "welch_t", cell["t"], cell["n"],
                                       cell["dof"], cell["p"]))
    emit("stats.csv",
         ("section", "level", "class", "set", "statistic", "value", "n", "dof", "p"),
         stats_rows)
    return written
