"""Phonetic footprints and group analyses over decoded speech.

A speaker's footprint at some granularity is the relative frequency of
each label among their decoded symbols, so the statistic is invariant to
phone durations (one symbol per realization).  Group profiles aggregate
footprints across speakers.  Clinical scores drive the group splits; the
healthy-control set is never split by score.  Hidden-state collections
feed a one-dimensional PCA whose projections summarize how productions
drift between groups.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import stats
from .ctc import PhoneSequence
from .errors import (
    DegenerateVarianceError,
    EmptySequenceError,
    EmptySetError,
    ShapeMismatchError,
    TooFewSpeakersError,
)
from .inventory import PhoneInventory, build_default_inventory

log = logging.getLogger(__name__)

TASKS = ("DDK-pa", "DDK-ta", "DDK-ka", "sentence", "read-text", "monologue")
DDK_TASKS = ("DDK-pa", "DDK-ta", "DDK-ka")

SCORE_RANGES = {
    "lips": (0, 8),
    "palate": (0, 8),
    "larynx": (0, 12),
    "respiration": (0, 8),
    "intelligibility": (0, 4),
    "monotonicity": (0, 4),
    "tongue": (0, 8),
}


@dataclass(frozen=True)
class MfdaScores:
    lips: float
    palate: float
    larynx: float
    respiration: float
    intelligibility: float
    monotonicity: float
    tongue: float

    def __post_init__(self):
        for item, (lo, hi) in SCORE_RANGES.items():
            value = getattr(self, item)
            if not lo <= value <= hi:
                raise ValueError(f"{item} score {value} outside [{lo}, {hi}]")

    @property
    def total(self) -> float:
        return sum(getattr(self, item) for item in SCORE_RANGES)

    def item(self, name: str) -> float:
        if name == "total":
            return self.total
        if name not in SCORE_RANGES:
            raise ValueError(f"unknown score item {name!r}")
        return getattr(self, name)


@dataclass
class Recording:
    task: str
    sequence: PhoneSequence
    trace: np.ndarray | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}, expected one of {TASKS}")


@dataclass
class SpeakerRecord:
    id: str
    cohort: str  # HC | PD
    age: float
    gender: str
    scores: MfdaScores
    recordings: list[Recording] = field(default_factory=list)

    def __post_init__(self):
        if self.cohort not in ("HC", "PD"):
            raise ValueError(f"cohort must be HC or PD, got {self.cohort!r}")

    def recordings_for(self, tasks=None) -> list[Recording]:
        if tasks is None:
            return list(self.recordings)
        wanted = {tasks} if isinstance(tasks, str) else set(tasks)
        return [r for r in self.recordings if r.task in wanted]


@dataclass
class FootprintProfile:
    level: str
    labels: tuple[str, ...]
    mpp: dict[str, float]
    stddev: dict[str, float]
    per_speaker: dict[str, dict[str, float]]

    @property
    def num_speakers(self) -> int:
        return len(self.per_speaker)


def _label_of(symbol: str, level: str, inventory: PhoneInventory) -> str:
    if level == "phone":
        return inventory.phone(symbol).symbol
    return inventory.class_of(symbol, level)


def speaker_frequencies(
    speaker: SpeakerRecord,
    level: str,
    tasks=None,
    inventory: PhoneInventory | None = None,
    mode: str = "count",
) -> dict[str, float] | None:
    """Relative label frequencies of one speaker's decoded symbols.

    ``count`` weighs every decoded symbol equally; ``confidence`` weighs
    each by its posterior confidence.  Returns None when the speaker
    decoded zero symbols in the selected tasks.
    """
    inventory = inventory or build_default_inventory()
    recordings = speaker.recordings_for(tasks)
    if not recordings:
        raise EmptySequenceError(
            f"speaker {speaker.id} has no decoded sequence for tasks {tasks}"
        )
    weights: dict[str, float] = {}
    total = 0.0
    for rec in recordings:
        for phone in rec.sequence.phones:
            label = _label_of(phone.symbol, level, inventory)
            w = 1.0 if mode == "count" else float(phone.confidence)
            weights[label] = weights.get(label, 0.0) + w
            total += w
    if total == 0.0:
        return None
    return {label: w / total for label, w in weights.items()}


def footprint(
    speakers,
    level: str = "phone",
    tasks=None,
    inventory: PhoneInventory | None = None,
    mode: str = "count",
) -> FootprintProfile:
    """Across-speaker mean and sample standard deviation of label
    frequencies.  Speakers with zero decoded symbols are excluded with a
    warning; an empty speaker set is an error."""
    inventory = inventory or build_default_inventory()
    speakers = list(speakers)
    if not speakers:
        raise EmptySetError("footprint of an empty speaker set")
    labels = inventory.labels(level)
    per_speaker: dict[str, dict[str, float]] = {}
    for speaker in speakers:
        freqs = speaker_frequencies(speaker, level, tasks, inventory, mode)
        if freqs is None:
            log.warning("speaker %s decoded zero symbols; excluded from profile",
                        speaker.id)
            continue
        per_speaker[speaker.id] = {lab: freqs.get(lab, 0.0) for lab in labels}
    if not per_speaker:
        raise EmptySetError("no speaker with decoded symbols in the selected tasks")
    matrix = np.array([[per_speaker[sid][lab] for lab in labels] for sid in per_speaker])
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0, ddof=1) if len(per_speaker) > 1 else np.zeros(len(labels))
    return FootprintProfile(
        level=level,
        labels=labels,
        mpp=dict(zip(labels, mean.tolist())),
        stddev=dict(zip(labels, std.tolist())),
        per_speaker=per_speaker,
    )


# ---------------------------------------------------------------------------
# Group splits
# ---------------------------------------------------------------------------

def split_by_threshold(speakers, item: str, cuts) -> list[list[SpeakerRecord]]:
    """Half-open score bins [-inf,c1), [c1,c2), ..., [ck,inf).

    Empty bins are permitted; input order is preserved inside bins.
    """
    cuts = tuple(cuts)
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError(f"cuts must be strictly increasing: {cuts}")
    bins: list[list[SpeakerRecord]] = [[] for _ in range(len(cuts) + 1)]
    for speaker in speakers:
        value = speaker.scores.item(item)
        idx = sum(value >= c for c in cuts)
        bins[idx].append(speaker)
    return bins


def split_balanced(speakers, item: str, k: int) -> list[list[SpeakerRecord]]:
    """k contiguous groups of a score-sorted ordering, sizes within 1.

    Leading groups take the remainder; score order is preserved across
    groups (max of set i <= min of set i+1).
    """
    speakers = list(speakers)
    if k < 2 or len(speakers) < k:
        raise TooFewSpeakersError(f"cannot split {len(speakers)} speakers into {k} sets")
    ordered = sorted(speakers, key=lambda s: (s.scores.item(item), s.id))
    n, rem = divmod(len(ordered), k)
    sizes = [n + 1] * rem + [n] * (k - rem)
    out = []
    start = 0
    for size in sizes:
        out.append(ordered[start : start + size])
        start += size
    return out


def bin_names(item: str, cuts) -> list[str]:
    cuts = tuple(cuts)
    if not cuts:
        return [f"all {item}"]
    names = [f"{item} < {cuts[0]:g}"]
    names += [f"{a:g} <= {item} < {b:g}" for a, b in zip(cuts, cuts[1:])]
    names.append(f"{item} >= {cuts[-1]:g}")
    return names


# ---------------------------------------------------------------------------
# Hidden-state collections and PCA
# ---------------------------------------------------------------------------

def collect_hidden_states(speakers, targets, tasks=None,
                          inventory: PhoneInventory | None = None) -> np.ndarray:
    """Trace vectors at the emission frames of decoded target phones.

    One row per decoded occurrence; recordings without a stored trace are
    skipped with a warning.  The result may be empty (0 x width).
    """
    inventory = inventory or build_default_inventory()
    wanted = {inventory.phone(t).symbol for t in targets}
    rows = []
    width = 0
    for speaker in sorted(speakers, key=lambda s: s.id):
        for rec in speaker.recordings_for(tasks):
            if rec.trace is None:
                log.warning("speaker %s task %s: no hidden-state trace stored",
                            speaker.id, rec.task)
                continue
            trace = np.asarray(rec.trace)
            if trace.ndim == 3:
                trace = trace[:, :, 0]
            width = trace.shape[1]
            for phone in rec.sequence.phones:
                if inventory.phone(phone.symbol).symbol in wanted:
                    if phone.emit_frame >= len(trace):
                        raise ShapeMismatchError(
                            f"emit frame {phone.emit_frame} outside trace of "
                            f"{len(trace)} frames (speaker {speaker.id})"
                        )
                    rows.append(trace[phone.emit_frame])
    if not rows:
        return np.zeros((0, width), dtype=np.float32)
    return np.stack(rows).astype(np.float32)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    component: np.ndarray  # unit norm
    explained_variance: float  # top eigenvalue / total variance
    eigenvalue: float


def pca_fit_1d(matrix) -> PcaModel:
    """First principal component of the sample covariance.

    The component is the top eigenvector, sign-oriented so its largest-
    magnitude entry is positive; eigenvalue ties resolve to the component
    dominated by the lowest coordinate index.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateVarianceError("PCA needs at least 2 rows")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (X.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    top = float(evals[-1])
    total = float(np.sum(np.maximum(evals, 0.0)))
    if top <= 0.0 or total <= 0.0:
        raise DegenerateVarianceError("zero variance in PCA input")
    tied = np.nonzero(evals >= top - 1e-9 * top)[0]
    best = None
    for idx in tied:
        vec = evecs[:, idx]
        dominant = int(np.argmax(np.abs(vec)))
        if best is None or dominant < best[0]:
            best = (dominant, vec)
    dominant, component = best
    if component[dominant] < 0:
        component = -component
    return PcaModel(
        mean=mean,
        component=component / np.linalg.norm(component),
        explained_variance=top / total,
        eigenvalue=top,
    )


def pca_project(model: PcaModel, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    return (rows - model.mean) @ model.component


# ---------------------------------------------------------------------------
# Confidence summaries
# ---------------------------------------------------------------------------

def mean_confidence(speakers, tasks=None) -> float:
    """Unweighted mean confidence over every decoded phone in the set."""
    values = []
    for speaker in speakers:
        for rec in speaker.recordings_for(tasks):
            values.extend(p.confidence for p in rec.sequence.phones)
    if not values:
        raise EmptySetError("no decoded phones in the selected recordings")
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# Report builder
# ---------------------------------------------------------------------------

@dataclass
class ReportConfig:
    mpp_mode: str = "count"
    display_threshold: float = 0.02
    lips_cuts: tuple = (3.0, 5.0)
    tongue_cuts: tuple = (3.0, 5.0)
    intelligibility_cuts: tuple = (2.0,)
    total_cuts: tuple = (20.0, 30.0)
    pca_targets: tuple = (("DDK-pa", "p"), ("DDK-ta", "t"), ("DDK-ka", "k"))

    def cuts_for(self, item: str):
        return {
            "lips": self.lips_cuts,
            "tongue": self.tongue_cuts,
            "intelligibility": self.intelligibility_cuts,
            "total": self.total_cuts,
        }[item]


def _set_table(hc, pd, item, cuts):
    """Named speaker sets: whole HC reference plus threshold-split PD."""
    sets = [("HC", list(hc))]
    names = bin_names(item, cuts)
    for name, members in zip(names, split_by_threshold(pd, item, cuts)):
        sets.append((f"PD {name}", members))
    return sets


def _profile_section(sets, level, tasks, inventory, mode):
    section = {}
    for name, members in sets:
        usable = [s for s in members if s.recordings_for(tasks)]
        if not usable:
            section[name] = {}
            continue
        profile = footprint(usable, level, tasks, inventory, mode)
        section[name] = {
            lab: {"mpp": profile.mpp[lab], "stddev": profile.stddev[lab]}
            for lab in profile.labels
        }
    return section


def _footprint_stats(hc, pd_sets, level, labels, tasks, inventory, mode, score_item):
    """Spearman over all speakers plus per-set effect sizes and t-tests."""
    rows = []
    all_speakers = list(hc) + [s for _, members in pd_sets for s in members]
    per_label_values = {}
    scores = []
    for speaker in all_speakers:
        freqs = speaker_frequencies(speaker, level, tasks, inventory, mode)
        if freqs is None:
            continue
        scores.append(speaker.scores.item(score_item))
        for lab in labels:
            per_label_values.setdefault(lab, []).append(freqs.get(lab, 0.0))

    def set_values(members, lab):
        vals = []
        for speaker in members:
            freqs = speaker_frequencies(speaker, level, tasks, inventory, mode)
            if freqs is not None:
                vals.append(freqs.get(lab, 0.0))
        return vals

    for lab in labels:
        x = per_label_values.get(lab, [])
        try:
            rho = stats.spearman_rho(x, scores)
        except Exception:
            rho = float("nan")
        row = {"class": lab, "spearman_rho": rho, "n": len(x), "sets": {}}
        hc_vals = set_values(hc, lab)
        for name, members in pd_sets:
            vals = set_values(members, lab)
            entry = {"n": len(vals)}
            try:
                entry["cohens_d"] = stats.cohens_d(hc_vals, vals)
            except Exception:
                entry["cohens_d"] = float("nan")
            try:
                t, dof, p = stats.welch_t(hc_vals, vals)
                entry.update({"t": t, "dof": dof, "p": p})
            except Exception:
                entry.update({"t": float("nan"), "dof": float("nan"), "p": float("nan")})
            row["sets"][name] = entry
        rows.append(row)
    return rows


def build_report(speakers, config: ReportConfig | None = None,
                 inventory: PhoneInventory | None = None) -> dict:
    """The full analysis bundle over ingested speakers.

    Sections: per-task footprints at all levels, threshold splits, PCA of
    stop-phone hidden states per DDK task, confidence tables, and the
    statistics rows.  Ordering is deterministic throughout.  The PCA
    section degrades to a notice when no traces were stored.
    """
    config = config or ReportConfig()
    inventory = inventory or build_default_inventory()
    speakers = sorted(speakers, key=lambda s: s.id)
    if not speakers:
        raise EmptySetError("no speakers ingested")
    hc = [s for s in speakers if s.cohort == "HC"]
    pd = [s for s in speakers if s.cohort == "PD"]
    mode = config.mpp_mode
    notices: list[str] = []
    if not pd:
        notices.append("no PD speakers: split tables contain only the HC reference")

    report: dict = {
        "config": {
            "mpp_mode": mode,
            "display_threshold": config.display_threshold,
            "splits": {
                item: list(config.cuts_for(item))
                for item in ("lips", "tongue", "intelligibility", "total")
            },
        },
        "speakers": {"HC": len(hc), "PD": len(pd), "total": len(speakers)},
        "footprints": {},
        "splits": {},
        "pca": {},
        "confidence": {},
        "stats": {},
        "notices": notices,
    }

    # Which score item drives the split for each task view.
    task_views = [
        ("DDK-pa", ("DDK-pa",), "lips", ("phone", "coarse")),
        ("DDK-ta", ("DDK-ta",), "tongue", ("phone", "coarse")),
        ("DDK-ka", ("DDK-ka",), "tongue", ("phone", "coarse")),
        ("DDK", DDK_TASKS, "intelligibility", ("fine",)),
        ("sentence", ("sentence",), "intelligibility", ("coarse", "fine")),
        ("read-text", ("read-text",), "intelligibility", ("coarse", "fine")),
        ("monologue", ("monologue",), "intelligibility", ("coarse", "fine")),
    ]
    present_tasks = {r.task for s in speakers for r in s.recordings}
    for view, tasks, item, levels in task_views:
        if not (set(tasks) & present_tasks):
            continue
        sets = _set_table(hc, pd, item, config.cuts_for(item)) if pd else [("HC", hc)]
        report["splits"][view] = {
            name: [s.id for s in members] for name, members in sets
        }
        report["footprints"][view] = {
            level: _profile_section(sets, level, tasks, inventory, mode)
            for level in levels
        }

    # PCA of stop-phone hidden states over the DDK exercises.
    have_traces = any(r.trace is not None for s in speakers for r in s.recordings)
    if not have_traces:
        report["pca"] = {"omitted": "no hidden-state traces stored"}
        notices.append("PCA section omitted: no hidden-state traces stored")
    else:
        for task, target in config.pca_targets:
            if task not in present_tasks:
                continue
            matrix = collect_hidden_states(speakers, {target}, (task,), inventory)
            if matrix.shape[0] < 2:
                report["pca"][task] = {"omitted": "fewer than 2 target occurrences"}
                continue
            model = pca_fit_1d(matrix)
            entry = {
                "target": target,
                "explained_variance": model.explained_variance,
                "sets": {},
                "projections": {},
            }
            split_item = "lips" if task == "DDK-pa" else "tongue"
            pd_two_way = ((config.cuts_for(split_item)[0],) if pd else ())
            sets = [("HC", hc)]
            if pd:
                names = bin_names(split_item, pd_two_way)
                for name, members in zip(names, split_by_threshold(pd, split_item, pd_two_way)):
                    sets.append((f"PD {name}", members))
            for name, members in sets:
                values = []
                for speaker in members:
                    rows = collect_hidden_states([speaker], {target}, (task,), inventory)
                    if rows.shape[0]:
                        values.extend(pca_project(model, rows).tolist())
                entry["projections"][name] = values
                if values:
                    arr = np.array(values)
                    entry["sets"][name] = {
                        "n": len(values),
                        "mean": float(arr.mean()),
                        "variance": float(arr.var(ddof=1)) if len(values) > 1 else 0.0,
                    }
                else:
                    entry["sets"][name] = {"n": 0, "mean": float("nan"),
                                           "variance": float("nan")}
            report["pca"][task] = entry

    # Confidence tables arranged by total score.
    conf_rows = [("DDK", DDK_TASKS), ("sentence", ("sentence",)),
                 ("read-text", ("read-text",)), ("monologue", ("monologue",))]
    conf_sets = _set_table(hc, pd, "total", config.total_cuts) if pd else [("HC", hc)]
    for row_name, tasks in conf_rows:
        if not (set(tasks) & present_tasks):
            continue
        row = {}
        for name, members in conf_sets:
            try:
                row[name] = mean_confidence(members, tasks)
            except EmptySetError:
                row[name] = float("nan")
        report["confidence"][row_name] = row

    # Statistics: fine classes over the DDK exercises, the stop classes for
    # the free-er tasks, and the confidence correlations.
    if pd:
        intel_sets = [
            (f"PD {name}", members)
            for name, members in zip(
                bin_names("intelligibility", config.intelligibility_cuts),
                split_by_threshold(pd, "intelligibility", config.intelligibility_cuts),
            )
        ]
        if set(DDK_TASKS) & present_tasks:
            fine_labels = [lab for lab in inventory.labels("fine") if lab != "Silence"]
            report["stats"]["ddk_fine_classes"] = _footprint_stats(
                hc, intel_sets, "fine", fine_labels, DDK_TASKS, inventory, mode,
                "intelligibility",
            )
        for task in ("sentence", "read-text", "monologue"):
            if task not in present_tasks:
                continue
            report["stats"][f"{task}_stops"] = {
                "fine": _footprint_stats(hc, intel_sets, "fine", ["Unvoiced Stops"],
                                         (task,), inventory, mode, "intelligibility"),
                "coarse": _footprint_stats(hc, intel_sets, "coarse", ["Stops"],
                                           (task,), inventory, mode, "intelligibility"),
            }
        # mean confidence vs. total and intelligibility scores
        conf_stats = {}
        for row_name, tasks in conf_rows:
            if not (set(tasks) & present_tasks):
                continue
            xs, totals, intels = [], [], []
            for speaker in speakers:
                recs = speaker.recordings_for(tasks)
                if not recs:
                    continue
                try:
                    xs.append(mean_confidence([speaker], tasks))
                except EmptySetError:
                    continue
                totals.append(speaker.scores.total)
                intels.append(speaker.scores.intelligibility)
            entry = {"n": len(xs)}
            for key, ys in (("total", totals), ("intelligibility", intels)):
                try:
                    entry[f"spearman_vs_{key}"] = stats.spearman_rho(xs, ys)
                except Exception:
                    entry[f"spearman_vs_{key}"] = float("nan")
            conf_stats[row_name] = entry
        report["stats"]["confidence"] = conf_stats
    return report
