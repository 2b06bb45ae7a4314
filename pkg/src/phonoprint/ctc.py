"""CTC probabilities, decoding and the phone error rate.

A posterior grid holds one probability row per frame over K phone classes
plus the blank helper class in the last column.  The path probability is
the product of per-frame posteriors along one alignment; the sequence
probability sums path probabilities over every alignment that collapses
(merge repeats, drop blanks) to the same label sequence.  Greedy decoding
returns the collapsed best path; prefix beam search approximates the best
sequence by merging probability mass across alignments that share a
collapsed prefix.  No language model term is applied.

All probabilities are carried in the log domain; linear values only
materialize at the API surface.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import (
    EmptyReferenceError,
    InstanceTooLargeError,
    LengthMismatchError,
    ShapeMismatchError,
)

NEG_INF = -np.inf

# Oracle guard: brute-force enumeration visits (K+1)^T paths.
BRUTE_FORCE_MAX_T = 12
BRUTE_FORCE_MAX_K = 5


class PosteriorGrid:
    """T x (K+1) per-frame probability rows; blank is the last column."""

    def __init__(self, probs, labels: tuple[str, ...] | None = None,
                 frame_seconds: float = 0.01):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] < 2:
            raise ShapeMismatchError("posterior grid must be T x (K+1)")
        self.probs = probs
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.num_classes:
            raise ShapeMismatchError(
                f"{len(self.labels)} labels for {self.num_classes} classes"
            )
        self.frame_seconds = float(frame_seconds)

    @property
    def num_frames(self) -> int:
        return self.probs.shape[0]

    @property
    def num_classes(self) -> int:
        """Number of non-blank classes K."""
        return self.probs.shape[1] - 1

    @property
    def blank(self) -> int:
        return self.probs.shape[1] - 1

    def validate(self, tol: float = 1e-6) -> None:
        if np.any(self.probs < 0.0) or np.any(self.probs > 1.0):
            raise ShapeMismatchError("posterior entries must lie in [0, 1]")
        sums = self.probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > tol):
            raise ShapeMismatchError("posterior rows must sum to 1")

    def log(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def symbol(self, class_index: int) -> str:
        if self.labels is None:
            return str(class_index)
        return self.labels[class_index]


@dataclass(frozen=True)
class DecodedPhone:
    symbol: str
    emit_frame: int
    confidence: float

    def t_seconds(self, frame_seconds: float) -> float:
        return self.emit_frame * frame_seconds


@dataclass
class PhoneSequence:
    phones: tuple[DecodedPhone, ...]
    duration_seconds: float
    log_prob: float | None = None
    speaker: str = ""
    task: str = ""
    recording: str = ""
    trace_path: str | None = None
    frame_seconds: float = 0.01
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.phones)

    def symbols(self) -> tuple[str, ...]:
        return tuple(p.symbol for p in self.phones)

    def emit_frames(self) -> tuple[int, ...]:
        return tuple(p.emit_frame for p in self.phones)

    def to_json_obj(self) -> dict:
        obj = {
            "speaker": self.speaker,
            "task": self.task,
            "recording": self.recording,
            "duration_seconds": self.duration_seconds,
            "log_prob": self.log_prob,
            "phones": [
                {
                    "symbol": p.symbol,
                    "t_seconds": round(p.emit_frame * self.frame_seconds, 9),
                    "confidence": p.confidence,
                }
                for p in self.phones
            ],
        }
        if self.trace_path:
            obj["trace_path"] = self.trace_path
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict, frame_seconds: float = 0.01) -> "PhoneSequence":
        phones = tuple(
            DecodedPhone(
                symbol=p["symbol"],
                emit_frame=int(round(float(p["t_seconds"]) / frame_seconds)),
                confidence=float(p["confidence"]),
            )
            for p in obj.get("phones", [])
        )
        return cls(
            phones=phones,
            duration_seconds=float(obj.get("duration_seconds", 0.0)),
            log_prob=obj.get("log_prob"),
            speaker=str(obj.get("speaker", "")),
            task=str(obj.get("task", "")),
            recording=str(obj.get("recording", "")),
            trace_path=obj.get("trace_path"),
            frame_seconds=frame_seconds,
        )


def write_jsonl(sequences, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            fh.write(json.dumps(seq.to_json_obj(), ensure_ascii=False) + "\n")


def read_jsonl(path, frame_seconds: float = 0.01) -> list[PhoneSequence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(PhoneSequence.from_json_obj(json.loads(line), frame_seconds))
    return out


def write_csv(sequences, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("speaker,task,recording,symbol,t_seconds,confidence\n")
        for seq in sequences:
            for p in seq.phones:
                fh.write(
                    f"{seq.speaker},{seq.task},{seq.recording},{p.symbol},"
                    f"{p.emit_frame * seq.frame_seconds:.3f},{p.confidence:.6f}\n"
                )


# ---------------------------------------------------------------------------
# Path and sequence probabilities
# ---------------------------------------------------------------------------

def path_log_prob(grid: PosteriorGrid, path) -> float:
    """Log probability of one length-T alignment path (product of rows)."""
    path = np.asarray(path, dtype=np.intp)
    if len(path) != grid.num_frames:
        raise LengthMismatchError(
            f"path length {len(path)} != {grid.num_frames} frames"
        )
    with np.errstate(divide="ignore"):
        return float(np.log(grid.probs[np.arange(len(path)), path]).sum())


def path_probability(grid: PosteriorGrid, path) -> float:
    return math.exp(path_log_prob(grid, path))


def collapse_path(path, blank: int) -> tuple[int, ...]:
    """CTC collapse: merge repeated symbols, then drop blanks."""
    out = []
    prev = None
    for c in path:
        if c != prev and c != blank:
            out.append(c)
        prev = c
    return tuple(out)


def sequence_probability_bruteforce(grid: PosteriorGrid, labels) -> float:
    """Sum of path probabilities over all (K+1)^T paths collapsing to
    ``labels``.  Exists as an independent oracle; guarded to tiny grids."""
    if grid.num_frames > BRUTE_FORCE_MAX_T or grid.num_classes > BRUTE_FORCE_MAX_K:
        raise InstanceTooLargeError(
            f"brute force limited to T<={BRUTE_FORCE_MAX_T}, K<={BRUTE_FORCE_MAX_K}"
        )
    target = tuple(int(c) for c in labels)
    total = 0.0
    probs = grid.probs
    blank = grid.blank
    for path in itertools.product(range(blank + 1), repeat=grid.num_frames):
        if collapse_path(path, blank) == target:
            p = 1.0
            for t, c in enumerate(path):
                p *= probs[t, c]
            total += p
    return total


def all_sequence_probabilities_bruteforce(grid: PosteriorGrid) -> dict[tuple[int, ...], float]:
    """Brute-force map of every reachable collapsed sequence to its total
    path mass.  Enumerates all (K+1)^T paths (columnwise, vectorized),
    multiplying row probabilities directly and collapsing by definition;
    shares no machinery with the lattice forward algorithm.  Same guard as
    :func:`sequence_probability_bruteforce`."""
    if grid.num_frames > BRUTE_FORCE_MAX_T or grid.num_classes > BRUTE_FORCE_MAX_K:
        raise InstanceTooLargeError(
            f"brute force limited to T<={BRUTE_FORCE_MAX_T}, K<={BRUTE_FORCE_MAX_K}"
        )
    probs = grid.probs
    blank = grid.blank
    T = grid.num_frames
    C = blank + 1
    n_paths = C**T
    # column t of the path table cycles with period C^(T-t)
    idx = np.arange(n_paths)
    paths = np.empty((n_paths, T), dtype=np.int64)
    for t in range(T):
        paths[:, t] = (idx // C ** (T - 1 - t)) % C
    mass = np.ones(n_paths)
    for t in range(T):
        mass *= probs[t, paths[:, t]]
    # encode each path's collapsed sequence as a base-(C+1) integer
    keys = np.zeros(n_paths, dtype=np.int64)
    prev = np.full(n_paths, -1, dtype=np.int64)
    for t in range(T):
        col = paths[:, t]
        emit = (col != blank) & (col != prev)
        keys[emit] = keys[emit] * (C + 1) + col[emit] + 1
        prev = col
    uniq, inverse = np.unique(keys, return_inverse=True)
    sums = np.zeros(len(uniq))
    np.add.at(sums, inverse, mass)
    totals: dict[tuple[int, ...], float] = {}
    for key, total in zip(uniq.tolist(), sums.tolist()):
        seq = []
        while key:
            seq.append(key % (C + 1) - 1)
            key //= C + 1
        totals[tuple(reversed(seq))] = total
    return totals


def _logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def _forward_scalar(logp, labels, blank) -> float:
    """Plain-Python lattice recursion; faster than numpy for tiny grids."""
    T = logp.shape[0]
    S = 2 * len(labels) + 1
    lattice = [blank if j % 2 == 0 else labels[j // 2] for j in range(S)]
    alpha = [NEG_INF] * S
    alpha[0] = logp[0, blank]
    if S > 1:
        alpha[1] = logp[0, labels[0]]
    for t in range(1, T):
        row = logp[t]
        new = [NEG_INF] * S
        for j in range(S):
            acc = alpha[j]
            if j >= 1:
                acc = _logaddexp(acc, alpha[j - 1])
            if j >= 3 and j % 2 == 1 and lattice[j] != lattice[j - 2]:
                acc = _logaddexp(acc, alpha[j - 2])
            new[j] = acc + row[lattice[j]]
        alpha = new
    if S == 1:
        return float(alpha[0])
    return float(_logaddexp(alpha[-1], alpha[-2]))


def sequence_log_probability(grid: PosteriorGrid, labels) -> float:
    """CTC forward algorithm on the blank-interleaved label lattice."""
    labels = [int(c) for c in labels]
    blank = grid.blank
    if any(not 0 <= c < blank for c in labels):
        raise ShapeMismatchError("label out of range (blank not allowed in labels)")
    T = grid.num_frames
    L = len(labels)
    if L > T:
        return NEG_INF
    logp = grid.log()
    if T * (2 * L + 1) <= 4096:
        return _forward_scalar(logp, labels, blank)
    # Lattice: blank, l1, blank, l2, ..., lL, blank  (2L+1 states)
    S = 2 * L + 1
    lattice = np.full(S, blank, dtype=np.intp)
    lattice[1::2] = labels
    # Skip transition j-2 -> j allowed for label states with distinct
    # predecessor label.
    can_skip = np.zeros(S, dtype=bool)
    for j in range(3, S, 2):
        can_skip[j] = lattice[j] != lattice[j - 2]

    alpha = np.full(S, NEG_INF)
    alpha[0] = logp[0, blank]
    if S > 1:
        alpha[1] = logp[0, labels[0]]
    for t in range(1, T):
        stay = alpha
        step = np.full(S, NEG_INF)
        step[1:] = alpha[:-1]
        merged = np.logaddexp(stay, step)
        skip = np.full(S, NEG_INF)
        skip[2:] = alpha[:-2]
        skip[~can_skip] = NEG_INF
        merged = np.logaddexp(merged, skip)
        alpha = merged + logp[t, lattice]
    if S == 1:
        return float(alpha[0])
    return float(np.logaddexp(alpha[-1], alpha[-2]))


def sequence_probability(grid: PosteriorGrid, labels) -> float:
    return math.exp(sequence_log_probability(grid, labels))


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

def _viterbi_path_for_sequence(logp: np.ndarray, labels: list[int], blank: int):
    """Most probable alignment path that collapses to ``labels``.

    Returns (state index per frame, log path probability).
    """
    T = logp.shape[0]
    L = len(labels)
    S = 2 * L + 1
    lattice = np.full(S, blank, dtype=np.intp)
    lattice[1::2] = labels
    can_skip = np.zeros(S, dtype=bool)
    for j in range(3, S, 2):
        can_skip[j] = lattice[j] != lattice[j - 2]

    delta = np.full(S, NEG_INF)
    delta[0] = logp[0, blank]
    if S > 1:
        delta[1] = logp[0, labels[0]]
    choice = np.zeros((T, S), dtype=np.int8)  # 0 stay, 1 step, 2 skip
    for t in range(1, T):
        stay = delta
        step = np.full(S, NEG_INF)
        step[1:] = delta[:-1]
        skip = np.full(S, NEG_INF)
        skip[2:] = delta[:-2]
        skip[~can_skip] = NEG_INF
        stacked = np.stack([stay, step, skip])
        best = np.argmax(stacked, axis=0)
        choice[t] = best
        delta = stacked[best, np.arange(S)] + logp[t, lattice]

    if S == 1:
        end = 0
    else:
        end = S - 1 if delta[S - 1] >= delta[S - 2] else S - 2
    log_prob = float(delta[end])
    states = np.empty(T, dtype=np.intp)
    j = int(end)
    for t in range(T - 1, -1, -1):
        states[t] = j
        j -= int(choice[t, j])
    return states, log_prob


def _emissions_from_states(logp, states, lattice_labels, confidence_mode: str):
    """Emit frame and confidence per label state visited by a path."""
    emits = []
    T = len(states)
    probs = np.exp(logp)
    t = 0
    while t < T:
        j = states[t]
        if j % 2 == 1:  # label state
            start = t
            while t + 1 < T and states[t + 1] == j:
                t += 1
            label = lattice_labels[j]
            if confidence_mode == "max":
                conf = float(probs[start : t + 1, label].max())
            else:
                conf = float(probs[start, label])
            emits.append((label, start, conf))
        t += 1
    return emits


def _sequence_from_emissions(emits, grid: PosteriorGrid, log_prob) -> PhoneSequence:
    phones = tuple(
        DecodedPhone(symbol=grid.symbol(c), emit_frame=frame, confidence=conf)
        for c, frame, conf in emits
    )
    return PhoneSequence(
        phones=phones,
        duration_seconds=grid.num_frames * grid.frame_seconds,
        log_prob=log_prob,
        frame_seconds=grid.frame_seconds,
    )


def best_path_decode(grid: PosteriorGrid, confidence_mode: str = "first") -> PhoneSequence:
    """Frame-wise argmax path, CTC-collapsed.

    Ties within a row resolve to the lowest class index.  The emitted
    frame is the first frame of each collapsed run; the confidence is the
    posterior there (or the run maximum with ``confidence_mode='max'``).
    """
    path = np.argmax(grid.probs, axis=1)
    log_prob = path_log_prob(grid, path)
    blank = grid.blank
    emits = []
    prev = -1
    probs = grid.probs
    for t, c in enumerate(path):
        if c != prev:
            prev = int(c)
            if c != blank:
                emits.append([int(c), t, float(probs[t, c])])
        elif c != blank and confidence_mode == "max":
            emits[-1][2] = max(emits[-1][2], float(probs[t, c]))
    return _sequence_from_emissions([tuple(e) for e in emits], grid, log_prob)


def beam_search_decode(
    grid: PosteriorGrid,
    beam_width: int = 20,
    merge_prefixes: bool = True,
    confidence_mode: str = "first",
) -> PhoneSequence:
    """Prefix beam search over the posterior grid.

    With ``merge_prefixes`` (default) the beam ranks collapsed prefixes by
    their total path mass, so the returned score approximates the sequence
    probability rather than a single path's.  With ``merge_prefixes=False``
    the beam ranks raw alignment paths; width 1 then coincides with greedy
    best-path decoding.  Per-phone confidences are read from the most
    probable path consistent with the winning sequence.
    """
    if beam_width < 1:
        raise ValueError("beam width must be >= 1")
    logp = grid.log()
    labels, log_prob = backend.beam_search(
        np.ascontiguousarray(logp), grid.blank, beam_width, merge_prefixes
    )
    labels = [int(c) for c in labels]
    if labels:
        lattice_labels = np.full(2 * len(labels) + 1, grid.blank, dtype=np.intp)
        lattice_labels[1::2] = labels
        states, _ = _viterbi_path_for_sequence(logp, labels, grid.blank)
        emits = _emissions_from_states(logp, states, lattice_labels, confidence_mode)
    else:
        emits = []
    return _sequence_from_emissions(emits, grid, log_prob)


# ---------------------------------------------------------------------------
# Phone error rate
# ---------------------------------------------------------------------------

def levenshtein(a, b) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    a = list(a)
    b = list(b)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != cb),
            )
        prev = cur
    return prev[len(b)]


def phone_error_rate(reference, hypothesis) -> float:
    """Levenshtein distance divided by reference length.

    Accepts PhoneSequence objects or plain symbol sequences.
    """
    ref = reference.symbols() if isinstance(reference, PhoneSequence) else tuple(reference)
    hyp = hypothesis.symbols() if isinstance(hypothesis, PhoneSequence) else tuple(hypothesis)
    if len(ref) == 0:
        raise EmptyReferenceError("reference sequence must be non-empty")
    return levenshtein(ref, hyp) / len(ref)
