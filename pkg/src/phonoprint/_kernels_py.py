"""Pure numpy/Python reference kernels.

These are the import-time fallback for the compiled extension and the
ground truth its outputs are compared against.  Both implementations must
accumulate in the same order so results agree to float rounding.
"""

from __future__ import annotations

import numpy as np

NEG_INF = -np.inf


def lstm_sequence(pre_gates: np.ndarray, w_hh: np.ndarray) -> np.ndarray:
    """Run one LSTM direction over precomputed input projections.

    pre_gates: (T, 4H) = x_t @ W_ih^T + b, gate order (i, f, g, o).
    w_hh: (4H, H) recurrent weights.
    Returns the hidden state sequence (T, H); h0 = c0 = 0.
    """
    T, four_h = pre_gates.shape
    H = four_h // 4
    hs = np.empty((T, H), dtype=np.float32)
    h = np.zeros(H, dtype=np.float32)
    c = np.zeros(H, dtype=np.float32)
    for t in range(T):
        gates = pre_gates[t] + w_hh @ h
        i = _sigmoid(gates[:H])
        f = _sigmoid(gates[H : 2 * H])
        g = np.tanh(gates[2 * H : 3 * H])
        o = _sigmoid(gates[3 * H :])
        c = f * c + i * g
        h = o * np.tanh(c)
        hs[t] = h
    return hs


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def beam_search(logp: np.ndarray, blank: int, width: int, merge: bool):
    """Prefix beam search over a (T, C) log-posterior grid.

    Returns (labels, log_prob) for the best surviving collapsed sequence.
    With ``merge`` the score is the merged prefix mass (sequence
    probability estimate); without it, the best raw path score.
    """
    if merge:
        return _beam_search_merged(logp, blank, width)
    return _beam_search_paths(logp, blank, width)


def _beam_search_merged(logp, blank, width):
    T, C = logp.shape
    # prefix -> [log p ending in blank, log p ending in non-blank]
    beams: list[tuple[tuple[int, ...], float, float]] = [((), 0.0, NEG_INF)]
    for t in range(T):
        row = logp[t]
        cand: dict[tuple[int, ...], list[float]] = {}
        for prefix, pb, pnb in beams:
            ptot = np.logaddexp(pb, pnb)
            entry = cand.get(prefix)
            if entry is None:
                entry = cand[prefix] = [NEG_INF, NEG_INF]
            # stay on blank, or repeat the final symbol without a blank gap
            entry[0] = np.logaddexp(entry[0], ptot + row[blank])
            if prefix:
                entry[1] = np.logaddexp(entry[1], pnb + row[prefix[-1]])
            for c in range(C):
                if c == blank:
                    continue
                if prefix and c == prefix[-1]:
                    # extending with the same symbol needs a blank in between
                    ext = pb + row[c]
                else:
                    ext = ptot + row[c]
                child = prefix + (c,)
                centry = cand.get(child)
                if centry is None:
                    cand[child] = [NEG_INF, ext]
                else:
                    centry[1] = np.logaddexp(centry[1], ext)
        ranked = sorted(
            cand.items(),
            key=lambda kv: (-np.logaddexp(kv[1][0], kv[1][1]), kv[0]),
        )
        beams = [(prefix, e[0], e[1]) for prefix, e in ranked[:width]]
    best_prefix, pb, pnb = beams[0]
    return list(best_prefix), float(np.logaddexp(pb, pnb))


def _beam_search_paths(logp, blank, width):
    T, C = logp.shape
    # (prefix, last emitted class or blank) -> best raw path log prob
    beams: list[tuple[tuple[int, ...], int, float]] = [((), blank, 0.0)]
    for t in range(T):
        row = logp[t]
        cand: dict[tuple[tuple[int, ...], int], float] = {}
        for prefix, last, lp in beams:
            for c in range(C):
                if c == blank:
                    key = (prefix, blank)
                elif c == last:
                    key = (prefix, c)
                else:
                    key = (prefix + (c,), c)
                score = lp + row[c]
                old = cand.get(key)
                if old is None or score > old:
                    cand[key] = score
        ranked = sorted(cand.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
        beams = [(k[0], k[1], v) for k, v in ranked[:width]]
    best: dict[tuple[int, ...], float] = {}
    for prefix, _last, lp in beams:
        if prefix not in best or lp > best[prefix]:
            best[prefix] = lp
    prefix = min(best, key=lambda p: (-best[p], p))
    return list(prefix), float(best[prefix])
