# distutils: language = c++
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: LSTM recurrence and merged prefix beam search.

Semantics mirror ``_kernels_py`` exactly; accumulation order is kept
identical so both backends agree to float rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport expf, tanhf, log1p, exp, INFINITY
from libc.string cimport memcpy
from cython.operator cimport dereference as deref
from libcpp.algorithm cimport sort
from libcpp.pair cimport pair
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector
from scipy.linalg.cython_blas cimport sgemv

cnp.import_array()

cdef double NEG_INF = -INFINITY
# Candidate keys below this are trie node ids; above, packed (node, symbol)
# pairs for children that do not exist in the trie yet.
cdef long long NEW_CHILD_OFFSET = (<long long>1) << 40


def lstm_sequence(float[:, ::1] pre_gates, float[:, ::1] w_hh):
    """One LSTM direction over precomputed input projections.

    pre_gates: (T, 4H) with gate order (i, f, g, o); w_hh: (4H, H).
    Returns the (T, H) hidden state sequence; h0 = c0 = 0.
    """
    cdef int T = pre_gates.shape[0]
    cdef int four_h = pre_gates.shape[1]
    cdef int H = four_h // 4
    if w_hh.shape[0] != four_h or w_hh.shape[1] != H:
        raise ValueError("recurrent weight shape mismatch")

    out_arr = np.empty((T, H), dtype=np.float32)
    cdef float[:, ::1] out = out_arr
    gates_arr = np.empty(four_h, dtype=np.float32)
    cdef float[::1] gates = gates_arr
    h_arr = np.zeros(H, dtype=np.float32)
    cdef float[::1] h = h_arr
    c_arr = np.zeros(H, dtype=np.float32)
    cdef float[::1] c = c_arr

    # Row-major (4H, H) is column-major (H, 4H); transposed sgemv gives
    # gates += w_hh @ h.
    cdef int m = H, n = four_h, inc = 1
    cdef float one = 1.0
    cdef int t, k
    cdef float ig, fg, gg, og

    with nogil:
        for t in range(T):
            memcpy(&gates[0], &pre_gates[t, 0], four_h * sizeof(float))
            sgemv("T", &m, &n, &one, &w_hh[0, 0], &m, &h[0], &inc, &one,
                  &gates[0], &inc)
            for k in range(H):
                ig = 1.0 / (1.0 + expf(-gates[k]))
                fg = 1.0 / (1.0 + expf(-gates[H + k]))
                gg = tanhf(gates[2 * H + k])
                og = 1.0 / (1.0 + expf(-gates[3 * H + k]))
                c[k] = fg * c[k] + ig * gg
                h[k] = og * tanhf(c[k])
                out[t, k] = h[k]
    return out_arr


cdef inline double lae(double a, double b) nogil:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


cdef list _materialize(vector[int]& parent, vector[int]& symv, long long key, int C):
    """Collapsed symbol sequence for a candidate key (for tie-breaking)."""
    cdef list seq = []
    cdef long long node
    if key >= NEW_CHILD_OFFSET:
        node = (key - NEW_CHILD_OFFSET) // C
        seq.append(<int>((key - NEW_CHILD_OFFSET) % C))
    else:
        node = key
    while node > 0:
        seq.append(symv[<int>node])
        node = parent[<int>node]
    seq.reverse()
    return seq


def beam_search_merged(double[:, ::1] logp, int blank, int width):
    """Prefix beam search merging path mass per collapsed prefix.

    Returns (labels, log prefix mass) of the best surviving sequence.
    """
    cdef int T = logp.shape[0]
    cdef int C = logp.shape[1]

    # Trie of kept prefixes; node 0 is the empty prefix.
    cdef vector[int] parent, symv
    parent.push_back(-1)
    symv.push_back(-1)
    cdef unordered_map[long long, int] children

    cdef vector[int] beam_node
    cdef vector[double] beam_pb, beam_pnb
    beam_node.push_back(0)
    beam_pb.push_back(0.0)
    beam_pnb.push_back(NEG_INF)

    cdef unordered_map[long long, int] cand_index
    cdef vector[long long] cand_key
    cdef vector[double] cand_pb, cand_pnb
    cdef vector[pair[double, int]] ranking

    cdef int t, i, c, j, nbeams, ncand, keep, node, new_id
    cdef long long key, packed
    cdef double pb, pnb, ptot, ext
    cdef const double* row
    cdef unordered_map[long long, int].iterator hit

    for t in range(T):
        row = &logp[t, 0]
        cand_index.clear()
        cand_key.clear()
        cand_pb.clear()
        cand_pnb.clear()
        nbeams = <int>beam_node.size()
        for i in range(nbeams):
            node = beam_node[i]
            pb = beam_pb[i]
            pnb = beam_pnb[i]
            ptot = lae(pb, pnb)

            # stay: blank extension, or repeat of the final symbol
            hit = cand_index.find(node)
            if hit == cand_index.end():
                j = <int>cand_key.size()
                cand_index[node] = j
                cand_key.push_back(node)
                cand_pb.push_back(NEG_INF)
                cand_pnb.push_back(NEG_INF)
            else:
                j = deref(hit).second
            cand_pb[j] = lae(cand_pb[j], ptot + row[blank])
            if node != 0:
                cand_pnb[j] = lae(cand_pnb[j], pnb + row[symv[node]])

            for c in range(C):
                if c == blank:
                    continue
                if node != 0 and c == symv[node]:
                    ext = pb + row[c]
                else:
                    ext = ptot + row[c]
                packed = (<long long>node) * C + c
                hit = children.find(packed)
                if hit != children.end():
                    key = deref(hit).second
                else:
                    key = NEW_CHILD_OFFSET + packed
                hit = cand_index.find(key)
                if hit == cand_index.end():
                    j = <int>cand_key.size()
                    cand_index[key] = j
                    cand_key.push_back(key)
                    cand_pb.push_back(NEG_INF)
                    cand_pnb.push_back(NEG_INF)
                else:
                    j = deref(hit).second
                cand_pnb[j] = lae(cand_pnb[j], ext)

        ncand = <int>cand_key.size()
        ranking.clear()
        for j in range(ncand):
            ranking.push_back(pair[double, int](-lae(cand_pb[j], cand_pnb[j]), j))
        sort(ranking.begin(), ranking.end())
        keep = width if width < ncand else ncand
        _fix_ties(ranking, parent, symv, cand_key, keep, C)

        beam_node.clear()
        beam_pb.clear()
        beam_pnb.clear()
        for i in range(keep):
            j = ranking[i].second
            key = cand_key[j]
            if key >= NEW_CHILD_OFFSET:
                packed = key - NEW_CHILD_OFFSET
                new_id = <int>parent.size()
                parent.push_back(<int>(packed // C))
                symv.push_back(<int>(packed % C))
                children[packed] = new_id
                node = new_id
            else:
                node = <int>key
            beam_node.push_back(node)
            beam_pb.push_back(cand_pb[j])
            beam_pnb.push_back(cand_pnb[j])

    cdef list labels = []
    node = beam_node[0]
    while node > 0:
        labels.append(symv[node])
        node = parent[node]
    labels.reverse()
    return labels, lae(beam_pb[0], beam_pnb[0])


cdef void _fix_ties(vector[pair[double, int]]& ranking, vector[int]& parent,
                    vector[int]& symv, vector[long long]& cand_key,
                    int keep, int C):
    """Reorder exact score ties lexicographically (shorter prefix first)."""
    cdef int i = 0, j, k, n = <int>ranking.size()
    cdef list seqs
    while i < n and i < keep + 1:
        j = i
        while j + 1 < n and ranking[j + 1].first == ranking[i].first:
            j += 1
        if j > i:
            seqs = sorted(
                [
                    (_materialize(parent, symv, cand_key[ranking[k].second], C),
                     ranking[k].second)
                    for k in range(i, j + 1)
                ]
            )
            for k in range(i, j + 1):
                ranking[k].second = <int>seqs[k - i][1]
        i = j + 1
