"""Quick oracle suites behind the ``selftest`` command.

Each suite re-derives expected values from an independent reference
(enumeration, scalar loops, closed forms) and checks the production path
against it.  Intentionally smaller than the full pytest suite; meant as a
fast installation check.
"""

from __future__ import annotations

import math

import numpy as np

from . import ctc, dsp, stats
from .footprint import pca_fit_1d, pca_project
from .inventory import FINE_CLASSES, build_default_inventory
from .model import layers as L
from .model.lstm import lstm_direction


def _random_grid(rng, T, K):
    rows = rng.exponential(size=(T, K + 1))
    rows /= rows.sum(axis=1, keepdims=True)
    return ctc.PosteriorGrid(rows)


def suite_inventory():
    inv = build_default_inventory()
    assert len(inv) == 35
    sizes = [len(inv.members_of(lab, "fine")) for lab in FINE_CLASSES if lab != "Silence"]
    assert sizes == [3, 3, 5, 1, 4, 7, 4, 1, 3, 3], sizes
    assert inv.class_of("p", "fine") == "Unvoiced Stops"
    return "35 phones, fine partition (3,3,5,1,4,7,4,1,3,3)"


def suite_ctc_forward(n_grids=40, seed=1):
    rng = np.random.default_rng(seed)
    checked = 0
    for _ in range(n_grids):
        grid = _random_grid(rng, int(rng.integers(1, 7)), int(rng.integers(1, 4)))
        totals = ctc.all_sequence_probabilities_bruteforce(grid)
        mass = 0.0
        for seq, expected in totals.items():
            got = ctc.sequence_probability(grid, seq)
            assert abs(math.log(got) - math.log(expected)) <= 1e-9
            mass += got
            checked += 1
        assert abs(mass - 1.0) <= 1e-9
    return f"{checked} sequence probabilities match enumeration; mass conserved"


def suite_beam_search(seed=2):
    rows = np.array([[0.4, 0.6], [0.4, 0.6]])
    grid = ctc.PosteriorGrid(rows, labels=("a",))
    greedy = ctc.best_path_decode(grid)
    beam = ctc.beam_search_decode(grid, beam_width=2)
    assert greedy.symbols() == () and math.isclose(math.exp(greedy.log_prob), 0.36)
    assert beam.symbols() == ("a",) and math.isclose(math.exp(beam.log_prob), 0.64)
    rng = np.random.default_rng(seed)
    for _ in range(10):
        T, K = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        g = _random_grid(rng, T, K)
        totals = ctc.all_sequence_probabilities_bruteforce(g)
        best = min(totals, key=lambda s: (-totals[s], s))
        decoded = ctc.beam_search_decode(g, beam_width=(K + 1) ** T)
        assert tuple(int(p.symbol) for p in decoded.phones) == best
    return "greedy 0.36 vs beam 0.64 divergence; wide beam = exhaustive argmax"


def suite_layers(seed=3):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((5, 6, 2)).astype(np.float32)
    kernel = (0.5 * rng.standard_normal((3, 3, 2, 4))).astype(np.float32)
    got = L.conv2d(x, kernel, (1, 2))
    t_out, f_out = 5, 3
    xp = np.pad(x.astype(np.float64), ((1, 1), (0, 1), (0, 0)))
    for t in range(t_out):
        for f in range(f_out):
            for co in range(4):
                acc = 0.0
                for dt in range(3):
                    for df in range(3):
                        for ci in range(2):
                            acc += xp[t + dt, 2 * f + df, ci] * kernel[dt, df, ci, co]
                assert abs(got[t, f, co] - acc) <= 1e-5
    # LSTM against a 2-step scalar recurrence
    h = 3
    w_ih = (0.4 * rng.standard_normal((4 * h, 2))).astype(np.float32)
    w_hh = (0.4 * rng.standard_normal((4 * h, h))).astype(np.float32)
    bias = (0.4 * rng.standard_normal(4 * h)).astype(np.float32)
    xs = rng.standard_normal((2, 2)).astype(np.float32)
    got = lstm_direction(xs, w_ih, w_hh, bias)
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    hv, cv = [0.0] * h, [0.0] * h
    for t in range(2):
        gates = [float(bias[g]) + sum(float(w_ih[g, d]) * float(xs[t, d]) for d in range(2))
                 + sum(float(w_hh[g, k]) * hv[k] for k in range(h))
                 for g in range(4 * h)]
        for k in range(h):
            cv[k] = sig(gates[h + k]) * cv[k] + sig(gates[k]) * math.tanh(gates[2 * h + k])
            hv[k] = sig(gates[3 * h + k]) * math.tanh(cv[k])
        assert np.allclose(got[t], hv, atol=1e-6)
    return "conv vs nested loops; LSTM vs scalar recurrence"


def suite_dsp(seed=4):
    t = np.arange(8000) / 16000.0
    buf = dsp.AudioBuffer(0.25 * np.sin(2 * np.pi * 1000.0 * t), 16000)
    norm = dsp.rms_normalize(buf, -10.0)
    assert abs(norm.rms() - 10 ** -0.5) <= 1e-6
    shifted = dsp.AudioBuffer(buf.samples + 0.2, 16000)
    assert abs(dsp.remove_dc(shifted).samples.mean()) <= 1e-9
    for snr in (10.0, 15.0, 20.0):
        noisy = dsp.add_noise_at_snr(buf, snr, seed=seed)
        noise = noisy.samples - buf.samples
        realized = 10 * np.log10(np.mean(buf.samples**2) / np.mean(noise**2))
        assert abs(realized - snr) <= 0.1
    amp, _ = dsp.stft_amp_phase(buf, dsp.DspConfig())
    assert int(np.argmax(amp.mean(axis=0))) == round(1000 * 2048 / 16000)
    return "RMS -10 dB, DC removal, SNR {10,15,20} +/- 0.1 dB, sine bin 128"


def suite_stats():
    assert abs(stats.spearman_rho([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) <= 1e-12
    assert abs(stats.cohens_d([0.0, 1.0, 2.0], [-1.0, 0.0, 1.0]) - 1.0) <= 1e-12
    t, _, p = stats.welch_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert t == 0.0 and abs(p - 1.0) <= 1e-12
    return "rho=0.8, d=1.0, (t,p)=(0,1) worked examples"


def suite_per():
    assert ctc.phone_error_rate(("p", "a", "t"), ("p", "a", "t")) == 0.0
    assert abs(ctc.phone_error_rate(("p", "a", "t"), ("p", "t", "a")) - 2 / 3) <= 1e-12
    assert ctc.phone_error_rate(("p", "a"), ()) == 1.0
    return "PER 0, 2/3, 1.0 hand cases"


def suite_pca(seed=5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((40, 2)) * np.array([0.4, 0.1])
    model = pca_fit_1d(X)
    assert abs(np.linalg.norm(model.component) - 1.0) <= 1e-9
    proj = pca_project(model, X)
    assert abs(proj.mean()) <= 1e-9
    angles = np.arange(0.0, math.pi, 1e-4)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    centered = X - X.mean(axis=0)
    variances = ((centered @ dirs.T) ** 2).sum(axis=0) / (len(X) - 1)
    assert model.eigenvalue >= variances.max() - 1e-9
    assert model.eigenvalue - variances.max() <= 1e-6
    return "unit component, zero-mean projections, grid-search optimal variance"


SUITES = (
    ("inventory", suite_inventory),
    ("ctc-forward", suite_ctc_forward),
    ("beam-search", suite_beam_search),
    ("layer-oracles", suite_layers),
    ("dsp-contracts", suite_dsp),
    ("stats", suite_stats),
    ("per", suite_per),
    ("pca", suite_pca),
)


def run_selftest(print_fn=print) -> bool:
    ok = True
    for name, fn in SUITES:
        try:
            detail = fn()
            print_fn(f"PASS {name}: {detail}")
        except AssertionError as exc:
            ok = False
            print_fn(f"FAIL {name}: {exc}")
        except Exception as exc:  # unexpected breakage is also a failure
            ok = False
            print_fn(f"FAIL {name}: {type(exc).__name__}: {exc}")
    return ok
