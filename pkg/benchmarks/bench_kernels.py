"""Benchmark the compiled kernels against the pure numpy fallback.

Covers the two hot loops (LSTM recurrence, prefix beam search) plus the
full pipeline on synthetic audio.  Run from the repository root:

    python benchmarks/bench_kernels.py [--seconds 30] [--repeats 3]
"""

import argparse
import time

import numpy as np

from phonoprint import backend, ctc, dsp, synthetic
from phonoprint.model import generate_weights, model_forward


def timeit(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_lstm(repeats):
    rng = np.random.default_rng(0)
    T, H = 4000, 240
    pre = rng.standard_normal((T, 4 * H)).astype(np.float32)
    w_hh = (0.2 * rng.standard_normal((4 * H, H))).astype(np.float32)
    rows = {}
    outs = {}
    for name in available_backends():
        backend.set_backend(name)
        rows[name], outs[name] = timeit(lambda: backend.lstm_sequence(pre, w_hh), repeats)
    check = max_diff(outs)
    return f"lstm T={T} H={H}", rows, check


def bench_beam(repeats):
    grid = synthetic.speech_grid(num_phones=400, substitution_prob=0.2, seed=1)
    logp = np.ascontiguousarray(grid.log())
    rows = {}
    outs = {}
    for name in available_backends():
        backend.set_backend(name)
        rows[name], outs[name] = timeit(
            lambda: backend.beam_search(logp, grid.blank, 20, True), repeats
        )
    labels = {name: tuple(v[0]) for name, v in outs.items()}
    assert len(set(labels.values())) == 1, "backends decoded different sequences"
    scores = [v[1] for v in outs.values()]
    return f"beam T={grid.num_frames} W=20", rows, max(scores) - min(scores)


def bench_pipeline(seconds, repeats):
    buf = synthetic.synthetic_audio(seconds=seconds, seed=0)
    weights = generate_weights(seed=0, variant="ctc")
    feats = dsp.featurize_file_pipeline(buf)

    def run():
        grid, _ = model_forward(feats, weights)
        return ctc.beam_search_decode(grid, beam_width=20)

    rows = {}
    outs = {}
    for name in available_backends():
        backend.set_backend(name)
        rows[name], outs[name] = timeit(run, repeats)
    symbols = {name: seq.symbols() for name, seq in outs.items()}
    assert len(set(symbols.values())) == 1, "backends decoded different sequences"
    return f"forward+decode {seconds:g}s audio", rows, 0.0


def max_diff(outs):
    values = list(outs.values())
    if len(values) < 2:
        return 0.0
    return float(np.max(np.abs(values[0].astype(np.float64) - values[1])))


def available_backends():
    names = ["python"]
    if backend.have_native():
        names.insert(0, "native")
    return names


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seconds", type=float, default=30.0,
                        help="audio length for the pipeline benchmark")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not backend.have_native():
        print("note: compiled extension not built; timing the fallback only")
    active = backend.active_backend()
    benches = [
        bench_lstm(args.repeats),
        bench_beam(args.repeats),
        bench_pipeline(args.seconds, max(1, args.repeats - 1)),
    ]
    backend.set_backend(active)

    width = max(len(name) for name, _, _ in benches)
    print(f"{'benchmark':<{width}}  {'native':>9}  {'python':>9}  {'speedup':>8}  agreement")
    for name, rows, check in benches:
        nat = rows.get("native")
        py = rows["python"]
        nat_s = f"{nat:9.3f}" if nat is not None else "        -"
        speedup = f"{py / nat:7.1f}x" if nat else "       -"
        print(f"{name:<{width}}  {nat_s}  {py:9.3f}  {speedup}  max diff {check:.2e}")


if __name__ == "__main__":
    main()
