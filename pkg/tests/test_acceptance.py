"""Acceptance suite: one test per criterion, each printing a PASS line
with the measured values after its assertions hold."""

import math
import time

import numpy as np
import pytest

from phonoprint import ctc, dsp, fileio, stats, synthetic
from phonoprint.cli import main as cli_main
from phonoprint.footprint import footprint, pca_fit_1d, pca_project
from phonoprint.model import ModelGraph, generate_weights, model_forward
from phonoprint.model import layers as L
from phonoprint.model.lstm import lstm_direction
from phonoprint.selftest import run_selftest
from tests.test_layers import conv2d_naive, res_block_params
from tests.test_lstm import lstm_scalar_oracle, random_params
from tests.test_stats import cohens_d_reference, spearman_reference, welch_reference


def random_grid(rng, T, K):
    rows = rng.exponential(size=(T, K + 1))
    rows /= rows.sum(axis=1, keepdims=True)
    return ctc.PosteriorGrid(rows)


def test_c01_ctc_oracle_equivalence():
    """500 seeded grids: forward DP == enumeration (1e-9, log domain);
    total mass 1 +/- 1e-9; under 60 s."""
    rng = np.random.default_rng(20250809)
    start = time.perf_counter()
    checked = 0
    worst = 0.0
    worst_mass = 0.0
    for _ in range(500):
        T = int(rng.integers(1, 9))
        K = int(rng.integers(1, 5))
        grid = random_grid(rng, T, K)
        totals = ctc.all_sequence_probabilities_bruteforce(grid)
        mass = 0.0
        for seq, expected in totals.items():
            dp = ctc.sequence_probability(grid, seq)
            err = abs(math.log(dp) - math.log(expected))
            worst = max(worst, err)
            assert err <= 1e-9
            mass += dp
            checked += 1
        worst_mass = max(worst_mass, abs(mass - 1.0))
        assert abs(mass - 1.0) <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(f"PASS criterion 1: {checked} sequences over 500 grids, "
          f"max log err {worst:.2e}, max mass err {worst_mass:.2e}, {elapsed:.1f}s")


def test_c02_beam_vs_greedy():
    """Constructed divergence grid plus wide-beam == exhaustive argmax on
    100 random tiny grids."""
    rows = np.array([[0.4, 0.6], [0.4, 0.6]])
    grid = ctc.PosteriorGrid(rows, labels=("a",))
    greedy = ctc.best_path_decode(grid)
    beam = ctc.beam_search_decode(grid, beam_width=2)
    assert greedy.symbols() == ()
    assert math.exp(greedy.log_prob) == pytest.approx(0.36, abs=1e-12)
    assert beam.symbols() == ("a",)
    assert math.exp(beam.log_prob) == pytest.approx(0.64, abs=1e-12)

    rng = np.random.default_rng(7)
    for _ in range(100):
        T = int(rng.integers(1, 5))
        K = int(rng.integers(1, 4))
        g = random_grid(rng, T, K)
        totals = ctc.all_sequence_probabilities_bruteforce(g)
        best = min(totals, key=lambda s: (-totals[s], s))
        decoded = ctc.beam_search_decode(g, beam_width=(K + 1) ** T)
        assert tuple(int(p.symbol) for p in decoded.phones) == best
        assert decoded.log_prob == pytest.approx(math.log(totals[best]), abs=1e-9)
    print("PASS criterion 2: greedy '' (0.36) vs beam 'a' (0.64); "
          "wide beam = exhaustive argmax on 100 grids")


def test_c03_parameter_counts():
    ctc_n = ModelGraph.build("ctc").count_parameters()
    fw_n = ModelGraph.build("framewise").count_parameters()
    assert abs(ctc_n - 7_200_000) / 7_200_000 < 0.10
    assert abs(fw_n - 6_600_000) / 6_600_000 < 0.10
    print(f"PASS criterion 3: ctc {ctc_n:,} params "
          f"({(ctc_n - 7_200_000) / 7_200_000:+.2%} of 7.2M), framewise {fw_n:,} "
          f"({(fw_n - 6_600_000) / 6_600_000:+.2%} of 6.6M)")


def test_c04_shape_chain_on_six_seconds():
    t = np.arange(6 * 16000) / 16000.0
    buf = dsp.AudioBuffer(0.4 * np.sin(2 * np.pi * 320.0 * t), 16000)
    feats = dsp.featurize(buf, dsp.DspConfig())
    assert feats.frames.shape == (1196, 128, 2)
    weights = generate_weights(seed=0, variant="ctc")
    grid, trace = model_forward(feats, weights)
    assert grid.probs.shape == (598, 36)
    assert trace.shape == (598, 480)
    sums = grid.probs.sum(axis=1)
    assert np.max(np.abs(sums - 1.0)) <= 1e-6
    print("PASS criterion 4: 6 s -> 1196x128x2 features -> 598x36 posteriors, "
          f"max row-sum err {np.max(np.abs(sums - 1.0)):.2e}")


def test_c05_layer_oracles():
    rng = np.random.default_rng(11)
    # 70 convolutions vs nested loops
    for _ in range(70):
        kt, kf = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        cin, cout = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        st, sf = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        x = rng.standard_normal((int(rng.integers(4, 9)), int(rng.integers(4, 9)),
                                 cin)).astype(np.float32)
        k = (0.5 * rng.standard_normal((kt, kf, cin, cout))).astype(np.float32)
        assert np.allclose(L.conv2d(x, k, (st, sf)), conv2d_naive(x, k, (st, sf)),
                           atol=1e-5)
    # 70 batch norms vs the scalar formula
    for _ in range(70):
        c = int(rng.integers(1, 6))
        x = rng.standard_normal((int(rng.integers(2, 7)), int(rng.integers(2, 7)),
                                 c)).astype(np.float32)
        mean = rng.normal(size=c)
        var = rng.uniform(0.5, 2.0, size=c)
        gamma = rng.normal(size=c)
        beta = rng.normal(size=c)
        got = L.batchnorm_inference(x, mean, var, gamma, beta, eps=1e-5)
        expected = (x - mean) / np.sqrt(var + 1e-5) * gamma + beta
        assert np.allclose(got, expected, atol=1e-5)
    # 60 BiLSTM directions vs the scalar recurrence
    for _ in range(60):
        T, D, H = (int(rng.integers(1, 5)), int(rng.integers(1, 6)),
                   int(rng.integers(1, 6)))
        x = rng.standard_normal((T, D)).astype(np.float32)
        w_ih, w_hh, bias = random_params(rng, D, H)
        got = lstm_direction(x, w_ih, w_hh, bias)
        expected = lstm_scalar_oracle(x.astype(np.float64), w_ih, w_hh, bias)
        assert np.allclose(got, expected, atol=1e-5)
    # residual block with zeroed projection is the identity map
    x = rng.standard_normal((5, 4, 6)).astype(np.float32)
    params = res_block_params(np.random.default_rng(1), 6, 2)
    params["proj.kernel"] = np.zeros_like(params["proj.kernel"])
    params["proj.bias"] = np.zeros_like(params["proj.bias"])
    out = L.residual_inception_block(x, params, scale=0.3)
    assert np.array_equal(out, x)
    print("PASS criterion 5: 200 layer instances match scalar references at 1e-5; "
          "zeroed-projection residual block == identity")


def test_c06_dsp_contracts():
    t = np.arange(8000) / 16000.0
    buf = dsp.AudioBuffer(0.25 * np.sin(2 * np.pi * 1000.0 * t), 16000)
    norm = dsp.rms_normalize(buf, -10.0)
    rms_err = abs(norm.rms() - 0.3162277660)
    assert rms_err <= 1e-6
    dc = dsp.remove_dc(dsp.AudioBuffer(buf.samples + 0.2, 16000))
    assert abs(dc.samples.mean()) <= 1e-9
    snr_errs = []
    for snr in (10.0, 15.0, 20.0):
        noisy = dsp.add_noise_at_snr(buf, snr, seed=3)
        noise = noisy.samples - buf.samples
        realized = 10 * np.log10(np.mean(buf.samples**2) / np.mean(noise**2))
        snr_errs.append(abs(realized - snr))
        assert abs(realized - snr) <= 0.1
    amp, _ = dsp.stft_amp_phase(buf, dsp.DspConfig())
    peak = int(np.argmax(amp.mean(axis=0)))
    assert abs(peak - round(1000 * 2048 / 16000)) <= 1
    print(f"PASS criterion 6: RMS err {rms_err:.1e}, DC {abs(dc.samples.mean()):.1e}, "
          f"SNR errs {[f'{e:.3f}' for e in snr_errs]} dB, sine bin {peak}")


def _pa_speaker(sid, frames_per_phone):
    from phonoprint.footprint import MfdaScores, Recording, SpeakerRecord

    grid = synthetic.syllable_grid("DDK-pa", reps=10,
                                   frames_per_phone=frames_per_phone, seed=5)
    seq = ctc.beam_search_decode(grid, beam_width=4)
    seq.task = "DDK-pa"
    return SpeakerRecord(
        id=sid, cohort="HC", age=60, gender="f",
        scores=MfdaScores(0, 0, 0, 0, 0, 0, 0),
        recordings=[Recording(task="DDK-pa", sequence=seq)],
    )


def test_c07_footprint_fidelity():
    speakers = [_pa_speaker(f"s{i}", 4) for i in range(4)]
    prof = footprint(speakers, "phone", ("DDK-pa",))
    assert prof.mpp["a"] == pytest.approx(0.50, abs=0.01)
    assert prof.mpp["p"] == pytest.approx(0.50, abs=0.01)
    doubled = [_pa_speaker(f"s{i}", 8) for i in range(4)]
    prof2 = footprint(doubled, "phone", ("DDK-pa",))
    assert prof.mpp == prof2.mpp
    print(f"PASS criterion 7: MPP(a) = {prof.mpp['a']:.3f}, "
          f"MPP(p) = {prof.mpp['p']:.3f}; doubling durations changes no MPP")


def test_c08_statistics_oracles():
    assert stats.spearman_rho([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)
    assert stats.cohens_d([0.0, 1.0, 2.0], [-1.0, 0.0, 1.0]) == pytest.approx(1.0, abs=1e-12)
    t0, _, p0 = stats.welch_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert t0 == 0.0
    assert p0 == pytest.approx(1.0, abs=1e-12)

    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 12))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        a = rng.normal(size=int(rng.integers(2, 12))).tolist()
        b = rng.normal(loc=0.3, size=int(rng.integers(2, 12))).tolist()
        d1 = abs(stats.spearman_rho(x, y) - spearman_reference(x.tolist(), y.tolist()))
        d2 = abs(stats.cohens_d(a, b) - cohens_d_reference(a, b))
        t, dof, _ = stats.welch_t(a, b)
        t_ref, dof_ref = welch_reference(a, b)
        worst = max(worst, d1, d2, abs(t - t_ref), abs(dof - dof_ref))
        assert max(d1, d2, abs(t - t_ref), abs(dof - dof_ref)) <= 1e-10
    print(f"PASS criterion 8: worked examples exact; 1000 instances within "
          f"{worst:.1e} of loop references")


def test_c09_pca_optimality():
    rng = np.random.default_rng(17)
    gaps = []
    for dim in (2, 3):
        X = rng.standard_normal((60, dim)) * (0.3 / np.arange(1, dim + 1))
        model = pca_fit_1d(X)
        assert np.linalg.norm(model.component) == pytest.approx(1.0, abs=1e-9)
        proj = pca_project(model, X)
        assert abs(proj.mean()) <= 1e-9
        centered = X - X.mean(axis=0)
        cov = centered.T @ centered / (len(X) - 1)
        if dim == 2:
            angles = np.arange(0.0, np.pi, 1e-4)
            dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        else:
            theta = np.arange(0.0, np.pi, 1.5e-3)
            phi = np.arange(0.0, np.pi, 1.5e-3)
            tt, pp = np.meshgrid(theta, phi, indexing="ij")
            dirs = np.stack(
                [np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)],
                axis=-1,
            ).reshape(-1, 3)
        variances = np.einsum("nd,de,ne->n", dirs, cov, dirs)
        best = float(variances.max())
        assert model.eigenvalue >= best - 1e-9
        assert model.eigenvalue - best <= 1e-6
        gaps.append(model.eigenvalue - best)
    print(f"PASS criterion 9: PCA beats {len(gaps)} grid searches within "
          f"{[f'{g:.1e}' for g in gaps]}")


def test_c10_phone_error_rate():
    assert ctc.phone_error_rate(("p", "a", "t"), ("p", "a", "t")) == 0.0
    assert ctc.phone_error_rate(("p", "a", "t"), ("p", "t", "a")) == pytest.approx(2 / 3)
    assert ctc.phone_error_rate(("p", "a"), ()) == 1.0
    rng = np.random.default_rng(19)
    for _ in range(1000):
        a, b, c = (
            tuple(rng.integers(0, 4, size=rng.integers(0, 8)).tolist())
            for _ in range(3)
        )
        assert ctc.levenshtein(a, c) <= ctc.levenshtein(a, b) + ctc.levenshtein(b, c)
    print("PASS criterion 10: PER 0 / 2/3 / 1.0 exact; triangle inequality "
          "on 1000 random triples")


def test_c11_end_to_end_budget_and_determinism(tmp_path):
    wav = tmp_path / "synthetic60s.wav"
    fileio.save_wav(wav, synthetic.synthetic_audio(seconds=60.0, seed=0))
    weights = tmp_path / "model.pfpw"

    def pipeline(out_dir):
        assert cli_main(["gen-weights", "--seed", "0", "--out", str(weights)]) == 0
        assert cli_main(["featurize", str(wav), "--out", str(out_dir / "feats"),
                         "--seed", "0"]) == 0
        assert cli_main(["decode", str(out_dir / "feats" / "synthetic60s.pfpf"),
                         "--weights", str(weights), "--out", str(out_dir / "dec"),
                         "--seed", "0"]) == 0

    start = time.perf_counter()
    ok = run_selftest(print_fn=lambda *_: None)
    run1 = tmp_path / "run1"
    pipeline(run1)
    elapsed = time.perf_counter() - start
    assert ok
    assert elapsed < 30.0, f"selftest + 60 s pipeline took {elapsed:.1f}s"

    run2 = tmp_path / "run2"
    pipeline(run2)
    artifacts = [
        ("feats", "synthetic60s.pfpf"),
        ("dec", "synthetic60s.jsonl"),
        ("dec", "synthetic60s.trace.pfpf"),
    ]
    for sub, name in artifacts:
        b1 = (run1 / sub / name).read_bytes()
        b2 = (run2 / sub / name).read_bytes()
        assert b1 == b2, f"{sub}/{name} differs between identical runs"
    print(f"PASS criterion 11: selftest + 60 s pipeline in {elapsed:.1f}s (< 30 s); "
          f"{len(artifacts)} artifacts byte-identical across runs")
