import math

import numpy as np
import pytest

from phonoprint import backend
from phonoprint.errors import ShapeMismatchError
from phonoprint.model.lstm import bilstm_forward, lstm_direction


def sigmoid(v):
    return 1.0 / (1.0 + math.exp(-v))


def lstm_scalar_oracle(x, w_ih, w_hh, bias):
    """Step-by-step float64 recurrence with explicit scalar loops."""
    T, D = x.shape
    H = w_hh.shape[1]
    h = [0.0] * H
    c = [0.0] * H
    out = np.zeros((T, H))
    for t in range(T):
        gates = []
        for g in range(4 * H):
            acc = float(bias[g])
            for d in range(D):
                acc += float(w_ih[g, d]) * float(x[t, d])
            for k in range(H):
                acc += float(w_hh[g, k]) * h[k]
            gates.append(acc)
        for k in range(H):
            i = sigmoid(gates[k])
            f = sigmoid(gates[H + k])
            g = math.tanh(gates[2 * H + k])
            o = sigmoid(gates[3 * H + k])
            c[k] = f * c[k] + i * g
            h[k] = o * math.tanh(c[k])
            out[t, k] = h[k]
    return out


def random_params(rng, d, h, scale=0.4):
    w_ih = (scale * rng.standard_normal((4 * h, d))).astype(np.float32)
    w_hh = (scale * rng.standard_normal((4 * h, h))).astype(np.float32)
    bias = (scale * rng.standard_normal(4 * h)).astype(np.float32)
    return w_ih, w_hh, bias


def test_zero_weights_give_zero_output():
    x = np.ones((5, 3), dtype=np.float32)
    h = 4
    out = lstm_direction(x, np.zeros((4 * h, 3), np.float32),
                         np.zeros((4 * h, h), np.float32), np.zeros(4 * h, np.float32))
    assert np.array_equal(out, np.zeros((5, h), np.float32))


def test_single_step_forward_equals_backward():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((1, 6)).astype(np.float32)
    params = {}
    for d in ("fw", "bw"):
        w_ih, w_hh, bias = random_params(rng, 6, 5)
        params[f"l.{d}.w_ih"] = params_base = w_ih
        params[f"l.{d}.w_hh"] = w_hh
        params[f"l.{d}.bias"] = bias
    # same weights both directions: halves must agree for T=1
    for key in ("w_ih", "w_hh", "bias"):
        params[f"l.bw.{key}"] = params[f"l.fw.{key}"]
    out = bilstm_forward(x, params, "l")
    assert out.shape == (1, 10)
    assert np.array_equal(out[0, :5], out[0, 5:])


@pytest.mark.parametrize("seed", range(6))
def test_against_scalar_oracle(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 6))
    D = int(rng.integers(1, 7))
    H = int(rng.integers(1, 7))
    x = rng.standard_normal((T, D)).astype(np.float32)
    w_ih, w_hh, bias = random_params(rng, D, H)
    got = lstm_direction(x, w_ih, w_hh, bias)
    expected = lstm_scalar_oracle(x.astype(np.float64), w_ih, w_hh, bias)
    assert np.allclose(got, expected, atol=1e-6)


def test_reverse_direction_matches_reversed_oracle():
    rng = np.random.default_rng(42)
    x = rng.standard_normal((4, 3)).astype(np.float32)
    w_ih, w_hh, bias = random_params(rng, 3, 2)
    got = lstm_direction(x, w_ih, w_hh, bias, reverse=True)
    expected = lstm_scalar_oracle(x[::-1].astype(np.float64), w_ih, w_hh, bias)[::-1]
    assert np.allclose(got, expected, atol=1e-6)


def test_shape_validation():
    with pytest.raises(ShapeMismatchError):
        lstm_direction(np.zeros((3, 4), np.float32), np.zeros((8, 5), np.float32),
                       np.zeros((8, 2), np.float32), np.zeros(8, np.float32))
    with pytest.raises(ShapeMismatchError):
        lstm_direction(np.zeros((3, 5), np.float32), np.zeros((8, 5), np.float32),
                       np.zeros((9, 2), np.float32), np.zeros(8, np.float32))


def test_backend_parity():
    if not backend.have_native():
        pytest.skip("compiled extension not built")
    rng = np.random.default_rng(1)
    active = backend.active_backend()
    try:
        for _ in range(10):
            T = int(rng.integers(1, 40))
            H = int(rng.integers(1, 32))
            pre = rng.standard_normal((T, 4 * H)).astype(np.float32)
            w_hh = (0.4 * rng.standard_normal((4 * H, H))).astype(np.float32)
            backend.set_backend("python")
            py = backend.lstm_sequence(pre, w_hh)
            backend.set_backend("native")
            nat = backend.lstm_sequence(pre, w_hh)
            assert np.allclose(py, nat, atol=1e-5)
    finally:
        backend.set_backend(active)
