import numpy as np
import pytest

from phonoprint.dsp import FeatureTensor
from phonoprint.errors import ConfigMismatchError, IncompleteWeightsError, ShapeMismatchError
from phonoprint.model import ModelGraph, generate_weights, model_forward, output_labels


@pytest.fixture(scope="module")
def ctc_graph():
    return ModelGraph.build("ctc")


@pytest.fixture(scope="module")
def ctc_weights():
    return generate_weights(seed=0, variant="ctc")


def expected_chain(t2):
    """The published output-size column for an even input length 2T."""
    t = t2 // 2
    return [
        ("input", (t2, 128, 2)),
        ("stem1", (t2, 64, 60)),
        ("stem2", (t, 64, 120)),
        ("stem3", (t, 32, 160)),
        ("stem4", (t, 16, 200)),
        ("res1a", (t, 16, 200)),
        ("res1b", (t, 16, 200)),
        ("red1", (t, 8, 340)),
        ("res2a", (t, 8, 340)),
        ("res2b", (t, 8, 340)),
        ("red2", (t, 4, 580)),
        ("res3a", (t, 4, 580)),
        ("res3b", (t, 4, 580)),
        ("dsconv", (t, 300)),
        ("lstm1", (t, 480)),
        ("lstm2", (t, 480)),
        ("head", (t, 36)),
    ]


def test_shape_chain_matches_published_column(ctc_graph):
    rng = np.random.default_rng(0)
    for _ in range(25):
        t2 = 2 * int(rng.integers(20, 1001))
        assert ctc_graph.shape_chain(t2) == expected_chain(t2)


def test_parameter_counts_near_published_totals():
    ctc = ModelGraph.build("ctc").count_parameters()
    framewise = ModelGraph.build("framewise").count_parameters()
    assert abs(ctc - 7_200_000) / 7_200_000 < 0.10
    assert abs(framewise - 6_600_000) / 6_600_000 < 0.10


def test_empty_graph_has_zero_parameters():
    assert ModelGraph(layers=()).count_parameters() == 0


def test_unknown_variant_rejected():
    with pytest.raises(ConfigMismatchError):
        ModelGraph.build("hybrid")


def test_forward_shapes_and_row_sums(ctc_graph, ctc_weights):
    rng = np.random.default_rng(1)
    frames = rng.standard_normal((40, 128, 2)).astype(np.float32)
    probs, trace = ctc_graph.forward(frames, ctc_weights.tensors)
    assert probs.shape == (20, 36)
    assert trace.shape == (20, 480)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(probs >= 0.0)


def test_odd_frame_dropped(ctc_graph, ctc_weights):
    rng = np.random.default_rng(2)
    frames = rng.standard_normal((41, 128, 2)).astype(np.float32)
    probs, _ = ctc_graph.forward(frames, ctc_weights.tensors)
    assert probs.shape[0] == 20


def test_forward_deterministic(ctc_graph, ctc_weights):
    rng = np.random.default_rng(3)
    frames = rng.standard_normal((30, 128, 2)).astype(np.float32)
    p1, t1 = ctc_graph.forward(frames, ctc_weights.tensors)
    p2, t2 = ctc_graph.forward(frames.copy(), ctc_weights.tensors)
    assert np.array_equal(p1, p2)
    assert np.array_equal(t1, t2)


def test_incomplete_weights_rejected(ctc_graph, ctc_weights):
    partial = dict(ctc_weights.tensors)
    partial.pop("head.weight")
    frames = np.zeros((10, 128, 2), np.float32)
    with pytest.raises(IncompleteWeightsError):
        ctc_graph.forward(frames, partial)


def test_wrong_band_count_rejected(ctc_graph, ctc_weights):
    with pytest.raises(ShapeMismatchError):
        ctc_graph.forward(np.zeros((10, 64, 2), np.float32), ctc_weights.tensors)


def test_model_forward_wraps_grid(ctc_weights):
    feats = FeatureTensor(
        np.random.default_rng(4).standard_normal((24, 128, 2)).astype(np.float32)
    )
    grid, trace = model_forward(feats, ctc_weights)
    assert grid.num_frames == 12
    assert grid.num_classes == 35
    assert grid.labels[0] == "sil"
    assert grid.frame_seconds == pytest.approx(0.01)
    grid.validate()
    assert trace.shape == (12, 480)


def test_framewise_labels():
    labels = output_labels("framewise")
    assert len(labels) == 44
    assert labels[0] == "sil"
    assert "tʃ" in labels


def test_framewise_forward_shapes():
    graph = ModelGraph.build("framewise")
    weights = generate_weights(seed=1, variant="framewise")
    frames = np.random.default_rng(5).standard_normal((20, 128, 2)).astype(np.float32)
    probs, trace = graph.forward(frames, weights.tensors)
    assert probs.shape == (10, 44)
    assert trace.shape == (10, 400)
