"""The phone recognition network: layer stack, shapes, parameters, forward.

The stack follows the published outline: a convolutional stem whose first
layer halves the time axis (features arrive at 5 ms hops, predictions
leave at 10 ms), three pairs of residual inception blocks separated by
frequency-halving reduction blocks, a depthwise separable projection to
300 features per step, two BiLSTM layers, and a linear head.  The ``ctc``
variant uses 240 hidden units and 36 output classes (35 phones + blank);
the ``framewise`` variant uses 200 hidden units and 44 classes (the 35
phones plus 9 composite targets).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ctc import PosteriorGrid
from ..errors import ConfigMismatchError, IncompleteWeightsError, ShapeMismatchError
from ..inventory import build_default_inventory, default_composite_table
from . import layers as L
from .lstm import bilstm_forward

ACTIVATION_SCALE = 0.3
BN_EPSILON = 1e-5
DROPOUT_RATE = 0.10  # training-time only; inference is a no-op

# Optimizer settings used to train the published model; recorded for
# completeness, not consumed anywhere in this package.
TRAINING_HYPERPARAMS = {
    "optimizer": "adam",
    "learning_rate": 1e-3,
    "lr_decay_factor": 0.5,
    "lr_plateau_epochs": 5,
    "batch_size": 20,
    "crop_seconds": 6.0,
    "l2_rate": 1e-4,
    "grad_clip_norm": 1.0,
}


@dataclass(frozen=True)
class ConvSpec:
    name: str
    kt: int
    kf: int
    st: int
    sf: int
    cin: int
    cout: int


@dataclass(frozen=True)
class ResBlockSpec:
    name: str
    channels: int
    reduced: int


@dataclass(frozen=True)
class RedBlockSpec:
    name: str
    cin: int
    cout: int
    reduced: int


@dataclass(frozen=True)
class DsConvSpec:
    name: str
    freq: int
    cin: int
    cout: int


@dataclass(frozen=True)
class BiLstmSpec:
    name: str
    din: int
    hidden: int


@dataclass(frozen=True)
class LinearSpec:
    name: str
    din: int
    dout: int


@dataclass(frozen=True)
class ModelGraph:
    variant: str = "ctc"
    hidden_units: int = 240
    output_classes: int = 36
    activation_scale: float = ACTIVATION_SCALE
    dropout_rate: float = DROPOUT_RATE
    bn_epsilon: float = BN_EPSILON
    input_bands: int = 128
    input_channels: int = 2
    layers: tuple = field(default_factory=tuple)

    @classmethod
    def build(cls, variant: str = "ctc") -> "ModelGraph":
        if variant == "ctc":
            hidden, classes = 240, 36
        elif variant == "framewise":
            hidden, classes = 200, 44
        else:
            raise ConfigMismatchError(f"unknown model variant {variant!r}")
        stack = (
            ConvSpec("stem1", 1, 4, 1, 2, 2, 60),
            ConvSpec("stem2", 5, 1, 2, 1, 60, 120),
            ConvSpec("stem3", 1, 4, 1, 2, 120, 160),
            ConvSpec("stem4", 1, 4, 1, 2, 160, 200),
            ResBlockSpec("res1a", 200, 70),
            ResBlockSpec("res1b", 200, 70),
            RedBlockSpec("red1", 200, 340, 70),
            ResBlockSpec("res2a", 340, 120),
            ResBlockSpec("res2b", 340, 120),
            RedBlockSpec("red2", 340, 580, 120),
            ResBlockSpec("res3a", 580, 200),
            ResBlockSpec("res3b", 580, 200),
            DsConvSpec("dsconv", 4, 580, 300),
            BiLstmSpec("lstm1", 300, hidden),
            BiLstmSpec("lstm2", 2 * hidden, hidden),
            LinearSpec("head", 2 * hidden, classes),
        )
        return cls(variant=variant, hidden_units=hidden, output_classes=classes,
                   layers=stack)

    # -- parameter bookkeeping ------------------------------------------

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        """Every tensor the forward pass resolves, in a fixed order."""
        shapes: dict[str, tuple[int, ...]] = {}

        def bn(prefix, c):
            for stat in ("mean", "var", "gamma", "beta"):
                shapes[f"{prefix}.bn.{stat}"] = (c,)

        for spec in self.layers:
            n = spec.name
            if isinstance(spec, ConvSpec):
                shapes[f"{n}.kernel"] = (spec.kt, spec.kf, spec.cin, spec.cout)
                shapes[f"{n}.bias"] = (spec.cout,)
                bn(n, spec.cout)
            elif isinstance(spec, ResBlockSpec):
                c, r = spec.channels, spec.reduced
                shapes[f"{n}.b1.kernel"] = (1, 1, c, r)
                shapes[f"{n}.b1.bias"] = (r,)
                for k, tag in ((3, "b3"), (5, "b5")):
                    shapes[f"{n}.{tag}_reduce.kernel"] = (1, 1, c, r)
                    shapes[f"{n}.{tag}_reduce.bias"] = (r,)
                    shapes[f"{n}.{tag}_t.kernel"] = (k, 1, r, r)
                    shapes[f"{n}.{tag}_t.bias"] = (r,)
                    shapes[f"{n}.{tag}_f.kernel"] = (1, k, r, r)
                    shapes[f"{n}.{tag}_f.bias"] = (r,)
                shapes[f"{n}.proj.kernel"] = (1, 1, 3 * r, c)
                shapes[f"{n}.proj.bias"] = (c,)
                bn(n, c)
            elif isinstance(spec, RedBlockSpec):
                grow = spec.cout - spec.cin
                shapes[f"{n}.reduce.kernel"] = (1, 1, spec.cin, spec.reduced)
                shapes[f"{n}.reduce.bias"] = (spec.reduced,)
                shapes[f"{n}.conv_t.kernel"] = (3, 1, spec.reduced, grow)
                shapes[f"{n}.conv_t.bias"] = (grow,)
                shapes[f"{n}.conv_f.kernel"] = (1, 3, grow, grow)
                shapes[f"{n}.conv_f.bias"] = (grow,)
            elif isinstance(spec, DsConvSpec):
                shapes[f"{n}.depthwise"] = (spec.freq, spec.cin)
                shapes[f"{n}.dw_bias"] = (spec.cin,)
                shapes[f"{n}.pointwise"] = (spec.cin, spec.cout)
                shapes[f"{n}.pw_bias"] = (spec.cout,)
                bn(n, spec.cout)
            elif isinstance(spec, BiLstmSpec):
                for d in ("fw", "bw"):
                    shapes[f"{n}.{d}.w_ih"] = (4 * spec.hidden, spec.din)
                    shapes[f"{n}.{d}.w_hh"] = (4 * spec.hidden, spec.hidden)
                    shapes[f"{n}.{d}.bias"] = (4 * spec.hidden,)
            elif isinstance(spec, LinearSpec):
                shapes[f"{n}.weight"] = (spec.dout, spec.din)
                shapes[f"{n}.bias"] = (spec.dout,)
        return shapes

    def count_parameters(self) -> int:
        """Trainable parameters: kernels, biases, BN affine pairs."""
        total = 0
        for name, shape in self.param_shapes().items():
            if name.endswith(".bn.mean") or name.endswith(".bn.var"):
                continue
            total += int(np.prod(shape))
        return total

    # -- shapes ----------------------------------------------------------

    def shape_chain(self, t_in: int) -> list[tuple[str, tuple[int, ...]]]:
        """Per-layer output shapes for an even t_in input length."""
        t, f, c = t_in, self.input_bands, self.input_channels
        chain: list[tuple[str, tuple[int, ...]]] = [("input", (t, f, c))]
        width = 0
        for spec in self.layers:
            if isinstance(spec, ConvSpec):
                t = -(-t // spec.st)
                f = -(-f // spec.sf)
                c = spec.cout
                chain.append((spec.name, (t, f, c)))
            elif isinstance(spec, ResBlockSpec):
                chain.append((spec.name, (t, f, spec.channels)))
            elif isinstance(spec, RedBlockSpec):
                f //= 2
                c = spec.cout
                chain.append((spec.name, (t, f, c)))
            elif isinstance(spec, DsConvSpec):
                width = spec.cout
                chain.append((spec.name, (t, width)))
            elif isinstance(spec, BiLstmSpec):
                width = 2 * spec.hidden
                chain.append((spec.name, (t, width)))
            elif isinstance(spec, LinearSpec):
                width = spec.dout
                chain.append((spec.name, (t, width)))
        return chain

    # -- forward ---------------------------------------------------------

    def forward(self, frames: np.ndarray, params: dict) -> tuple[np.ndarray, np.ndarray]:
        """Run the stack over (T', bands, 2) float32 features.

        Returns (posteriors (T, classes) float64, trace (T, 2H) float32)
        with T = floor(T' / 2); an odd trailing frame is dropped so the
        halving stem keeps exact shapes.
        """
        if frames.ndim != 3 or frames.shape[1:] != (self.input_bands, self.input_channels):
            raise ShapeMismatchError(
                f"expected (T, {self.input_bands}, {self.input_channels}) features,"
                f" got {frames.shape}"
            )
        missing = [k for k in self.param_shapes() if k not in params]
        if missing:
            raise IncompleteWeightsError(
                f"{len(missing)} missing tensors, first: {missing[:3]}"
            )
        if frames.shape[0] % 2:
            frames = frames[:-1]
        if frames.shape[0] == 0:
            raise ShapeMismatchError("need at least 2 feature frames")

        def block_params(name):
            skip = len(name) + 1
            return {k[skip:]: v for k, v in params.items() if k.startswith(name + ".")}

        def bn_act(name, x):
            # x is an owned intermediate; normalize and activate in place
            return L.bn_hard_swish_(
                x, params[f"{name}.bn.mean"], params[f"{name}.bn.var"],
                params[f"{name}.bn.gamma"], params[f"{name}.bn.beta"],
                eps=self.bn_epsilon,
            )

        x = np.ascontiguousarray(frames, dtype=np.float32)
        trace = None
        logits = None
        for spec in self.layers:
            n = spec.name
            if isinstance(spec, ConvSpec):
                x = L.conv2d(x, params[f"{n}.kernel"], (spec.st, spec.sf),
                             params[f"{n}.bias"])
                x = bn_act(n, x)
            elif isinstance(spec, ResBlockSpec):
                x = L.residual_inception_block(x, block_params(n), self.activation_scale)
                x = bn_act(n, x)
            elif isinstance(spec, RedBlockSpec):
                x = L.reduction_inception_block(x, block_params(n))
            elif isinstance(spec, DsConvSpec):
                x = L.depthwise_freq_collapse(x, params[f"{n}.depthwise"],
                                              params[f"{n}.dw_bias"])
                x = x @ params[f"{n}.pointwise"] + params[f"{n}.pw_bias"]
                x = bn_act(n, x)
            elif isinstance(spec, BiLstmSpec):
                x = bilstm_forward(x, params, n)
                trace = x
            elif isinstance(spec, LinearSpec):
                logits = x @ params[f"{n}.weight"].T + params[f"{n}.bias"]
            if isinstance(x, np.ndarray) and not np.all(np.isfinite(x)):
                raise ShapeMismatchError(f"non-finite activations after layer {n}")

        posteriors = softmax(np.asarray(logits, dtype=np.float64))
        return posteriors, trace


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def output_labels(variant: str) -> tuple[str, ...]:
    """Class labels in head order (blank excluded for the ctc variant)."""
    inv = build_default_inventory()
    if variant == "ctc":
        return inv.symbols
    if variant == "framewise":
        table = default_composite_table(inv)
        extras = tuple(sorted(table.symbols))
        return inv.symbols + extras
    raise ConfigMismatchError(f"unknown model variant {variant!r}")


def model_forward(features, weights, graph: ModelGraph | None = None,
                  frame_seconds: float = 0.01):
    """Posterior grid plus the last-BiLSTM hidden-state trace.

    ``features`` is a FeatureTensor or raw (T', bands, 2) array; ``weights``
    a WeightStore or plain dict.  For the ctc variant the grid columns are
    the 35 phone symbols followed by the blank class.
    """
    frames = getattr(features, "frames", features)
    params = getattr(weights, "tensors", weights)
    if graph is None:
        variant = getattr(weights, "variant", "ctc")
        graph = ModelGraph.build(variant)
    probs, trace = graph.forward(frames, params)
    labels = None
    if graph.variant == "ctc":
        labels = output_labels("ctc")
    grid = PosteriorGrid(probs, labels=labels, frame_seconds=frame_seconds)
    return grid, trace
