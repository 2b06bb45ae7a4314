"""Weight container: named float32 tensors with a CRC-checked binary file.

Layout:
    magic "PFPW" | u32 version | u32 tensor count
    per tensor: u32 name length | UTF-8 name | u8 rank | u32 dims... |
                raw float32 little-endian values
    trailing u32 CRC32 over everything before it
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from ..errors import FormatError, IncompleteWeightsError
from .graph import ModelGraph

WEIGHT_MAGIC = b"PFPW"
WEIGHT_VERSION = 1


class WeightStore:
    """Immutable map of tensor name -> float32 array plus the variant tag."""

    def __init__(self, tensors: dict[str, np.ndarray], variant: str | None = None):
        self.tensors = {k: np.ascontiguousarray(v, dtype=np.float32)
                        for k, v in tensors.items()}
        self.variant = variant or infer_variant(self.tensors)

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __len__(self) -> int:
        return len(self.tensors)

    def validate_against(self, graph: ModelGraph) -> None:
        """Every tensor the graph needs must resolve at the exact shape."""
        problems = []
        for name, shape in graph.param_shapes().items():
            if name not in self.tensors:
                problems.append(f"missing {name} {shape}")
            elif self.tensors[name].shape != shape:
                problems.append(
                    f"{name}: stored {self.tensors[name].shape}, expected {shape}"
                )
        if problems:
            raise IncompleteWeightsError(
                f"{len(problems)} weight problems, first: {problems[:3]}"
            )


def infer_variant(tensors: dict) -> str:
    head = tensors.get("head.weight")
    if head is None:
        return "ctc"
    return "ctc" if head.shape[0] == 36 else "framewise"


def save_weights(path, store: WeightStore) -> None:
    parts = [WEIGHT_MAGIC, struct.pack("<II", WEIGHT_VERSION, len(store.tensors))]
    for name, tensor in store.tensors.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", tensor.ndim))
        parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    blob = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF))


def load_weights(path) -> WeightStore:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:4] != WEIGHT_MAGIC:
        raise FormatError(f"{path}: not a weight container (bad magic)")
    body, crc_raw = blob[:-4], blob[-4:]
    (expected_crc,) = struct.unpack("<I", crc_raw)
    if zlib.crc32(body) & 0xFFFFFFFF != expected_crc:
        raise FormatError(f"{path}: CRC mismatch, file corrupt")
    version, count = struct.unpack("<II", body[4:12])
    if version != WEIGHT_VERSION:
        raise FormatError(f"{path}: unsupported weight version {version}")
    offset = 12
    tensors: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<I", body, offset)
            offset += 4
            name = body[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", body, offset)
            offset += 1
            dims = struct.unpack_from(f"<{rank}I", body, offset)
            offset += 4 * rank
            size = 4 * int(np.prod(dims)) if rank else 4
            flat = np.frombuffer(body, dtype="<f4", count=int(np.prod(dims)),
                                 offset=offset)
            offset += size
            tensors[name] = flat.reshape(dims).copy()
    except (struct.error, ValueError) as exc:
        raise FormatError(f"{path}: truncated weight container ({exc})") from None
    if offset != len(body):
        raise FormatError(f"{path}: trailing bytes after last tensor")
    return WeightStore(tensors)


def generate_weights(seed: int, variant: str = "ctc") -> WeightStore:
    """Seeded random weights producing finite, non-degenerate posteriors.

    Kernels are scaled by 1/sqrt(fan-in); batch-norm statistics sit near
    the identity so activations stay in a sane range through the stack.
    """
    graph = ModelGraph.build(variant)
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in graph.param_shapes().items():
        if name.endswith(".bn.mean"):
            value = 0.05 * rng.standard_normal(shape)
        elif name.endswith(".bn.var"):
            value = np.maximum(0.25, 1.0 + 0.1 * rng.standard_normal(shape))
        elif name.endswith(".bn.gamma"):
            value = 1.0 + 0.05 * rng.standard_normal(shape)
        elif name.endswith(".bn.beta"):
            value = 0.05 * rng.standard_normal(shape)
        elif name.endswith("bias") or name.endswith("dw_bias") or name.endswith("pw_bias"):
            value = 0.02 * rng.standard_normal(shape)
        else:
            fan_in = int(np.prod(shape[:-1])) if len(shape) > 1 else shape[0]
            if name.endswith(".w_ih") or name.endswith(".w_hh") or name.endswith("head.weight"):
                fan_in = shape[1]
            value = rng.standard_normal(shape) / np.sqrt(fan_in)
        tensors[name] = value.astype(np.float32)
    return WeightStore(tensors, variant=variant)
