"""WAV ingestion and the flat binary feature/trace container.

Only RIFF PCM, 16-bit signed little-endian, mono is accepted; anything
else is rejected with a precise error.  Feature tensors (and hidden-state
traces, which reuse the container with 1 channel) are stored as:

    magic "PFPF" | u32 version | u32 frames | u32 bands | u32 channels |
    row-major float32 little-endian data
"""

from __future__ import annotations

import struct
import wave

import numpy as np

from .dsp import AudioBuffer, FeatureTensor
from .errors import FormatError

FEATURE_MAGIC = b"PFPF"
FEATURE_VERSION = 1


def load_wav(path) -> AudioBuffer:
    try:
        with wave.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            n = fh.getnframes()
            raw = fh.readframes(n)
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: not a readable RIFF PCM WAV file ({exc})") from None
    if channels != 1:
        raise FormatError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise FormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    if n == 0:
        raise FormatError(f"{path}: empty audio stream")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioBuffer.from_samples(samples, rate)


def save_wav(path, buf: AudioBuffer) -> None:
    peak = np.max(np.abs(buf.samples))
    if peak > 1.0:
        raise FormatError(f"{path}: samples outside [-1, 1] (peak {peak:.6g})")
    pcm = np.clip(np.round(buf.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(buf.sample_rate)
        fh.writeframes(pcm.tobytes())


def write_feature_blob(path, frames: np.ndarray) -> None:
    if frames.ndim == 2:
        frames = frames[:, :, None]
    if frames.ndim != 3:
        raise FormatError("feature blob expects a (frames, bands, channels) array")
    data = np.ascontiguousarray(frames, dtype="<f4")
    header = FEATURE_MAGIC + struct.pack(
        "<IIII", FEATURE_VERSION, data.shape[0], data.shape[1], data.shape[2]
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_feature_blob(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(20)
        if len(header) != 20 or header[:4] != FEATURE_MAGIC:
            raise FormatError(f"{path}: not a feature container (bad magic)")
        version, n_frames, bands, channels = struct.unpack("<IIII", header[4:])
        if version != FEATURE_VERSION:
            raise FormatError(f"{path}: unsupported container version {version}")
        payload = fh.read()
    expected = 4 * n_frames * bands * channels
    if len(payload) != expected:
        raise FormatError(
            f"{path}: truncated payload ({len(payload)} bytes, expected {expected})"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n_frames, bands, channels)
    return np.ascontiguousarray(data)


def write_features(path, tensor: FeatureTensor) -> None:
    write_feature_blob(path, tensor.frames)


def read_features(path, frame_hop_seconds: float = 0.005) -> FeatureTensor:
    return FeatureTensor(read_feature_blob(path), frame_hop_seconds=frame_hop_seconds)


def write_feature_csv(path, frames: np.ndarray) -> None:
    """Human-inspectable dump: one row per (frame, channel)."""
    if frames.ndim == 2:
        frames = frames[:, :, None]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("frame,channel," + ",".join(f"band{i}" for i in range(frames.shape[1])) + "\n")
        for t in range(frames.shape[0]):
            for ch in range(frames.shape[2]):
                row = ",".join(f"{v:.6g}" for v in frames[t, :, ch])
                fh.write(f"{t},{ch},{row}\n")
