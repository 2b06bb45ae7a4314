import wave

import numpy as np
import pytest

from phonoprint import fileio
from phonoprint.dsp import AudioBuffer, FeatureTensor
from phonoprint.errors import FormatError


def test_wav_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    buf = AudioBuffer(rng.uniform(-0.9, 0.9, 4000), 16000)
    path = tmp_path / "a.wav"
    fileio.save_wav(path, buf)
    loaded = fileio.load_wav(path)
    assert loaded.sample_rate == 16000
    assert len(loaded.samples) == 4000
    assert np.max(np.abs(loaded.samples - buf.samples)) < 1.0 / 32768.0


def test_stereo_rejected(tmp_path):
    path = tmp_path / "stereo.wav"
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(2)
        fh.setsampwidth(2)
        fh.setframerate(16000)
        fh.writeframes(b"\x00\x00" * 200)
    with pytest.raises(FormatError, match="mono"):
        fileio.load_wav(path)


def test_8bit_rejected(tmp_path):
    path = tmp_path / "8bit.wav"
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(1)
        fh.setframerate(16000)
        fh.writeframes(b"\x00" * 100)
    with pytest.raises(FormatError, match="16-bit"):
        fileio.load_wav(path)


def test_garbage_rejected(tmp_path):
    path = tmp_path / "not.wav"
    path.write_bytes(b"this is not audio")
    with pytest.raises(FormatError, match="RIFF"):
        fileio.load_wav(path)


def test_feature_blob_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    frames = rng.standard_normal((17, 128, 2)).astype(np.float32)
    path = tmp_path / "f.pfpf"
    fileio.write_feature_blob(path, frames)
    loaded = fileio.read_feature_blob(path)
    assert loaded.shape == (17, 128, 2)
    assert np.array_equal(loaded, frames)


def test_trace_blob_uses_single_channel(tmp_path):
    rng = np.random.default_rng(2)
    trace = rng.standard_normal((9, 480)).astype(np.float32)
    path = tmp_path / "t.pfpf"
    fileio.write_feature_blob(path, trace)
    loaded = fileio.read_feature_blob(path)
    assert loaded.shape == (9, 480, 1)
    assert np.array_equal(loaded[:, :, 0], trace)


def test_blob_truncation_detected(tmp_path):
    frames = np.zeros((4, 8, 2), np.float32)
    path = tmp_path / "f.pfpf"
    fileio.write_feature_blob(path, frames)
    blob = path.read_bytes()
    path.write_bytes(blob[:-8])
    with pytest.raises(FormatError, match="truncated"):
        fileio.read_feature_blob(path)


def test_blob_bad_magic(tmp_path):
    path = tmp_path / "f.pfpf"
    path.write_bytes(b"XXXX" + b"\x00" * 32)
    with pytest.raises(FormatError, match="magic"):
        fileio.read_feature_blob(path)


def test_feature_tensor_wrappers(tmp_path):
    tensor = FeatureTensor(np.ones((5, 3, 2), np.float32), frame_hop_seconds=0.005)
    path = tmp_path / "t.pfpf"
    fileio.write_features(path, tensor)
    loaded = fileio.read_features(path)
    assert np.array_equal(loaded.frames, tensor.frames)
    assert loaded.frame_hop_seconds == pytest.approx(0.005)


def test_feature_csv(tmp_path):
    frames = np.arange(12, dtype=np.float32).reshape(2, 3, 2)
    path = tmp_path / "f.csv"
    fileio.write_feature_csv(path, frames)
    lines = path.read_text().splitlines()
    assert lines[0] == "frame,channel,band0,band1,band2"
    assert len(lines) == 1 + 2 * 2
