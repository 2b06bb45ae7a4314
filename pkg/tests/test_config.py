import json

import pytest

from phonoprint.config import PipelineConfig, RunLedger, load_config, worker_count
from phonoprint.errors import FormatError
from phonoprint.model.graph import ACTIVATION_SCALE, DROPOUT_RATE, ModelGraph


def test_defaults_encode_published_constants():
    cfg = PipelineConfig()
    assert cfg.dsp.window_ms == 25.0
    assert cfg.dsp.hop_ms == 5.0
    assert cfg.dsp.fft_points == 2048
    assert cfg.dsp.mel_bands == 128
    assert cfg.dsp.target_rms_db == -10.0
    assert cfg.dsp.target_rate == 16000
    assert cfg.beam_width == 20
    assert ACTIVATION_SCALE == 0.3
    assert DROPOUT_RATE == 0.10
    graph = ModelGraph.build("ctc")
    assert graph.hidden_units == 240
    assert graph.output_classes == 36
    framewise = ModelGraph.build("framewise")
    assert framewise.hidden_units == 200
    assert framewise.output_classes == 44


def test_config_file_round_trip(tmp_path):
    cfg = PipelineConfig(beam_width=7, mpp_mode="confidence", seed=11)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg.to_json_obj()), encoding="utf-8")
    loaded = load_config(path)
    assert loaded == cfg
    assert loaded.hash() == cfg.hash()


def test_flag_overrides_win():
    cfg = PipelineConfig(beam_width=7)
    over = cfg.with_overrides(beam_width=3, seed=5, dsp={"mel_bands": 64})
    assert over.beam_width == 3
    assert over.seed == 5
    assert over.dsp.mel_bands == 64
    assert cfg.beam_width == 7  # original untouched


def test_unknown_config_keys_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"beam_widht": 3}', encoding="utf-8")
    with pytest.raises(FormatError, match="unknown config keys"):
        load_config(path)


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{", encoding="utf-8")
    with pytest.raises(FormatError, match="invalid JSON"):
        load_config(path)


def test_worker_count_env_cap(monkeypatch):
    monkeypatch.delenv("PHONOPRINT_THREADS", raising=False)
    assert worker_count(4) == 4
    monkeypatch.setenv("PHONOPRINT_THREADS", "2")
    assert worker_count(4) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv("PHONOPRINT_THREADS", "zebra")
    with pytest.raises(FormatError):
        worker_count(4)


def test_ledger_hash_depends_only_on_config_and_inputs(tmp_path):
    f = tmp_path / "input.bin"
    f.write_bytes(b"payload")
    cfg = PipelineConfig()

    a = RunLedger(config_hash=cfg.hash())
    a.add_input(f)
    a.set_status(tmp_path / "out.pfpf", "ok")

    b = RunLedger(config_hash=cfg.hash())
    b.add_input(f)
    b.set_status(tmp_path / "out.pfpf", "ok")
    b.versions = {"phonoprint": "different"}
    assert a.hash() == b.hash()

    c = RunLedger(config_hash=PipelineConfig(beam_width=3).hash())
    c.add_input(f)
    c.set_status(tmp_path / "out.pfpf", "ok")
    assert c.hash() != a.hash()


def test_ledger_write(tmp_path):
    f = tmp_path / "input.bin"
    f.write_bytes(b"payload")
    ledger = RunLedger(config_hash="abc")
    ledger.add_input(f)
    ledger.write(tmp_path / "ledger.json")
    obj = json.loads((tmp_path / "ledger.json").read_text(encoding="utf-8"))
    assert obj["config_hash"] == "abc"
    assert obj["ledger_hash"] == ledger.hash()
    assert str(f) in obj["inputs"]
    assert "numpy" in obj["versions"]
