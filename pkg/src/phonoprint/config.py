"""Pipeline configuration and the reproducibility ledger.

Defaults encode the published processing constants (25/5 ms windowing,
2048 FFT points, 128 Mel bands, -10 dB RMS target, beam width 20).
Configs load from a JSON file; command-line flags override file values.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dsp import DspConfig
from .errors import FormatError
from .footprint import ReportConfig

DEFAULT_BEAM_WIDTH = 20


@dataclass(frozen=True)
class PipelineConfig:
    dsp: DspConfig = field(default_factory=DspConfig)
    model_variant: str = "ctc"
    weights_path: str | None = None
    beam_width: int = DEFAULT_BEAM_WIDTH
    merge_prefixes: bool = True
    confidence_mode: str = "first"
    mpp_mode: str = "count"
    display_threshold: float = 0.02
    lips_cuts: tuple = (3.0, 5.0)
    tongue_cuts: tuple = (3.0, 5.0)
    intelligibility_cuts: tuple = (2.0,)
    total_cuts: tuple = (20.0, 30.0)
    snr_db: float | None = None
    seed: int = 0
    threads: int = 1
    out_dir: str = "."

    def report_config(self) -> ReportConfig:
        return ReportConfig(
            mpp_mode=self.mpp_mode,
            display_threshold=self.display_threshold,
            lips_cuts=tuple(self.lips_cuts),
            tongue_cuts=tuple(self.tongue_cuts),
            intelligibility_cuts=tuple(self.intelligibility_cuts),
            total_cuts=tuple(self.total_cuts),
        )

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["dsp"] = asdict(self.dsp)
        return obj

    def hash(self) -> str:
        canonical = json.dumps(self.to_json_obj(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        dsp_over = kwargs.pop("dsp", None)
        cfg = replace(self, **kwargs)
        if dsp_over:
            cfg = replace(cfg, dsp=replace(cfg.dsp, **dsp_over))
        return cfg


def load_config(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON config ({exc})") from None
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    dsp_raw = raw.pop("dsp", {})
    known = {f for f in PipelineConfig.__dataclass_fields__ if f != "dsp"}
    unknown = set(raw) - known
    if unknown:
        raise FormatError(f"{path}: unknown config keys {sorted(unknown)}")
    for key in ("lips_cuts", "tongue_cuts", "intelligibility_cuts", "total_cuts"):
        if key in raw:
            raw[key] = tuple(raw[key])
    try:
        dsp_cfg = DspConfig(**dsp_raw)
    except TypeError as exc:
        raise FormatError(f"{path}: bad dsp section ({exc})") from None
    return PipelineConfig(dsp=dsp_cfg, **raw)


def worker_count(config_threads: int | None = None) -> int:
    """Worker cap: explicit setting, bounded by PHONOPRINT_THREADS."""
    limit = os.environ.get("PHONOPRINT_THREADS")
    threads = config_threads or 1
    if limit:
        try:
            threads = min(threads, max(1, int(limit)))
        except ValueError:
            raise FormatError(f"PHONOPRINT_THREADS must be an integer, got {limit!r}")
    return max(1, threads)


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunLedger:
    """What ran against what: config hash, input checksums, outcomes.

    The ledger hash covers config, inputs and per-file status only, so
    identical configuration and inputs reproduce the identical hash.
    """

    config_hash: str
    inputs: dict[str, str] = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)
    versions: dict[str, str] = field(default_factory=lambda: {
        "phonoprint": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
    })

    def add_input(self, path) -> None:
        self.inputs[str(path)] = file_sha256(path)

    def set_status(self, path, status: str) -> None:
        self.files[str(path)] = status

    def hash(self) -> str:
        canonical = json.dumps(
            {"config": self.config_hash, "inputs": self.inputs, "files": self.files},
            sort_keys=True,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def write(self, path) -> None:
        obj = {
            "config_hash": self.config_hash,
            "inputs": dict(sorted(self.inputs.items())),
            "files": dict(sorted(self.files.items())),
            "versions": self.versions,
            "ledger_hash": self.hash(),
        }
        Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
