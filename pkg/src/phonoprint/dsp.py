"""Audio front end: resampling, level normalization, noise augmentation
and the dual-channel log-Mel feature tensors.

The fixed pipeline order is resample -> RMS normalize -> DC removal ->
optional noise -> featurize.  Features hold 128 Mel bands x 2 channels
per frame: channel 0 carries the Mel-filtered log10 amplitude spectrum,
channel 1 the Mel-filtered phase (log-compressed by default after mapping
the principal value into [0, 2pi); see ``DspConfig.phase_log``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import upfirdn

from .errors import (
    AmplitudeRangeError,
    ConfigMismatchError,
    ShapeMismatchError,
    SilentInputError,
    TooShortInputError,
    UnsupportedRateError,
)

# Kaiser beta for ~80 dB stopband attenuation of the resampler filter.
_KAISER_BETA = 7.857
_TAPS_PER_PHASE = 64


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ShapeMismatchError("audio must be a non-empty 1-D sequence")
        if self.sample_rate <= 0:
            raise UnsupportedRateError(f"sample rate must be positive: {self.sample_rate}")

    @classmethod
    def from_samples(cls, samples, sample_rate: int) -> "AudioBuffer":
        """Ingestion constructor: rejects samples outside [-1, 1]."""
        buf = cls(np.asarray(samples, dtype=np.float64), sample_rate)
        peak = np.max(np.abs(buf.samples))
        if peak > 1.0:
            raise AmplitudeRangeError(f"samples outside [-1, 1] (peak {peak:.6g})")
        return buf

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))


@dataclass(frozen=True)
class DspConfig:
    target_rate: int = 16000
    target_rms_db: float = -10.0
    window_ms: float = 25.0
    hop_ms: float = 5.0
    fft_points: int = 2048
    mel_bands: int = 128
    fmin: float = 0.0
    fmax: float = 8000.0
    log_epsilon: float = 1e-10
    phase_log: bool = True

    def __post_init__(self):
        if not self.window_ms > self.hop_ms > 0:
            raise ConfigMismatchError("need window_ms > hop_ms > 0")
        if self.fft_points < self.window_samples:
            raise ConfigMismatchError("fft_points must cover the analysis window")
        if not 0 <= self.fmin < self.fmax <= self.target_rate / 2:
            raise ConfigMismatchError("need 0 <= fmin < fmax <= Nyquist")
        if self.log_epsilon <= 0:
            raise ConfigMismatchError("log_epsilon must be positive")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_ms * self.target_rate / 1000.0))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_ms * self.target_rate / 1000.0))

    @property
    def frame_hop_seconds(self) -> float:
        return self.hop_ms / 1000.0

    @property
    def num_bins(self) -> int:
        return self.fft_points // 2 + 1

    def replace(self, **kwargs) -> "DspConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class FeatureTensor:
    frames: np.ndarray  # (T', bands, 2) float32
    frame_hop_seconds: float = 0.005
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.frames.ndim != 3:
            raise ShapeMismatchError("feature tensor must be T x bands x channels")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


def frame_count(num_samples: int, cfg: DspConfig) -> int:
    """Closed-form frame count: 1 + floor((N - window) / hop)."""
    return 1 + (num_samples - cfg.window_samples) // cfg.hop_samples


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited polyphase resampling (windowed sinc, 64 taps/phase)."""
    if target_rate <= 0:
        raise UnsupportedRateError(f"cannot resample to {target_rate} Hz")
    if target_rate == buf.sample_rate:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)
    g = math.gcd(target_rate, buf.sample_rate)
    up = target_rate // g
    down = buf.sample_rate // g

    n_taps = _TAPS_PER_PHASE * up + 1
    cutoff = min(1.0 / up, 1.0 / down)  # relative to the upsampled Nyquist
    n = np.arange(n_taps) - (n_taps - 1) / 2
    h = up * cutoff * np.sinc(cutoff * n) * np.kaiser(n_taps, _KAISER_BETA)

    # Prepend zeros so the filter delay is an integer number of output samples.
    half = (n_taps - 1) // 2
    pre = (-half) % down
    h = np.concatenate([np.zeros(pre), h])
    delay = (half + pre) // down

    n_out = -(-len(buf.samples) * up // down)  # ceil
    y = upfirdn(h, buf.samples, up=up, down=down)
    y = y[delay : delay + n_out]
    if len(y) < n_out:
        y = np.pad(y, (0, n_out - len(y)))
    return AudioBuffer(y, target_rate)


def remove_dc(buf: AudioBuffer) -> AudioBuffer:
    return AudioBuffer(buf.samples - buf.samples.mean(), buf.sample_rate)


def rms_normalize(buf: AudioBuffer, target_db: float) -> AudioBuffer:
    rms = buf.rms()
    if rms == 0.0:
        raise SilentInputError("cannot normalize an all-zero signal")
    target = 10.0 ** (target_db / 20.0)
    return AudioBuffer(buf.samples * (target / rms), buf.sample_rate)


def add_noise_at_snr(buf: AudioBuffer, snr_db: float, seed: int) -> AudioBuffer:
    """Add white Gaussian noise scaled to the exact requested SNR."""
    power = float(np.mean(buf.samples**2))
    if power == 0.0:
        raise SilentInputError("SNR undefined for an all-zero signal")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(buf.samples))
    noise_power = power / 10.0 ** (snr_db / 10.0)
    noise *= np.sqrt(noise_power / np.mean(noise**2))
    return AudioBuffer(buf.samples + noise, buf.sample_rate)


def hann_window(length: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)


def stft_amp_phase(buf: AudioBuffer, cfg: DspConfig):
    """Hann-windowed frames zero-padded to the FFT size.

    Returns (amplitude, phase), both (T', fft/2+1); phase is the principal
    value in (-pi, pi].
    """
    if buf.sample_rate != cfg.target_rate:
        raise UnsupportedRateError(
            f"expected {cfg.target_rate} Hz input, got {buf.sample_rate} Hz"
        )
    win = cfg.window_samples
    hop = cfg.hop_samples
    x = buf.samples
    if len(x) < win:
        raise TooShortInputError(f"need at least {win} samples, got {len(x)}")
    n_frames = frame_count(len(x), cfg)
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * hann_window(win)[None, :]
    spec = np.fft.rfft(frames, n=cfg.fft_points, axis=1)
    return np.abs(spec), np.angle(spec)


def mel_scale(freq_hz):
    """mel(f) = 2595 * log10(1 + f / 700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(freq_hz, dtype=np.float64) / 700.0)


def mel_filterbank(cfg: DspConfig) -> np.ndarray:
    """Triangular filters, peak 1, centers equally spaced on the Mel scale.

    Centers span [fmin, fmax] inclusive so the band edges keep nonzero
    weight; the outermost filters are half-triangles.  Shape is
    (mel_bands, fft/2 + 1).
    """
    centers = np.linspace(mel_scale(cfg.fmin), mel_scale(cfg.fmax), cfg.mel_bands)
    spacing = centers[1] - centers[0]
    bin_mels = mel_scale(np.arange(cfg.num_bins) * cfg.target_rate / cfg.fft_points)
    rising = (bin_mels[None, :] - (centers[:, None] - spacing)) / spacing
    falling = ((centers[:, None] + spacing) - bin_mels[None, :]) / spacing
    bank = np.maximum(0.0, np.minimum(rising, falling))
    bank[:, bin_mels > mel_scale(cfg.fmax)] = 0.0
    bank[:, bin_mels < mel_scale(cfg.fmin)] = 0.0
    return bank


def featurize(buf: AudioBuffer, cfg: DspConfig | None = None) -> FeatureTensor:
    """Dual-channel log-Mel features of a prepared (16 kHz) buffer.

    Both spectrograms are log10-compressed first and Mel filtered after;
    the phase channel maps the principal value into [0, 2pi) before the
    log unless ``phase_log`` is off, in which case the raw Mel-filtered
    phase is stored.
    """
    cfg = cfg or DspConfig()
    amp, phase = stft_amp_phase(buf, cfg)
    bank = mel_filterbank(cfg).T  # (bins, bands)
    ch0 = np.log10(amp + cfg.log_epsilon) @ bank
    if cfg.phase_log:
        shifted = np.where(phase < 0.0, phase + 2.0 * np.pi, phase)
        ch1 = np.log10(shifted + cfg.log_epsilon) @ bank
    else:
        ch1 = phase @ bank
    frames = np.stack([ch0, ch1], axis=-1).astype(np.float32)
    if not np.all(np.isfinite(frames)):
        raise ShapeMismatchError("non-finite values in feature tensor")
    return FeatureTensor(frames=frames, frame_hop_seconds=cfg.frame_hop_seconds)


def preprocess(
    buf: AudioBuffer,
    cfg: DspConfig | None = None,
    snr_db: float | None = None,
    seed: int = 0,
) -> AudioBuffer:
    """The fixed conditioning chain ahead of featurize."""
    cfg = cfg or DspConfig()
    buf = resample(buf, cfg.target_rate)
    buf = rms_normalize(buf, cfg.target_rms_db)
    buf = remove_dc(buf)
    if snr_db is not None:
        buf = add_noise_at_snr(buf, snr_db, seed)
    return buf


def featurize_file_pipeline(
    buf: AudioBuffer,
    cfg: DspConfig | None = None,
    snr_db: float | None = None,
    seed: int = 0,
) -> FeatureTensor:
    cfg = cfg or DspConfig()
    return featurize(preprocess(buf, cfg, snr_db=snr_db, seed=seed), cfg)
