"""Frame-based features: STFT magnitude, log-mel, MFCC, raw frames.

Conventions (the reference papers leave them open, so they are pinned
here and carried in FeatureConfig): HTK mel scale, triangular filters
with unit peak, periodic Hann window, no pre-emphasis, natural log with
a small positive floor, orthonormal DCT-II.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .audio import AudioClip
from .errors import DataError

FEATURE_TYPES = ("mel", "mfcc", "raw", "external")

EXTERNAL_MAGIC = b"RLFT"


@dataclass(frozen=True)
class FeatureConfig:
    fft_size: int = 400
    window_size: int = 400
    hop: int = 160
    sample_rate: int = 16000
    n_mels: int = 64
    n_mfcc: int = 20
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-10
    normalize: bool = True  # per-utterance mean/variance, applied after extraction

    def __post_init__(self):
        if self.window_size > self.fft_size:
            raise DataError("window_size must be <= fft_size")
        if self.hop <= 0:
            raise DataError("hop must be positive")
        if self.n_mfcc > self.n_mels:
            raise DataError("n_mfcc must be <= n_mels")
        if not 0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise DataError("need 0 <= fmin < fmax <= sample_rate/2")
        if self.log_floor <= 0:
            raise DataError("log_floor must be positive")

    def frame_count(self, n_samples: int) -> int:
        if n_samples < self.window_size:
            raise DataError(
                f"clip of {n_samples} samples is shorter than one window "
                f"({self.window_size})"
            )
        return 1 + (n_samples - self.window_size) // self.hop

    def dims_for(self, feature_type: str) -> int:
        if feature_type == "mel":
            return self.n_mels
        if feature_type == "mfcc":
            return self.n_mfcc
        if feature_type == "raw":
            return self.window_size
        raise DataError(f"no fixed width for feature type {feature_type!r}")


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def raw_frames(clip: AudioClip, config: FeatureConfig) -> np.ndarray:
    """Windowless sample slices at the STFT framing: frames x window_size."""
    frames = config.frame_count(len(clip))
    out = np.empty((frames, config.window_size))
    for i in range(frames):
        start = i * config.hop
        out[i] = clip.samples[start : start + config.window_size]
    return out


def stft_magnitude(clip: AudioClip, config: FeatureConfig) -> np.ndarray:
    """Hann-windowed magnitude spectrogram: frames x (fft_size//2 + 1)."""
    frames = raw_frames(clip, config)
    windowed = frames * hann_window(config.window_size)
    return np.abs(np.fft.rfft(windowed, n=config.fft_size, axis=1))


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(config: FeatureConfig) -> np.ndarray:
    """Triangular unit-peak filters: n_mels x (fft_size//2 + 1)."""
    n_bins = config.fft_size // 2 + 1
    bin_freqs = np.arange(n_bins) * config.sample_rate / config.fft_size
    mel_points = np.linspace(
        hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.n_mels + 2
    )
    edges = mel_to_hz(mel_points)
    bank = np.zeros((config.n_mels, n_bins))
    for k in range(config.n_mels):
        lo, center, hi = edges[k], edges[k + 1], edges[k + 2]
        up = (bin_freqs - lo) / (center - lo)
        down = (hi - bin_freqs) / (hi - center)
        bank[k] = np.maximum(0.0, np.minimum(up, down))
    return bank


def filter_centers_hz(config: FeatureConfig) -> np.ndarray:
    mel_points = np.linspace(
        hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.n_mels + 2
    )
    return mel_to_hz(mel_points)[1:-1]


def log_mel(clip: AudioClip, config: FeatureConfig) -> np.ndarray:
    """Log mel spectrogram: frames x n_mels, values >= log(log_floor)."""
    power = np.square(stft_magnitude(clip, config))
    energies = power @ mel_filterbank(config).T
    return np.log(np.maximum(energies, config.log_floor))


def dct_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Orthonormal DCT-II matrix, n_out x n_in."""
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    mat = np.cos(np.pi * (2 * n + 1) * k / (2 * n_in))
    mat *= np.sqrt(2.0 / n_in)
    mat[0] *= np.sqrt(0.5)
    return mat


def mfcc(clip: AudioClip, config: FeatureConfig) -> np.ndarray:
    """MFCCs: orthonormal DCT-II over log-mel bins, frames x n_mfcc."""
    return log_mel(clip, config) @ dct_matrix(config.n_mfcc, config.n_mels).T


def normalize_features(features: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Per-utterance, per-dimension mean/variance normalization."""
    mean = features.mean(axis=0, keepdims=True)
    std = features.std(axis=0, keepdims=True)
    return (features - mean) / (std + eps)


def extract(clip: AudioClip, config: FeatureConfig, feature_type: str) -> np.ndarray:
    """Extract one utterance's features, honoring config.normalize."""
    if feature_type == "mel":
        feats = log_mel(clip, config)
    elif feature_type == "mfcc":
        feats = mfcc(clip, config)
    elif feature_type == "raw":
        feats = raw_frames(clip, config)
    else:
        raise DataError(f"unknown feature type {feature_type!r}")
    return normalize_features(feats) if config.normalize else feats


# --- external (precomputed) feature files -----------------------------------

def save_external_features(matrix: np.ndarray, path) -> None:
    """Write a frames x dims float32 matrix in the RLFT container."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {matrix.shape}")
    with open(path, "wb") as f:
        f.write(EXTERNAL_MAGIC)
        f.write(struct.pack("<II", matrix.shape[0], matrix.shape[1]))
        f.write(matrix.tobytes())


def load_external_features(path) -> np.ndarray:
    """Read an RLFT file; returns a float32 frames x dims matrix."""
    with open(path, "rb") as f:
        head = f.read(12)
        if len(head) < 12 or head[:4] != EXTERNAL_MAGIC:
            raise DataError(f"{path}: not an external feature file")
        frames, dims = struct.unpack("<II", head[4:12])
        payload = f.read()
    expected = frames * dims * 4
    if len(payload) != expected:
        raise DataError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    matrix = np.frombuffer(payload, dtype="<f4").reshape(frames, dims)
    if not np.all(np.isfinite(matrix)):
        raise DataError(f"{path}: non-finite feature values")
    return matrix
