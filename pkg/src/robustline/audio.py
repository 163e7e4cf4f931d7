"""Mono audio clips, WAV file I/O, and power measurement.

Clips are float64 sample vectors with amplitudes nominally in [-1, 1].
WAV support is deliberately narrow: RIFF/WAVE, mono, PCM16 or IEEE
float32. Multichannel files are rejected rather than silently downmixed,
and resampling is out of scope (inputs must already be at the target
rate).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError

PCM16_SCALE = 32768.0

# fmt-chunk audio format tags
_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


@dataclass(frozen=True)
class AudioClip:
    """A mono signal: samples (float64) plus its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DataError(f"clip samples must be 1-D, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise DataError("clip contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        """Clip length in seconds."""
        return len(self.samples) / self.sample_rate


def rms_power(clip: AudioClip) -> float:
    """Mean squared amplitude over the full clip (dimensionless).

    This is the power definition used for every SNR computation in the
    toolkit: full-clip, not restricted to speech-active regions.
    """
    if len(clip) == 0:
        raise DataError("cannot measure power of an empty clip")
    return float(np.mean(np.square(clip.samples)))


def read_wav(path) -> AudioClip:
    """Read a mono PCM16 or float32 WAV file, normalized to [-1, 1]."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise DataError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise DataError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        # chunks are word-aligned
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise DataError(f"{path}: missing fmt or data chunk")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if channels != 1:
        raise DataError(f"{path}: multichannel unsupported ({channels} channels)")
    if audio_format == _FMT_PCM and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2")
        samples = raw.astype(np.float64) / PCM16_SCALE
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise DataError(
            f"{path}: unsupported encoding (format {audio_format}, {bits} bits); "
            "only mono PCM16 and IEEE float32 are supported"
        )
    return AudioClip(samples=samples, sample_rate=int(sample_rate))


def write_wav(clip: AudioClip, path, encoding: str = "pcm16") -> None:
    """Write a clip as a mono WAV file.

    Amplitudes must already lie in [-1, 1]; the caller is responsible for
    having applied a clipping policy. PCM16 round-trips within one
    quantization step (max abs error <= 1/32768).
    """
    samples = clip.samples
    if len(samples) and float(np.max(np.abs(samples))) > 1.0:
        raise DataError(
            f"amplitude out of range (max {np.max(np.abs(samples)):.4f} > 1); "
            "apply a clipping policy before writing"
        )
    if encoding == "pcm16":
        audio_format, bits = _FMT_PCM, 16
        quantized = np.clip(np.rint(samples * PCM16_SCALE), -32768, 32767)
        payload = quantized.astype("<i2").tobytes()
    elif encoding == "float32":
        audio_format, bits = _FMT_IEEE_FLOAT, 32
        payload = samples.astype("<f4").tobytes()
    else:
        raise DataError(f"unknown WAV encoding {encoding!r}")

    block_align = bits // 8
    byte_rate = clip.sample_rate * block_align
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt_chunk = b"fmt " + struct.pack(
        "<IHHIIHH", 16, audio_format, 1, clip.sample_rate, byte_rate, block_align, bits
    )
    data_chunk = b"data" + struct.pack("<I", len(payload))
    with open(path, "wb") as f:
        f.write(header + fmt_chunk + data_chunk + payload)
