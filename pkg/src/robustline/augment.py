"""SpecAugment-style feature masking and waveform speed perturbation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip
from .errors import DataError


@dataclass(frozen=True)
class SpecAugmentPolicy:
    """Masking/perturbation limits.

    fill_value of None means "per-utterance mean", computed over the
    matrix being masked. Mask widths are drawn uniformly in
    [0, max_width], so a policy bounds masking rather than forcing it.
    """

    max_time_masks: int = 2
    max_time_mask_width: int = 10
    max_freq_masks: int = 2
    max_freq_mask_width: int = 8
    speed_factors: tuple[float, ...] = (0.9, 1.0, 1.1)
    fill_value: float | None = None

    def __post_init__(self):
        if min(self.max_time_masks, self.max_time_mask_width) < 0:
            raise DataError("time mask limits must be >= 0")
        if min(self.max_freq_masks, self.max_freq_mask_width) < 0:
            raise DataError("freq mask limits must be >= 0")
        if any(f <= 0 for f in self.speed_factors):
            raise DataError("speed factors must be positive")


def spec_augment(
    features: np.ndarray, policy: SpecAugmentPolicy, rng: np.random.Generator
) -> np.ndarray:
    """Mask random time/frequency stripes; unmasked cells are untouched."""
    if features.ndim != 2 or features.size == 0:
        raise DataError("features must be a non-empty frames x bins matrix")
    out = features.copy()
    frames, bins = out.shape
    fill = policy.fill_value if policy.fill_value is not None else float(out.mean())

    for _ in range(policy.max_time_masks):
        width = int(rng.integers(0, policy.max_time_mask_width + 1))
        start = int(rng.integers(0, max(frames - width, 0) + 1))
        out[start : start + width, :] = fill
    for _ in range(policy.max_freq_masks):
        width = int(rng.integers(0, policy.max_freq_mask_width + 1))
        start = int(rng.integers(0, max(bins - width, 0) + 1))
        out[:, start : start + width] = fill
    return out


def speed_perturb(clip: AudioClip, factor: float) -> AudioClip:
    """Resample the time axis by `factor` (>1 is faster/shorter).

    Linear interpolation; factor 1.0 is the identity.
    """
    if factor <= 0:
        raise DataError(f"speed factor must be positive, got {factor}")
    if factor == 1.0:
        return clip
    n = len(clip)
    out_len = int(round(n / factor))
    if out_len < 1:
        raise DataError(f"speed factor {factor} leaves no samples")
    positions = np.arange(out_len) * factor
    samples = np.interp(positions, np.arange(n), clip.samples)
    return AudioClip(samples, clip.sample_rate)
