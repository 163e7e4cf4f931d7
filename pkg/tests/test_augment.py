import numpy as np
import pytest

from robustline.audio import AudioClip
from robustline.augment import SpecAugmentPolicy, spec_augment, speed_perturb
from robustline.errors import DataError


def test_policy_validation():
    with pytest.raises(DataError):
        SpecAugmentPolicy(max_time_masks=-1)
    with pytest.raises(DataError):
        SpecAugmentPolicy(speed_factors=(0.9, 0.0))


def test_zero_mask_policy_is_identity():
    rng = np.random.default_rng(0)
    feats = rng.standard_normal((40, 16))
    policy = SpecAugmentPolicy(max_time_masks=0, max_freq_masks=0)
    out = spec_augment(feats, policy, np.random.default_rng(1))
    assert np.array_equal(out, feats)
    assert out is not feats


def _find_seed_with_time_mask_width(policy, frames, bins, want_width):
    # fix a seed whose first draw lands on the wanted width
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        if int(rng.integers(0, policy.max_time_mask_width + 1)) == want_width:
            return seed
    raise AssertionError("no seed found")


def test_single_time_mask_exact_extent():
    policy = SpecAugmentPolicy(
        max_time_masks=1, max_time_mask_width=5, max_freq_masks=0, fill_value=-999.0
    )
    frames, bins = 50, 12
    seed = _find_seed_with_time_mask_width(policy, frames, bins, 5)
    feats = np.random.default_rng(42).standard_normal((frames, bins))
    out = spec_augment(feats, policy, np.random.default_rng(seed))
    masked_rows = np.where(np.all(out == -999.0, axis=1))[0]
    assert len(masked_rows) == 5
    assert np.array_equal(masked_rows, np.arange(masked_rows[0], masked_rows[0] + 5))
    untouched = np.delete(np.arange(frames), masked_rows)
    assert np.array_equal(out[untouched], feats[untouched])


def test_masked_cell_count_bounded():
    policy = SpecAugmentPolicy(
        max_time_masks=2,
        max_time_mask_width=6,
        max_freq_masks=2,
        max_freq_mask_width=4,
        fill_value=-999.0,
    )
    frames, bins = 30, 20
    base = np.full((frames, bins), 1.0)
    bound_rows = policy.max_time_masks * policy.max_time_mask_width
    bound_cols = policy.max_freq_masks * policy.max_freq_mask_width
    for trial in range(1000):
        out = spec_augment(base, policy, np.random.default_rng(trial))
        masked = out == -999.0
        full_rows = int(np.all(masked, axis=1).sum())
        # columns masked outside the fully-masked rows
        col_mask = masked[~np.all(masked, axis=1)]
        full_cols = int(np.all(col_mask, axis=0).sum()) if len(col_mask) else 0
        assert full_rows <= bound_rows
        assert full_cols <= bound_cols
        assert masked.sum() <= frames * bound_cols + bins * bound_rows


def test_mask_fill_defaults_to_matrix_mean():
    policy = SpecAugmentPolicy(
        max_time_masks=1, max_time_mask_width=10, max_freq_masks=0
    )
    feats = np.arange(200, dtype=float).reshape(20, 10)
    out = spec_augment(feats, policy, np.random.default_rng(3))
    changed = out != feats
    if changed.any():
        assert np.all(out[changed] == feats.mean())


def test_spec_augment_rejects_empty():
    with pytest.raises(DataError):
        spec_augment(np.zeros((0, 4)), SpecAugmentPolicy(), np.random.default_rng(0))


def test_speed_perturb_identity_and_length():
    clip = AudioClip(np.random.default_rng(5).uniform(-0.5, 0.5, 16000))
    same = speed_perturb(clip, 1.0)
    assert np.array_equal(same.samples, clip.samples)
    fast = speed_perturb(clip, 2.0)
    assert len(fast) == 8000
    with pytest.raises(DataError):
        speed_perturb(clip, 0.0)


def test_speed_perturb_shifts_dominant_frequency():
    t = np.arange(16000)
    clip = AudioClip(0.5 * np.sin(2 * np.pi * 100.0 * t / 16000.0))
    slow = speed_perturb(clip, 0.9)
    spectrum = np.abs(np.fft.rfft(slow.samples))
    freqs = np.fft.rfftfreq(len(slow), d=1.0 / 16000.0)
    peak = freqs[np.argmax(spectrum)]
    assert abs(peak - 90.0) <= 2.0
