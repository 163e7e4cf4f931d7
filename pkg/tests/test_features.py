import numpy as np
import pytest

from oracles import (
    matrix_rel_error,
    naive_dct_matrix,
    naive_dft_magnitude,
    naive_log_mel,
    naive_mfcc,
)
from robustline.audio import AudioClip
from robustline.errors import DataError
from robustline.features import (
    FeatureConfig,
    dct_matrix,
    extract,
    filter_centers_hz,
    load_external_features,
    log_mel,
    mel_filterbank,
    mfcc,
    normalize_features,
    raw_frames,
    save_external_features,
    stft_magnitude,
)
from robustline.synth import synth_clip

CFG = FeatureConfig()


def test_config_validation():
    with pytest.raises(DataError):
        FeatureConfig(window_size=512, fft_size=400)
    with pytest.raises(DataError):
        FeatureConfig(hop=0)
    with pytest.raises(DataError):
        FeatureConfig(n_mfcc=100)
    with pytest.raises(DataError):
        FeatureConfig(fmin=9000.0)


def test_frame_count_table_setting():
    assert CFG.frame_count(16000) == 98  # 1 + (16000 - 400) // 160
    with pytest.raises(DataError, match="shorter than one window"):
        CFG.frame_count(399)


def test_stft_zero_clip():
    mags = stft_magnitude(AudioClip(np.zeros(16000)), CFG)
    assert mags.shape == (98, 201)
    assert np.all(mags == 0.0)


def test_stft_tone_at_bin_center():
    # bin 50 of a 400-point FFT at 16 kHz is exactly 2000 Hz
    t = np.arange(16000)
    clip = AudioClip(0.5 * np.sin(2 * np.pi * 2000.0 * t / 16000.0))
    mags = stft_magnitude(clip, CFG)
    assert np.all(np.argmax(mags, axis=1) == 50)


def test_stft_matches_naive_dft():
    rng = np.random.default_rng(10)
    for _ in range(5):
        clip = AudioClip(rng.uniform(-1, 1, 16000))
        assert matrix_rel_error(stft_magnitude(clip, CFG), naive_dft_magnitude(clip, CFG)) < 1e-9


def test_log_mel_zero_clip_floor():
    out = log_mel(AudioClip(np.zeros(16000)), CFG)
    assert out.shape == (98, 64)
    assert np.all(out == np.log(CFG.log_floor))


def test_log_mel_width_and_tone_at_filter_center():
    centers = filter_centers_hz(CFG)
    k = 40
    t = np.arange(16000)
    clip = AudioClip(0.5 * np.sin(2 * np.pi * centers[k] * t / 16000.0))
    out = log_mel(clip, CFG)
    assert out.shape[1] == 64
    assert np.all(np.argmax(out, axis=1) == k)


def test_log_mel_matches_naive_filtering():
    rng = np.random.default_rng(11)
    for _ in range(5):
        clip = AudioClip(rng.uniform(-1, 1, 16000))
        assert matrix_rel_error(log_mel(clip, CFG), naive_log_mel(clip, CFG)) < 1e-9


def test_log_mel_energy_monotone_in_gain():
    rng = np.random.default_rng(12)
    clip = AudioClip(rng.uniform(-0.4, 0.4, 16000))
    louder = AudioClip(clip.samples * 2.0)
    assert np.all(log_mel(louder, CFG) >= log_mel(clip, CFG))


def test_mel_filterbank_shape_and_centers():
    bank = mel_filterbank(CFG)
    assert bank.shape == (64, 201)
    assert np.all(bank >= 0.0) and np.all(bank <= 1.0)
    # each triangle peaks at the DFT bin nearest its center frequency
    centers = filter_centers_hz(CFG)
    bin_width = CFG.sample_rate / CFG.fft_size
    for k in range(64):
        assert abs(np.argmax(bank[k]) * bin_width - centers[k]) <= bin_width


def test_mfcc_constant_vector_dct():
    mat = dct_matrix(CFG.n_mfcc, CFG.n_mels)
    constant = np.full(64, 3.7)
    coeffs = mat @ constant
    assert coeffs[0] == pytest.approx(3.7 * np.sqrt(64.0))
    assert np.max(np.abs(coeffs[1:])) < 1e-12


def test_mfcc_width_and_naive_oracle():
    clip = synth_clip("keyword", class_id=1, speaker_seed=2)
    out = mfcc(clip, CFG)
    assert out.shape == (98, 20)
    assert matrix_rel_error(out, naive_mfcc(clip, CFG)) < 1e-9
    assert matrix_rel_error(dct_matrix(20, 64), naive_dct_matrix(20, 64)) < 1e-12


def test_raw_frames_slicing():
    rng = np.random.default_rng(13)
    samples = rng.uniform(-1, 1, 16000)
    clip = AudioClip(samples)
    frames = raw_frames(clip, CFG)
    assert frames.shape == (98, 400)
    assert np.array_equal(frames[0], samples[:400])
    for i in (1, 17, 97):
        start = i * CFG.hop
        assert np.array_equal(frames[i], samples[start : start + 400])
    assert frames.shape[0] == stft_magnitude(clip, CFG).shape[0]


def test_normalize_features():
    rng = np.random.default_rng(14)
    feats = rng.standard_normal((98, 64)) * 5.0 + 3.0
    normed = normalize_features(feats)
    assert np.max(np.abs(normed.mean(axis=0))) < 1e-9
    assert np.max(np.abs(normed.std(axis=0) - 1.0)) < 1e-6


def test_extract_dispatch():
    clip = synth_clip("keyword", class_id=0, speaker_seed=1)
    assert extract(clip, CFG, "mel").shape == (98, 64)
    assert extract(clip, CFG, "mfcc").shape == (98, 20)
    assert extract(clip, CFG, "raw").shape == (98, 400)
    with pytest.raises(DataError, match="unknown feature type"):
        extract(clip, CFG, "wavelet")
    plain = FeatureConfig(normalize=False)
    assert np.array_equal(extract(clip, plain, "mel"), log_mel(clip, plain))


def test_external_features_roundtrip(tmp_path):
    rng = np.random.default_rng(15)
    matrix = rng.standard_normal((10, 768)).astype(np.float32)
    path = tmp_path / "feats.rlft"
    save_external_features(matrix, path)
    back = load_external_features(path)
    assert back.shape == (10, 768)
    assert np.array_equal(back, matrix)
    save_external_features(back, tmp_path / "again.rlft")
    assert (tmp_path / "again.rlft").read_bytes() == path.read_bytes()


def test_external_features_errors(tmp_path):
    bad_values = np.array([[1.0, np.nan]], dtype=np.float32)
    path = tmp_path / "nan.rlft"
    with open(path, "wb") as f:
        f.write(b"RLFT" + (1).to_bytes(4, "little") + (2).to_bytes(4, "little"))
        f.write(bad_values.tobytes())
    with pytest.raises(DataError, match="non-finite"):
        load_external_features(path)

    truncated = tmp_path / "short.rlft"
    with open(truncated, "wb") as f:
        f.write(b"RLFT" + (4).to_bytes(4, "little") + (4).to_bytes(4, "little"))
        f.write(b"\x00" * 8)
    with pytest.raises(DataError, match="header implies"):
        load_external_features(truncated)

    not_rlft = tmp_path / "other.bin"
    not_rlft.write_bytes(b"JUNKJUNKJUNKJUNK")
    with pytest.raises(DataError, match="not an external feature file"):
        load_external_features(not_rlft)
