import numpy as np
import pytest

from robustline.audio import AudioClip, rms_power
from robustline.corpus import build_noise_bank, build_synth_corpus
from robustline.corrupt import (
    MixRecord,
    build_parallel_noisy_sets,
    gain_for_snr,
    measured_snr_db,
    mix_at_snr,
    read_mix_records,
    remix,
    sample_segment,
    segment_at,
    write_mix_records,
)
from robustline.errors import DataError
from robustline.manifest import load_clip, make_splits, utterance_id
from robustline.synth import synth_clip


def test_gain_for_snr_hand_values():
    assert gain_for_snr(1.0, 1.0, 0.0) == pytest.approx(1.0)
    assert gain_for_snr(1.0, 1.0, 20.0) == pytest.approx(0.1)  # 10**(-20/20)
    with pytest.raises(DataError, match="silent noise"):
        gain_for_snr(1.0, 0.0, 5.0)
    with pytest.raises(DataError, match="silent clean"):
        gain_for_snr(0.0, 1.0, 5.0)


def test_mix_equal_power_zero_db():
    t = np.arange(16000)
    clean = AudioClip(0.5 * np.sin(2 * np.pi * 200 * t / 16000))
    noise = AudioClip(0.5 * np.sin(2 * np.pi * 700 * t / 16000))
    mixed, record = mix_at_snr(clean, noise, 0.0)
    assert record.env_gain == pytest.approx(1.0, abs=1e-9)
    assert record.rescale == 1.0
    assert np.allclose(mixed.samples, clean.samples + noise.samples)


def test_mix_remeasured_snr_exact():
    rng = np.random.default_rng(3)
    clean = synth_clip("keyword", class_id=2, speaker_seed=4)
    noise = AudioClip(0.1 * rng.standard_normal(16000))
    for snr in (-5.0, 0.0, 5.0, 13.7, 25.0):
        mixed, record = mix_at_snr(clean, noise, snr)
        noise_component = AudioClip(mixed.samples - record.rescale * clean.samples)
        clean_component = AudioClip(record.rescale * clean.samples)
        assert abs(measured_snr_db(clean_component, noise_component) - snr) < 1e-6


def test_mix_rejects_degenerate_inputs():
    clean = synth_clip("keyword", class_id=0, speaker_seed=0)
    with pytest.raises(DataError, match="length mismatch"):
        mix_at_snr(clean, AudioClip(np.ones(100)), 5.0)
    with pytest.raises(DataError, match="silent noise"):
        mix_at_snr(clean, AudioClip(np.zeros(16000)), 5.0)


def test_mix_clipping_rescales_and_preserves_snr():
    t = np.arange(16000)
    clean = AudioClip(0.9 * np.sin(2 * np.pi * 150 * t / 16000))
    noise = AudioClip(0.9 * np.sin(2 * np.pi * 640 * t / 16000))
    mixed, record = mix_at_snr(clean, noise, 0.0)
    assert record.rescale < 1.0
    assert np.max(np.abs(mixed.samples)) <= 1.0
    noise_component = AudioClip(mixed.samples - record.rescale * clean.samples)
    clean_component = AudioClip(record.rescale * clean.samples)
    assert abs(measured_snr_db(clean_component, noise_component) - 0.0) < 1e-6


def test_sample_segment_slice_branch():
    noise = synth_clip("env_noise", duration=60.0, seed=5)
    rng = np.random.default_rng(1)
    seg, offset = sample_segment(noise, 16000, rng)
    assert len(seg) == 16000
    assert 0 <= offset <= len(noise) - 16000
    assert np.array_equal(seg.samples, noise.samples[offset : offset + 16000])
    assert np.array_equal(segment_at(noise, 16000, offset).samples, seg.samples)


def test_sample_segment_placement_branch():
    impulse = synth_clip("imp_noise", duration=0.3, seed=6)
    rng = np.random.default_rng(2)
    seg, offset = sample_segment(impulse, 16000, rng)
    assert len(seg) == 16000
    placed = seg.samples[offset : offset + len(impulse)]
    assert np.array_equal(placed, impulse.samples)
    outside = np.concatenate([seg.samples[:offset], seg.samples[offset + len(impulse):]])
    assert np.all(outside == 0.0)
    # full impulse energy is contained
    assert np.sum(placed**2) == pytest.approx(np.sum(impulse.samples**2))


def test_sample_segment_errors():
    with pytest.raises(DataError, match="empty noise"):
        sample_segment(AudioClip(np.zeros(0)), 10, np.random.default_rng(0))
    with pytest.raises(DataError):
        sample_segment(AudioClip(np.ones(10)), 0, np.random.default_rng(0))


def _small_corpus():
    corpus = build_synth_corpus(3, 4, 3, seed=17)
    return make_splits(corpus, (1.0, 0.0, 0.0), seed=17)


def test_parallel_sets_superposition_and_records(tmp_path):
    manifest = _small_corpus()
    env_bank = build_noise_bank("env_noise", 3, 8.0, seed=31)
    imp_bank = build_noise_bank("imp_noise", 3, 0.4, seed=32)
    sets = build_parallel_noisy_sets(manifest, env_bank, imp_bank, (-5, 25), seed=77)

    assert len(sets.env) == len(sets.imp) == len(sets.env_imp) == len(manifest)
    for clean_entry, env_e, imp_e, both_e in zip(
        manifest.entries, sets.env.entries, sets.imp.entries, sets.env_imp.entries
    ):
        uid = utterance_id(clean_entry)
        assert env_e.mix_record == f"env:{uid}"
        assert imp_e.mix_record == f"imp:{uid}"
        assert both_e.mix_record == f"env+imp:{uid}"
        record = sets.records[uid]
        clean = load_clip(clean_entry.path)
        env_clip = remix(clean, env_bank, None, record, "env")
        imp_clip = remix(clean, None, imp_bank, record, "imp")
        both_clip = remix(clean, env_bank, imp_bank, record, "env+imp")
        # undo the shared rescale, then check exact superposition
        s = record.rescale
        residual = (
            both_clip.samples / s
            - (env_clip.samples / s - clean.samples)
            - (imp_clip.samples / s - clean.samples)
            - clean.samples
        )
        assert np.max(np.abs(residual)) <= 1e-9
        assert -5.0 <= record.snr_db <= 25.0

    # records round-trip losslessly
    path = tmp_path / "records.csv"
    write_mix_records(sets.records, path)
    assert read_mix_records(path) == sets.records


def test_parallel_sets_degenerate_snr_range():
    manifest = _small_corpus()
    env_bank = build_noise_bank("env_noise", 2, 5.0, seed=41)
    imp_bank = build_noise_bank("imp_noise", 2, 0.4, seed=42)
    sets = build_parallel_noisy_sets(manifest, env_bank, imp_bank, (5, 5), seed=1)
    assert all(r.snr_db == 5.0 for r in sets.records.values())


def test_parallel_sets_deterministic():
    manifest = _small_corpus()
    env_bank = build_noise_bank("env_noise", 2, 5.0, seed=41)
    imp_bank = build_noise_bank("imp_noise", 2, 0.4, seed=42)
    a = build_parallel_noisy_sets(manifest, env_bank, imp_bank, seed=9)
    b = build_parallel_noisy_sets(manifest, env_bank, imp_bank, seed=9)
    assert a.records == b.records
    assert a.env == b.env and a.imp == b.imp and a.env_imp == b.env_imp


def test_parallel_sets_order_independent():
    manifest = _small_corpus()
    reversed_manifest = type(manifest)(list(reversed(manifest.entries)))
    env_bank = build_noise_bank("env_noise", 2, 5.0, seed=41)
    imp_bank = build_noise_bank("imp_noise", 2, 0.4, seed=42)
    a = build_parallel_noisy_sets(manifest, env_bank, imp_bank, seed=9)
    b = build_parallel_noisy_sets(reversed_manifest, env_bank, imp_bank, seed=9)
    assert a.records == b.records


def test_parallel_sets_materialized(tmp_path):
    manifest = _small_corpus()
    env_bank = build_noise_bank("env_noise", 2, 5.0, seed=41)
    imp_bank = build_noise_bank("imp_noise", 2, 0.4, seed=42)
    sets = build_parallel_noisy_sets(
        manifest, env_bank, imp_bank, seed=9, materialize_dir=tmp_path
    )
    entry = sets.env_imp.entries[0]
    assert entry.path.endswith(".wav")
    written = load_clip(entry.path)
    record = sets.records[utterance_id(manifest.entries[0])]
    replayed = remix(load_clip(manifest.entries[0].path), env_bank, imp_bank, record, "env+imp")
    # float32 WAV quantization only
    assert np.max(np.abs(written.samples - replayed.samples)) < 1e-6


def test_parallel_sets_empty_bank_rejected():
    manifest = _small_corpus()
    bank = build_noise_bank("env_noise", 1, 2.0, seed=1)
    with pytest.raises(DataError, match="non-empty"):
        build_parallel_noisy_sets(manifest, type(bank)([]), bank, seed=0)


def test_record_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("nope\n")
    with pytest.raises(DataError):
        read_mix_records(path)
