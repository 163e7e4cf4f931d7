"""SNR-controlled additive mixing and parallel noisy-set construction.

For each clean utterance one environmental segment, one impulsive segment
and one SNR are drawn; the env-only, imp-only and env+imp sets reuse those
identical draws so the three corpora differ only in which components are
added. A MixRecord per utterance captures everything needed to replay the
mix bit-identically.

Clipping policy: when a mix peaks above full scale the whole clip is
rescaled by 1/peak (recorded per utterance, shared by all three parallel
sets), which preserves the SNR exactly, unlike saturation.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, replace

import numpy as np

from .audio import AudioClip, rms_power, write_wav
from .corpus import NoiseBank
from .errors import DataError
from .manifest import CorpusManifest, ManifestEntry, load_clip, utterance_id
from .rng import child_rng

DEFAULT_SNR_RANGE = (-5.0, 25.0)

COMPONENTS = ("env", "imp", "env+imp")

RECORD_COLUMNS = (
    "utterance_id",
    "env_id",
    "env_offset",
    "imp_id",
    "imp_offset",
    "snr_db",
    "env_gain",
    "imp_gain",
    "rescale",
)


@dataclass(frozen=True)
class MixRecord:
    """Provenance of one corrupted utterance, shared by the parallel sets."""

    utterance_id: str
    env_id: str = ""
    env_offset: int = 0
    imp_id: str = ""
    imp_offset: int = 0
    snr_db: float = 0.0
    env_gain: float = 0.0
    imp_gain: float = 0.0
    rescale: float = 1.0


@dataclass
class ParallelSets:
    env: CorpusManifest
    imp: CorpusManifest
    env_imp: CorpusManifest
    records: dict[str, MixRecord]

    def manifest_for(self, components: str) -> CorpusManifest:
        try:
            return {"env": self.env, "imp": self.imp, "env+imp": self.env_imp}[components]
        except KeyError:
            raise DataError(f"unknown component set {components!r}") from None


def gain_for_snr(signal_power: float, noise_power: float, snr_db: float) -> float:
    """Amplitude factor that scales noise to sit snr_db below the signal."""
    if signal_power <= 0.0:
        raise DataError("silent clean clip: signal power must be positive")
    if noise_power <= 0.0:
        raise DataError("silent noise: noise power must be positive")
    return float(np.sqrt(signal_power / (noise_power * 10.0 ** (snr_db / 10.0))))


def measured_snr_db(clean: AudioClip, noise_component: AudioClip) -> float:
    """Re-measure the SNR of a decomposed mix, in dB."""
    return 10.0 * np.log10(rms_power(clean) / rms_power(noise_component))


def mix_at_snr(
    clean: AudioClip,
    noise_segment: AudioClip,
    snr_db: float,
    *,
    utterance: str = "",
    noise_id: str = "",
    offset: int = 0,
    apply_clipping: bool = True,
) -> tuple[AudioClip, MixRecord]:
    """Additively mix one noise segment into a clean clip at an exact SNR."""
    if len(clean) != len(noise_segment):
        raise DataError(
            f"length mismatch: clean {len(clean)} vs noise {len(noise_segment)}"
        )
    if clean.sample_rate != noise_segment.sample_rate:
        raise DataError("sample rate mismatch between clean clip and noise segment")
    gain = gain_for_snr(rms_power(clean), rms_power(noise_segment), snr_db)
    mixed = clean.samples + gain * noise_segment.samples
    rescale = 1.0
    if apply_clipping:
        peak = float(np.max(np.abs(mixed)))
        if peak > 1.0:
            rescale = 1.0 / peak
            mixed = mixed * rescale
    record = MixRecord(
        utterance_id=utterance,
        env_id=noise_id,
        env_offset=offset,
        snr_db=float(snr_db),
        env_gain=gain,
        rescale=rescale,
    )
    return AudioClip(mixed, clean.sample_rate), record


def sample_segment(
    noise: AudioClip, length: int, rng: np.random.Generator
) -> tuple[AudioClip, int]:
    """Draw a noise segment of exactly `length` samples.

    Long sources yield a contiguous slice at a random offset. Sources
    shorter than the request (typical for impulses) are placed whole at a
    random onset inside a zero buffer - the impulse is never truncated.
    The returned offset replays either branch deterministically.
    """
    if length <= 0:
        raise DataError(f"segment length must be positive, got {length}")
    if len(noise) == 0:
        raise DataError("empty noise source")
    if len(noise) >= length:
        offset = int(rng.integers(0, len(noise) - length + 1))
    else:
        offset = int(rng.integers(0, length - len(noise) + 1))
    return segment_at(noise, length, offset), offset


def segment_at(noise: AudioClip, length: int, offset: int) -> AudioClip:
    """Reconstruct the segment a MixRecord refers to."""
    if len(noise) >= length:
        if not 0 <= offset <= len(noise) - length:
            raise DataError(f"offset {offset} out of range for slice of {len(noise)}")
        samples = noise.samples[offset : offset + length].copy()
    else:
        if not 0 <= offset <= length - len(noise):
            raise DataError(f"offset {offset} out of range for placement in {length}")
        samples = np.zeros(length)
        samples[offset : offset + len(noise)] = noise.samples
    return AudioClip(samples, noise.sample_rate)


def _compose(clean: AudioClip, parts, rescale: float) -> AudioClip:
    out = clean.samples.copy()
    for gain, segment in parts:
        out += gain * segment.samples
    if rescale != 1.0:
        out *= rescale
    return AudioClip(out, clean.sample_rate)


def remix(
    clean: AudioClip,
    env_bank: NoiseBank | None,
    imp_bank: NoiseBank | None,
    record: MixRecord,
    components: str,
) -> AudioClip:
    """Replay a recorded mix; bit-identical to the original construction."""
    parts = []
    if components in ("env", "env+imp"):
        if env_bank is None:
            raise DataError("env bank required to replay this mix")
        seg = segment_at(env_bank.load(record.env_id), len(clean), record.env_offset)
        parts.append((record.env_gain, seg))
    if components in ("imp", "env+imp"):
        if imp_bank is None:
            raise DataError("imp bank required to replay this mix")
        seg = segment_at(imp_bank.load(record.imp_id), len(clean), record.imp_offset)
        parts.append((record.imp_gain, seg))
    if not parts:
        raise DataError(f"unknown component set {components!r}")
    return _compose(clean, parts, record.rescale)


def build_parallel_noisy_sets(
    manifest: CorpusManifest,
    env_bank: NoiseBank,
    imp_bank: NoiseBank,
    snr_range: tuple[float, float] = DEFAULT_SNR_RANGE,
    seed: int = 0,
    *,
    materialize_dir=None,
    wav_encoding: str = "float32",
) -> ParallelSets:
    """Corrupt every manifest entry into three parallel noisy sets.

    Per-utterance RNG streams are keyed by utterance id, so corpus order
    (and worker scheduling) never affects the draws. With materialize_dir
    the mixed audio is written to WAV files; otherwise the returned
    manifests keep the clean paths and rely on MixRecord replay.
    """
    if len(env_bank) == 0 or len(imp_bank) == 0:
        raise DataError("noise banks must be non-empty")
    lo, hi = float(snr_range[0]), float(snr_range[1])
    if hi < lo:
        raise DataError(f"bad SNR range [{lo}, {hi}]")

    env_ids = env_bank.ids()
    imp_ids = imp_bank.ids()
    records: dict[str, MixRecord] = {}
    out_entries: dict[str, list[ManifestEntry]] = {c: [] for c in COMPONENTS}
    if materialize_dir is not None:
        for comp in COMPONENTS:
            os.makedirs(os.path.join(materialize_dir, comp.replace("+", "_")), exist_ok=True)

    for index, entry in enumerate(manifest.entries):
        uid = utterance_id(entry)
        clean = load_clip(entry.path)
        rng = child_rng(seed, "corrupt", uid)

        env_id = env_ids[int(rng.integers(len(env_ids)))]
        env_seg, env_off = sample_segment(env_bank.load(env_id), len(clean), rng)
        imp_id = imp_ids[int(rng.integers(len(imp_ids)))]
        imp_seg, imp_off = sample_segment(imp_bank.load(imp_id), len(clean), rng)
        snr_db = float(rng.uniform(lo, hi))

        clean_power = rms_power(clean)
        env_gain = gain_for_snr(clean_power, rms_power(env_seg), snr_db)
        imp_gain = gain_for_snr(clean_power, rms_power(imp_seg), snr_db)

        raw = {
            "env": clean.samples + env_gain * env_seg.samples,
            "imp": clean.samples + imp_gain * imp_seg.samples,
            "env+imp": clean.samples
            + env_gain * env_seg.samples
            + imp_gain * imp_seg.samples,
        }
        # one shared factor keeps the three sets exactly superposable
        peak = max(float(np.max(np.abs(x))) for x in raw.values())
        rescale = 1.0 / peak if peak > 1.0 else 1.0

        record = MixRecord(uid, env_id, env_off, imp_id, imp_off, snr_db, env_gain, imp_gain, rescale)
        records[uid] = record

        for comp in COMPONENTS:
            mix_tag = f"{comp}:{uid}"
            if materialize_dir is not None:
                samples = raw[comp] if rescale == 1.0 else raw[comp] * rescale
                out_path = os.path.join(
                    materialize_dir, comp.replace("+", "_"), f"clip{index:06d}.wav"
                )
                write_wav(AudioClip(samples, clean.sample_rate), out_path, encoding=wav_encoding)
                out_entries[comp].append(replace(entry, path=out_path, mix_record=mix_tag))
            else:
                out_entries[comp].append(replace(entry, mix_record=mix_tag))

    return ParallelSets(
        env=CorpusManifest(out_entries["env"]),
        imp=CorpusManifest(out_entries["imp"]),
        env_imp=CorpusManifest(out_entries["env+imp"]),
        records=records,
    )


def write_mix_records(records: dict[str, MixRecord], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RECORD_COLUMNS)
        for uid in sorted(records):
            r = records[uid]
            writer.writerow(
                [
                    r.utterance_id,
                    r.env_id,
                    r.env_offset,
                    r.imp_id,
                    r.imp_offset,
                    repr(r.snr_db),
                    repr(r.env_gain),
                    repr(r.imp_gain),
                    repr(r.rescale),
                ]
            )


def read_mix_records(path) -> dict[str, MixRecord]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != RECORD_COLUMNS:
            raise DataError(f"{path}: bad mix record header {header!r}")
        records = {}
        for row in reader:
            if not row:
                continue
            if len(row) != len(RECORD_COLUMNS):
                raise DataError(f"{path}: short mix record row {row!r}")
            records[row[0]] = MixRecord(
                utterance_id=row[0],
                env_id=row[1],
                env_offset=int(row[2]),
                imp_id=row[3],
                imp_offset=int(row[4]),
                snr_db=float(row[5]),
                env_gain=float(row[6]),
                imp_gain=float(row[7]),
                rescale=float(row[8]),
            )
    return records
