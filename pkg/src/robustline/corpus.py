"""Assembly of synthetic corpora and noise banks.

Builders emit manifests of ``synth://`` pseudo-paths, so a full desk-scale
corpus is a few CSV files rather than thousands of WAVs; pass
materialize_dir to write real audio instead (e.g. for external tools).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

from .audio import AudioClip, write_wav
from .errors import DataError
from .manifest import (
    CorpusManifest,
    ManifestEntry,
    keyword_path,
    load_clip,
    noise_path,
)
from .rng import child_rng, derive_seed
from .synth import WORDS


def build_synth_corpus(
    n_classes: int,
    n_speakers: int,
    clips_per_speaker: int,
    seed: int,
    duration: float = 1.0,
    speaker_prefix: str = "spk",
) -> CorpusManifest:
    """A balanced synthetic keyword corpus (no splits assigned yet).

    Each speaker keeps a consistent voice across clips; classes are
    covered round-robin per speaker so no split can lose a class.
    """
    if not 2 <= n_classes <= len(WORDS):
        raise DataError(f"n_classes must be in [2, {len(WORDS)}], got {n_classes}")
    entries = []
    for s in range(n_speakers):
        speaker_id = f"{speaker_prefix}{s:03d}"
        speaker_seed = derive_seed(seed, "speaker", speaker_prefix, s)
        start = int(child_rng(seed, "class-offset", speaker_id).integers(n_classes))
        for j in range(clips_per_speaker):
            class_id = (start + j) % n_classes
            utt_seed = derive_seed(seed, "utt", speaker_id, j)
            entries.append(
                ManifestEntry(
                    path=keyword_path(class_id, speaker_seed, utt_seed, duration),
                    label=WORDS[class_id],
                    speaker_id=speaker_id,
                )
            )
    return CorpusManifest(entries)


@dataclass
class NoiseBank:
    """An ordered collection of noise clips, addressed by stable ids."""

    items: list[tuple[str, str]]  # (noise_id, path)
    _cache: dict[str, AudioClip] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.items)

    def ids(self) -> list[str]:
        return [noise_id for noise_id, _ in self.items]

    def path_of(self, noise_id: str) -> str:
        for nid, path in self.items:
            if nid == noise_id:
                return path
        raise DataError(f"unknown noise id {noise_id!r}")

    def load(self, noise_id: str) -> AudioClip:
        if noise_id not in self._cache:
            self._cache[noise_id] = load_clip(self.path_of(noise_id))
        return self._cache[noise_id]

    def first_half(self) -> "NoiseBank":
        """The 'seen' half: files used for training-time corruption."""
        return NoiseBank(self.items[: (len(self.items) + 1) // 2])

    def second_half(self) -> "NoiseBank":
        """The held-out half: same domain, files unseen in training."""
        return NoiseBank(self.items[(len(self.items) + 1) // 2 :])


def build_noise_bank(
    kind: str,
    count: int,
    duration: float,
    seed: int,
    id_prefix: str | None = None,
) -> NoiseBank:
    """A bank of synthetic noises of one kind (env_noise or imp_noise)."""
    if kind not in ("env_noise", "imp_noise"):
        raise DataError(f"unknown noise kind {kind!r}")
    if count < 1:
        raise DataError("noise bank needs at least one file")
    prefix = id_prefix or ("env" if kind == "env_noise" else "imp")
    items = []
    for i in range(count):
        clip_seed = derive_seed(seed, "bank", kind, i)
        items.append((f"{prefix}{i:03d}", noise_path(kind, clip_seed, duration)))
    return NoiseBank(items)


def bank_from_dir(directory) -> NoiseBank:
    """Treat a directory of WAV files as a noise bank (sorted by name)."""
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith(".wav"))
    if not names:
        raise DataError(f"{directory}: no WAV files")
    return NoiseBank([(os.path.splitext(n)[0], os.path.join(directory, n)) for n in names])


def write_bank(bank: NoiseBank, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "path"])
        writer.writerows(bank.items)


def read_bank(path) -> NoiseBank:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["id", "path"]:
            raise DataError(f"{path}: bad noise bank header {header!r}")
        items = [(row[0], row[1]) for row in reader if row]
    if not items:
        raise DataError(f"{path}: empty noise bank")
    return NoiseBank(items)


def resolve_bank(spec: str) -> NoiseBank:
    """Resolve a bank argument: a directory, a bank CSV, or a synth spec.

    Synth specs look like ``synth:env_noise:10:30.0:1234``
    (kind:count:duration:seed).
    """
    if spec.startswith("synth:"):
        try:
            _, kind, count, duration, seed = spec.split(":")
            return build_noise_bank(kind, int(count), float(duration), int(seed))
        except ValueError:
            raise DataError(f"malformed synth bank spec {spec!r}") from None
    if os.path.isdir(spec):
        return bank_from_dir(spec)
    return read_bank(spec)


def materialize_manifest(manifest: CorpusManifest, directory, encoding="float32"):
    """Write synth entries to WAV files; returns a manifest of real paths."""
    os.makedirs(directory, exist_ok=True)
    entries = []
    for i, entry in enumerate(manifest.entries):
        if entry.path.startswith("synth://"):
            out = os.path.join(directory, f"clip{i:06d}.wav")
            write_wav(load_clip(entry.path), out, encoding=encoding)
            entries.append(
                ManifestEntry(out, entry.label, entry.speaker_id, entry.split, entry.mix_record)
            )
        else:
            entries.append(entry)
    return CorpusManifest(entries)


def materialize_bank(bank: NoiseBank, directory, encoding="float32") -> NoiseBank:
    os.makedirs(directory, exist_ok=True)
    items = []
    for noise_id, path in bank.items:
        if path.startswith("synth://"):
            out = os.path.join(directory, f"{noise_id}.wav")
            write_wav(load_clip(path), out, encoding=encoding)
            items.append((noise_id, out))
        else:
            items.append((noise_id, path))
    return NoiseBank(items)
