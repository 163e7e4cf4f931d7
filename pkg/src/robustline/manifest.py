"""Corpus manifests: entry lists, CSV round-trip, and speaker-disjoint splits.

A manifest row is (path, label, speaker_id, split) plus an optional
mix_record column on corrupted sets. Paths are either real WAV files or
``synth://`` pseudo-paths that regenerate a clip deterministically.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field, replace

from .audio import AudioClip, read_wav
from .errors import DataError
from .rng import derive_seed
from .synth import synth_clip

SPLITS = ("train", "valid", "test")

MANIFEST_COLUMNS = ("path", "label", "speaker_id", "split")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    speaker_id: str
    split: str = ""
    mix_record: str = ""  # "<components>:<utterance_id>" on corrupted sets


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def labels(self) -> list[str]:
        """Sorted class inventory."""
        return sorted({e.label for e in self.entries})

    def speakers(self) -> list[str]:
        return sorted({e.speaker_id for e in self.entries})

    def subset(self, split: str) -> "CorpusManifest":
        return CorpusManifest([e for e in self.entries if e.split == split])

    def with_labels(self, keep: set[str]) -> "CorpusManifest":
        return CorpusManifest([e for e in self.entries if e.label in keep])


def utterance_id(entry: ManifestEntry) -> str:
    """Stable id for an entry, independent of corpus order."""
    return hashlib.sha1(entry.path.encode("utf-8")).hexdigest()[:16]


def write_manifest(manifest: CorpusManifest, path) -> None:
    has_mix = any(e.mix_record for e in manifest.entries)
    columns = MANIFEST_COLUMNS + (("mix_record",) if has_mix else ())
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for e in manifest.entries:
            row = [e.path, e.label, e.speaker_id, e.split]
            if has_mix:
                row.append(e.mix_record)
            writer.writerow(row)


def read_manifest(path) -> CorpusManifest:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty manifest") from None
        if tuple(header[:4]) != MANIFEST_COLUMNS:
            raise DataError(f"{path}: bad manifest header {header!r}")
        has_mix = len(header) > 4 and header[4] == "mix_record"
        entries = []
        for row in reader:
            if not row:
                continue
            if len(row) < 4:
                raise DataError(f"{path}: short manifest row {row!r}")
            entries.append(
                ManifestEntry(
                    path=row[0],
                    label=row[1],
                    speaker_id=row[2],
                    split=row[3],
                    mix_record=row[4] if has_mix and len(row) > 4 else "",
                )
            )
    return CorpusManifest(entries)


def make_splits(manifest: CorpusManifest, ratios, seed: int) -> CorpusManifest:
    """Assign train/valid/test splits, speaker-disjoint by construction.

    Assignment is a hash of (seed, speaker_id) alone, never of individual
    clips, so adding clips later cannot reshuffle existing speakers.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != len(SPLITS):
        raise DataError(f"expected {len(SPLITS)} ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"ratios must be non-negative and sum to 1, got {ratios}")

    speakers = manifest.speakers()
    wanted = [name for name, r in zip(SPLITS, ratios) if r > 0]
    if len(speakers) < len(wanted):
        raise DataError(
            f"fewer speakers ({len(speakers)}) than requested splits ({len(wanted)})"
        )

    bounds = []
    acc = 0.0
    for r in ratios:
        acc += r
        bounds.append(acc)
    bounds[-1] = 1.0 + 1e-12  # guard the top edge

    assignment: dict[str, str] = {}
    for spk in speakers:
        u = derive_seed(seed, "split", spk) / 2.0**64
        for name, top in zip(SPLITS, bounds):
            if u < top:
                assignment[spk] = name
                break

    for name, r in zip(SPLITS, ratios):
        if r > 0 and not any(v == name for v in assignment.values()):
            raise DataError(
                f"split {name!r} (ratio {r}) received no speakers; "
                "use more speakers or another seed"
            )

    return CorpusManifest(
        [replace(e, split=assignment[e.speaker_id]) for e in manifest.entries]
    )


def split_fractions(manifest: CorpusManifest) -> dict[str, float]:
    """Achieved clip-count proportions per split."""
    total = len(manifest)
    if total == 0:
        return {name: 0.0 for name in SPLITS}
    return {
        name: sum(1 for e in manifest.entries if e.split == name) / total
        for name in SPLITS
    }


# --- synth:// pseudo-paths -------------------------------------------------

def keyword_path(class_id: int, speaker_seed: int, utt_seed: int, duration: float) -> str:
    return f"synth://keyword/c{class_id}.s{speaker_seed}.u{utt_seed}?dur={duration!r}"


def noise_path(kind: str, seed: int, duration: float) -> str:
    return f"synth://{kind}/{seed}?dur={duration!r}"


def parse_synth_path(path: str):
    """Split a synth:// path into (kind, params dict)."""
    if not path.startswith("synth://"):
        raise DataError(f"not a synth path: {path}")
    rest = path[len("synth://") :]
    if "?" in rest:
        rest, query = rest.split("?", 1)
    else:
        query = ""
    parts = rest.split("/")
    if len(parts) != 2:
        raise DataError(f"malformed synth path: {path}")
    kind, spec = parts
    params: dict[str, float] = {"dur": 1.0}
    for item in query.split("&"):
        if item:
            key, _, value = item.partition("=")
            params[key] = float(value)
    if kind == "keyword":
        try:
            c, s, u = spec.split(".")
            params["class_id"] = int(c[1:])
            params["speaker_seed"] = int(s[1:])
            params["utt_seed"] = int(u[1:])
        except (ValueError, IndexError):
            raise DataError(f"malformed keyword synth path: {path}") from None
    else:
        try:
            params["seed"] = int(spec)
        except ValueError:
            raise DataError(f"malformed synth path: {path}") from None
    return kind, params


def load_clip(path: str) -> AudioClip:
    """Resolve a manifest path (real file or synth pseudo-path) to audio."""
    if path.startswith("synth://"):
        kind, params = parse_synth_path(path)
        if kind == "keyword":
            return synth_clip(
                "keyword",
                duration=params["dur"],
                class_id=int(params["class_id"]),
                speaker_seed=int(params["speaker_seed"]),
                utt_seed=int(params["utt_seed"]),
            )
        return synth_clip(kind, duration=params["dur"], seed=int(params["seed"]))
    return read_wav(path)
