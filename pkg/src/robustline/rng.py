"""Deterministic named random streams.

Every random choice in the pipeline flows from a single root seed through
named child streams (corpus, corruption, init, shuffle, ...), and
per-utterance streams are keyed by utterance id. This makes any stage
independently replayable and keeps outputs independent of corpus order or
worker scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root_seed: int, *names) -> int:
    """Derive a 64-bit child seed from a root seed and a path of names.

    Stable across runs and platforms (SHA-256 based, no use of Python's
    salted ``hash``).
    """
    h = hashlib.sha256()
    h.update(str(int(root_seed)).encode("utf-8"))
    for name in names:
        h.update(b"/")
        h.update(str(name).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def child_rng(root_seed: int, *names) -> np.random.Generator:
    """A fresh generator for the named child stream."""
    return np.random.default_rng(derive_seed(root_seed, *names))
