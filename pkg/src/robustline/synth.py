"""Deterministic synthetic audio for desk-scale experiments.

Stands in for a real command corpus and noise database. Keyword clips are
formant-like tone stacks: each class owns a fixed formant triple, each
speaker a consistent vocal-tract scale and pitch habit, and each utterance
small timing/jitter variation. Environmental noises are long colored
stationary textures; impulsive noises are short decaying bursts in
near-silence.

Everything is a pure function of its seeds.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioClip
from .errors import DataError
from .rng import child_rng

# GSC-style command inventory; class c uses WORDS[c] as its label.
WORDS = (
    "yes no up down left right on off stop go zero one two three four "
    "five six seven eight nine bed bird cat dog happy house marvin sheila "
    "tree wow backward forward follow learn visual"
).split()

_GOLDEN = 0.6180339887498949


def _frac(x: float) -> float:
    return x - np.floor(x)


def class_formants(class_id: int) -> tuple[float, float, float]:
    """Fixed formant triple for a keyword class, in Hz.

    Low-discrepancy spacing keeps any number of classes spectrally spread
    without a hand-maintained table.
    """
    u1 = _frac((class_id + 1) * _GOLDEN)
    u2 = _frac((class_id + 1) * 0.7548776662466927)
    u3 = _frac((class_id + 1) * 0.5698402909980532)
    f1 = 320.0 + 620.0 * u1
    f2 = f1 * (2.1 + 0.6 * u2)
    f3 = f1 * (3.3 + 0.9 * u3)
    return f1, f2, f3


def _keyword(duration, sample_rate, class_id, speaker_seed, utt_seed):
    n = int(round(duration * sample_rate))
    spk = child_rng(speaker_seed, "speaker-voice")
    vocal_scale = spk.uniform(0.90, 1.10)
    tilt = spk.uniform(0.4, 0.8)  # amplitude rolloff of upper formants
    vib_rate = spk.uniform(4.0, 7.0)

    utt = child_rng(utt_seed, "utterance", class_id, speaker_seed)
    core = utt.uniform(0.40, 0.65) * duration
    onset = utt.uniform(0.05, max(0.06, duration - core - 0.05))
    pitch_jitter = utt.uniform(-0.04, 0.04)
    vib_depth = utt.uniform(0.005, 0.02)
    vib_phase = utt.uniform(0.0, 2 * np.pi)
    peak = utt.uniform(0.20, 0.30)
    formant_jitter = utt.uniform(-0.03, 0.03, size=3)
    phases = utt.uniform(0.0, 2 * np.pi, size=3)

    t = np.arange(n) / sample_rate
    local = (t - onset) / core
    voiced = (local >= 0.0) & (local <= 1.0)

    # raised-cosine attack/release inside the voiced core
    env = np.zeros(n)
    attack, release = 0.12, 0.20
    x = np.clip(local, 0.0, 1.0)
    env[voiced] = 1.0
    a = voiced & (x < attack)
    env[a] = 0.5 - 0.5 * np.cos(np.pi * x[a] / attack)
    r = voiced & (x > 1.0 - release)
    env[r] = 0.5 - 0.5 * np.cos(np.pi * (1.0 - x[r]) / release)

    vibrato = 1.0 + vib_depth * np.sin(2 * np.pi * vib_rate * t + vib_phase)
    scale = vocal_scale * (1.0 + pitch_jitter)
    amps = (1.0, tilt, tilt * 0.55)
    signal = np.zeros(n)
    for k, base_f in enumerate(class_formants(class_id)):
        freq = base_f * scale * (1.0 + formant_jitter[k])
        phase = 2 * np.pi * freq * np.cumsum(vibrato) / sample_rate
        signal += amps[k] * np.sin(phase + phases[k])
    signal *= env

    breath = 2e-4 * utt.standard_normal(n)
    signal += breath
    top = float(np.max(np.abs(signal)))
    if top > 0:
        signal *= peak / top
    return signal


def _env_noise(duration, sample_rate, seed):
    n = int(round(duration * sample_rate))
    rng = child_rng(seed, "env-noise")
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)

    corner = rng.uniform(150.0, 800.0)
    slope = rng.uniform(1.0, 2.0)
    shape = 1.0 / np.power(1.0 + freqs / corner, slope)
    for _ in range(rng.integers(2, 5)):
        center = rng.uniform(200.0, 4000.0)
        width = rng.uniform(100.0, 400.0)
        gain = rng.uniform(2.0, 6.0)
        shape += gain * np.exp(-0.5 * ((freqs - center) / width) ** 2)
    colored = np.fft.irfft(spectrum * shape, n=n)

    # slow level drift, quasi-stationary like a vehicle recording
    mod_rate = rng.uniform(0.1, 0.5)
    mod_phase = rng.uniform(0.0, 2 * np.pi)
    t = np.arange(n) / sample_rate
    colored *= 1.0 + 0.15 * np.sin(2 * np.pi * mod_rate * t + mod_phase)

    target_rms = rng.uniform(0.05, 0.15)
    colored *= target_rms / max(float(np.sqrt(np.mean(colored**2))), 1e-12)
    return np.clip(colored, -0.97, 0.97)


def _imp_noise(duration, sample_rate, seed):
    n = int(round(duration * sample_rate))
    rng = child_rng(seed, "imp-noise")
    signal = 1e-4 * rng.standard_normal(n)

    tau = rng.uniform(0.015, 0.060)
    onset = int(rng.uniform(0.1, 0.5) * n)
    peak = rng.uniform(0.5, 0.8)
    length = min(n - onset, int(6 * tau * sample_rate))
    t = np.arange(length) / sample_rate
    burst = np.exp(-t / tau) * rng.standard_normal(length)
    burst *= peak / max(float(np.max(np.abs(burst))), 1e-12)
    signal[onset : onset + length] += burst

    if rng.random() < 0.5:  # short reflection, kept inside the main window
        delay = int(rng.uniform(0.030, 0.050) * sample_rate)
        echo_len = min(length // 2, n - onset - delay)
        if echo_len > 0:
            t2 = np.arange(echo_len) / sample_rate
            echo = np.exp(-t2 / (tau * 0.5)) * rng.standard_normal(echo_len)
            echo *= (peak * rng.uniform(0.25, 0.45)) / max(
                float(np.max(np.abs(echo))), 1e-12
            )
            signal[onset + delay : onset + delay + echo_len] += echo
    return np.clip(signal, -0.97, 0.97)


def synth_clip(
    kind: str,
    duration: float = 1.0,
    sample_rate: int = 16000,
    *,
    class_id: int = 0,
    speaker_seed: int = 0,
    utt_seed: int = 0,
    seed: int = 0,
) -> AudioClip:
    """Generate a deterministic synthetic clip of the given kind.

    kind is one of ``keyword`` (uses class_id, speaker_seed, utt_seed),
    ``env_noise`` or ``imp_noise`` (use seed).
    """
    if duration <= 0:
        raise DataError(f"duration must be positive, got {duration}")
    if kind == "keyword":
        samples = _keyword(duration, sample_rate, class_id, speaker_seed, utt_seed)
    elif kind == "env_noise":
        samples = _env_noise(duration, sample_rate, seed)
    elif kind == "imp_noise":
        samples = _imp_noise(duration, sample_rate, seed)
    else:
        raise DataError(f"unknown synth kind {kind!r}")
    return AudioClip(samples=samples, sample_rate=sample_rate)


def spectral_centroid(clip: AudioClip) -> float:
    """Magnitude-weighted mean frequency, in Hz."""
    mags = np.abs(np.fft.rfft(clip.samples))
    freqs = np.fft.rfftfreq(len(clip), d=1.0 / clip.sample_rate)
    total = float(np.sum(mags))
    if total == 0.0:
        return 0.0
    return float(np.sum(freqs * mags) / total)
