"""Deterministic synthetic stand-in for a replay-spoofing corpus.

Genuine utterances are voiced harmonic complexes shaped by random formant
resonators, interleaved with filtered-noise fricatives and recorded through a
mild microphone channel.  Spoofed utterances are genuine captures from the
same subset passed through a replay chain: loudspeaker band limiting and colouration,
soft clipping, a short room response and re-recording noise.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import signal as sps

from ..audio import Signal, write_wav
from .manifest import Entry, Manifest, save_manifest

SAMPLE_RATE = 16000
MIN_SIZE = 40
# calibrated so desk-scale single systems land between 10% and 40% EER
DEFAULT_SEVERITY = 0.5


def _resonator(x: np.ndarray, freq: float, bandwidth: float, sr: int) -> np.ndarray:
    r = np.exp(-np.pi * bandwidth / sr)
    theta = 2 * np.pi * freq / sr
    a = [1.0, -2 * r * np.cos(theta), r * r]
    return sps.lfilter([1.0 - r], a, x)


def speech_like(rng: np.random.Generator, duration: float, sr: int = SAMPLE_RATE) -> np.ndarray:
    n = int(duration * sr)
    t = np.arange(n) / sr
    f0 = rng.uniform(90, 240) * (1 + 0.08 * np.sin(2 * np.pi * rng.uniform(0.5, 2.0) * t + rng.uniform(0, 6.3)))
    phase = 2 * np.pi * np.cumsum(f0) / sr
    n_harm = int(4000 / f0.max())
    tilt = rng.uniform(0.6, 1.2)
    voiced = sum(np.sin(h * phase + rng.uniform(0, 6.3)) / h**tilt for h in range(1, n_harm + 1))
    source = voiced + 0.05 * rng.normal(size=n)
    formants = [(rng.uniform(300, 900), 80), (rng.uniform(900, 2400), 120), (rng.uniform(2400, 3600), 180)]
    shaped = sum(_resonator(source, f, bw, sr) * g for (f, bw), g in zip(formants, (1.0, 0.6, 0.3)))

    rate = rng.uniform(3, 5)
    envelope = np.clip(np.sin(2 * np.pi * rate * t + rng.uniform(0, 6.3)), 0, None) ** 0.7
    fric = sps.lfilter(*sps.butter(2, rng.uniform(2500, 5000) / (sr / 2), "high"), rng.normal(size=n))
    fric_env = np.clip(np.sin(2 * np.pi * rate * t + np.pi + rng.uniform(-0.5, 0.5)), 0, None) ** 2
    x = shaped / (np.std(shaped) + 1e-12) * envelope + 0.25 * fric * fric_env
    return x / (np.max(np.abs(x)) + 1e-12)


def microphone(x: np.ndarray, rng: np.random.Generator, sr: int = SAMPLE_RATE) -> np.ndarray:
    """Close-talk capture with device variation that overlaps the replay cues."""
    lo = rng.uniform(50, 250)
    hi = rng.uniform(5000, 7900)
    b, a = sps.butter(1, [lo / (sr / 2), hi / (sr / 2)], "band")
    y = sps.lfilter(b, a, x)
    y = y + 10 ** (rng.uniform(-55, -35) / 20) * np.std(y) * rng.normal(size=len(y))
    return y


def replay_channel(x: np.ndarray, rng: np.random.Generator, sr: int = SAMPLE_RATE, severity: float = 1.0) -> np.ndarray:
    """Loudspeaker playback and re-recording of an already captured utterance."""
    lo = rng.uniform(80, 80 + 300 * severity)
    hi = rng.uniform(7800 - 3500 * severity, 7800)
    b, a = sps.butter(int(rng.integers(1, 3)), [lo / (sr / 2), hi / (sr / 2)], "band")
    y = sps.lfilter(b, a, x)
    peak = rng.uniform(800, 4000)
    y = y + rng.uniform(0.0, 0.4 * severity) * _resonator(y, peak, rng.uniform(150, 600), sr)
    drive = 1 + rng.uniform(0, 2.0 * severity)
    y = np.tanh(drive * y / (np.max(np.abs(y)) + 1e-12)) / np.tanh(drive)
    rt = rng.uniform(0.05, 0.05 + 0.2 * severity)
    ir_len = int(rt * sr)
    ir = rng.normal(size=ir_len) * np.exp(-6.9 * np.arange(ir_len) / ir_len)
    ir[0] = 0.0
    ir = ir / np.sqrt(np.sum(ir**2)) * rng.uniform(0.05, 0.3 * severity + 0.05)
    ir[0] = 1.0
    y = sps.fftconvolve(y, ir)[: len(y)]
    snr_db = rng.uniform(40 - 15 * severity, 45)
    noise = rng.normal(size=len(y))
    y = y + noise * np.std(y) / 10 ** (snr_db / 20)
    return y


def _finish(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.3, 0.8) * x / (np.max(np.abs(x)) + 1e-12)


def _emit(out_dir: Path, utt_id: str, x: np.ndarray, label: str, subset: str, rng) -> Entry:
    rel = f"wav/{utt_id}.wav"
    write_wav(out_dir / rel, Signal(_finish(x, rng), SAMPLE_RATE))
    return Entry(utt_id, rel, label, subset)


def subset_counts(size: int) -> dict[str, tuple[int, int]]:
    """(genuine, spoof) counts per subset: half train, a quarter each dev and eval."""
    n_train, n_dev = size // 2, size // 4
    counts = {}
    for name, n in (("train", n_train), ("dev", n_dev), ("eval", size - n_train - n_dev)):
        counts[name] = (n - n // 2, n // 2)
    return counts


def synth_corpus(out_dir, size: int = 200, seed: int = 7, severity: float = DEFAULT_SEVERITY) -> Manifest:
    """Write WAV files plus ``manifest.tsv`` under ``out_dir``."""
    if size < MIN_SIZE:
        raise ValueError(f"synthetic corpus size must be at least {MIN_SIZE}")
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for subset, (n_gen, n_spf) in subset_counts(size).items():
        captures = []
        for i in range(n_gen):
            x = microphone(speech_like(rng, rng.uniform(1.2, 2.0)), rng)
            captures.append(x)
            entries.append(_emit(out_dir, f"{subset[0].upper()}G{i:04d}", x, "genuine", subset, rng))
        # spoof i replays genuine capture i of the same subset
        for i in range(n_spf):
            x = replay_channel(captures[i], rng, severity=severity)
            entries.append(_emit(out_dir, f"{subset[0].upper()}S{i:04d}", x, "spoof", subset, rng))
    manifest = Manifest(tuple(entries), out_dir)
    save_manifest(out_dir / "manifest.tsv", manifest)
    return manifest
