"""Constant-Q transform and constant-Q cepstral coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..audio import Signal
from ..errors import ShapeError, SignalTooShortError
from .spectral import LOG_FLOOR, cosine_transform


@dataclass(frozen=True)
class CqtParams:
    """Geometric bin layout ``f_j = fmin * 2**(j / bins_per_octave)``.

    ``resample_points`` is the number of uniform samples per octave used when
    the log-power axis is linearised.
    """

    bins_per_octave: int = 96
    fmin: float = 8000.0 / 2**9
    fmax: float = 8000.0
    resample_points: int = 16

    def __post_init__(self):
        if self.bins_per_octave < 12:
            raise ValueError("bins_per_octave must be at least 12")
        if not 0 < self.fmin < self.fmax:
            raise ValueError("need 0 < fmin < fmax")
        if self.resample_points < 1:
            raise ValueError("resample_points must be positive")

    @classmethod
    def for_rate(cls, sample_rate: int, octaves: float = 9, bins_per_octave: int = 96, resample_points: int = 16):
        fmax = sample_rate / 2.0
        return cls(bins_per_octave, fmax / 2.0**octaves, fmax, resample_points)

    @property
    def octaves(self) -> float:
        return math.log2(self.fmax / self.fmin)

    @property
    def n_bins(self) -> int:
        return int(round(self.bins_per_octave * self.octaves))

    @property
    def q_factor(self) -> float:
        return 1.0 / (2.0 ** (1.0 / self.bins_per_octave) - 1.0)

    def centre_frequencies(self) -> np.ndarray:
        return self.fmin * 2.0 ** (np.arange(self.n_bins) / self.bins_per_octave)

    def window_lengths(self, sample_rate: int) -> np.ndarray:
        return np.ceil(self.q_factor * sample_rate / self.centre_frequencies()).astype(int)

    def validate(self, sample_rate: int) -> None:
        if self.fmax > sample_rate / 2.0 + 1e-9:
            raise ValueError(f"fmax={self.fmax} exceeds Nyquist for {sample_rate} Hz")


def _kernels(p: CqtParams, sample_rate: int):
    freqs = p.centre_frequencies()
    kernels = []
    for f, n in zip(freqs, p.window_lengths(sample_rate)):
        w = np.hanning(n + 2)[1:-1]
        t = (np.arange(n) - (n - 1) / 2.0) / sample_rate
        k = w * np.exp(-2j * np.pi * f * t) / w.sum()
        kernels.append(np.stack([k.real, k.imag], axis=1))
    return kernels


def cqt(
    sig: Signal,
    p: CqtParams,
    hop_len_ms: float = 10.0,
    frame_len_ms: float = 20.0,
    max_block: int = 1 << 22,
) -> np.ndarray:
    """Constant-Q transform sampled once per feature frame.

    Frame ``i`` is centred where the ``i``-th STFT frame is centred, so the
    output has as many rows as ``frame_and_window`` produces.  Each bin is the
    inner product with a Hann-windowed complex exponential whose length
    ``ceil(Q * sr / f_j)`` keeps ``f_j / bandwidth`` constant.  Kernels are
    normalised so a unit-amplitude tone at a bin centre gives magnitude 0.5.
    """
    p.validate(sig.sample_rate)
    sr = sig.sample_rate
    lengths = p.window_lengths(sr)
    longest = int(lengths.max())
    x = sig.samples
    if len(x) < longest:
        raise SignalTooShortError(
            f"signal of {len(x)} samples is shorter than the longest CQT window ({longest} samples)"
        )
    hop = int(round(hop_len_ms * sr / 1000.0))
    L = int(round(frame_len_ms * sr / 1000.0))
    n_frames = 1 + (len(x) - L) // hop if len(x) >= L else 1
    half = longest // 2 + 1
    padded = np.concatenate([np.zeros(half), x, np.zeros(half + longest)])
    centres = half + np.arange(n_frames) * hop + L // 2

    kernels = _kernels(p, sr)
    out = np.empty((n_frames, p.n_bins), dtype=np.complex128)
    block = max(1, max_block // longest)
    for b0 in range(0, n_frames, block):
        c = centres[b0 : b0 + block]
        start = c - longest // 2
        idx = start[:, None] + np.arange(longest + 1)[None, :]
        seg = padded[idx]
        for j, (n, k) in enumerate(zip(lengths, kernels)):
            lo = longest // 2 - (n - 1) // 2
            prod = seg[:, lo : lo + n] @ k
            out[b0 : b0 + block, j] = prod[:, 0] + 1j * prod[:, 1]
    return out


def resample_axis(p: CqtParams) -> tuple[np.ndarray, np.ndarray]:
    """Geometric bin centres and the uniform-in-Hz points they are resampled to.

    The uniform grid has ``resample_points * log2(fmax / fmin)`` samples
    spanning the centre frequencies of the first and last bins.
    """
    U = int(round(p.resample_points * p.octaves))
    freqs = p.centre_frequencies()
    return freqs, np.linspace(freqs[0], freqs[-1], U)


def cqcc(cq: np.ndarray, p: CqtParams, q_count: int = 20, floor: float = LOG_FLOOR) -> np.ndarray:
    """Static CQCCs: log power, linear interpolation onto a uniform Hz axis, cosine transform."""
    cq = np.atleast_2d(cq)
    if cq.shape[1] == 0:
        raise ShapeError("empty constant-Q matrix")
    if cq.shape[1] != p.n_bins:
        raise ShapeError(f"constant-Q matrix has {cq.shape[1]} bins, parameters imply {p.n_bins}")
    freqs, uniform_hz = resample_axis(p)
    if q_count > uniform_hz.size:
        raise ShapeError(f"q_count={q_count} exceeds the {uniform_hz.size}-point resampled axis")
    logp = np.log(np.maximum(np.abs(cq) ** 2, floor))
    lo = np.clip(np.searchsorted(freqs, uniform_hz, side="right") - 1, 0, freqs.size - 2)
    frac = np.clip((uniform_hz - freqs[lo]) / (freqs[lo + 1] - freqs[lo]), 0.0, 1.0)
    linear = logp[:, lo] * (1.0 - frac) + logp[:, lo + 1] * frac
    return cosine_transform(linear, q_count)
