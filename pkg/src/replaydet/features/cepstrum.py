"""Complex cepstrum with phase unwrapping and linear-phase removal."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateFrameError

MAG_FLOOR = 1e-12


def complex_cepstrum(frame: np.ndarray, count: int = 50, nfft: int = 1024) -> np.ndarray:
    """First ``count`` coefficients of the complex cepstrum of one frame.

    The unwrapped phase has its integer winding at Nyquist removed before the
    inverse transform, which keeps the cepstrum real-valued and free of the
    delay term.
    """
    x = np.asarray(frame, dtype=np.float64)
    if not np.any(x):
        raise DegenerateFrameError("all-zero frame has no cepstrum")
    if nfft < len(x):
        raise ValueError(f"nfft={nfft} is shorter than the frame")
    if count > nfft // 2:
        raise ValueError(f"count={count} exceeds half of nfft={nfft}")
    spec = np.fft.rfft(x, n=nfft)
    half = nfft // 2
    log_mag = np.log(np.maximum(np.abs(spec), MAG_FLOOR))
    phase = np.unwrap(np.angle(spec))
    winding = np.round(phase[half] / np.pi)
    phase = phase - np.pi * winding * np.arange(half + 1) / half
    return np.fft.irfft(log_mag + 1j * phase, n=nfft)[:count]
