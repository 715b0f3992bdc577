"""Audio decoding, pre-emphasis, spectral noise subtraction and framing."""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._fileio import atomic_write_bytes
from .errors import (
    EmptyAudioError,
    InsufficientDataError,
    ShapeError,
    SignalTooShortError,
    UnreadableAudioError,
    UnsupportedEncodingError,
)

PCM_SCALE = 32768.0


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameMatrix:
    """T x L matrix of windowed frames with 50% overlap."""

    frames: np.ndarray
    frame_len_ms: float
    hop_len_ms: float
    sample_rate: int
    window: str = "hamming"

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_len(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class NoiseProfile:
    psd: np.ndarray

    def __post_init__(self):
        psd = np.asarray(self.psd, dtype=np.float64)
        if np.any(psd < 0):
            raise ValueError("noise psd must be nonnegative")
        object.__setattr__(self, "psd", psd)


def load_wav(path) -> Signal:
    """Read a 16-bit PCM WAVE file, mixing stereo down to mono.

    Samples are scaled to [-1, 1) by dividing by 32768.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except FileNotFoundError as exc:
        raise UnreadableAudioError(f"{path}: no such file") from exc
    except wave.Error as exc:
        # the stdlib reader only understands WAVE_FORMAT_PCM
        if "unknown format" in str(exc):
            raise UnsupportedEncodingError(f"{path}: {exc}") from exc
        raise UnreadableAudioError(f"{path}: {exc}") from exc
    except (EOFError, OSError) as exc:
        raise UnreadableAudioError(f"{path}: {exc}") from exc
    if width != 2:
        raise UnsupportedEncodingError(f"{path}: {8 * width}-bit PCM, expected 16-bit")
    pcm = np.frombuffer(raw, dtype="<i2")
    if pcm.size == 0:
        raise EmptyAudioError(f"{path}: zero-length audio")
    pcm = pcm.reshape(-1, n_channels).astype(np.float64)
    mono = pcm.mean(axis=1) if n_channels > 1 else pcm[:, 0]
    return Signal(mono / PCM_SCALE, rate)


def write_wav(path, sig: Signal) -> None:
    """Write a mono Signal as 16-bit PCM, clipping to the representable range."""
    pcm = np.clip(np.round(sig.samples * PCM_SCALE), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(sig.sample_rate))
        wf.writeframes(pcm.tobytes())
    atomic_write_bytes(path, buf.getvalue())


def pre_emphasize(sig: Signal, alpha: float = 0.97) -> Signal:
    x = sig.samples
    y = np.empty_like(x)
    y[:1] = x[:1]
    y[1:] = x[1:] - alpha * x[:-1]
    return Signal(y, sig.sample_rate)


def frame_length(sample_rate: int, frame_len_ms: float) -> int:
    return int(round(frame_len_ms * sample_rate / 1000.0))


def fft_length(frame_len: int) -> int:
    """Smallest power of two holding one frame."""
    return 1 << max(0, int(frame_len - 1).bit_length())


def hamming(n: int) -> np.ndarray:
    i = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * i / (n - 1))


def _frame_view(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    n_frames = 1 + (len(x) - frame_len) // hop
    return np.lib.stride_tricks.as_strided(
        x, shape=(n_frames, frame_len), strides=(hop * x.strides[0], x.strides[0]), writeable=False
    )


def frame_and_window(
    sig: Signal, frame_len_ms: float = 20.0, hop_len_ms: float = 10.0, window: str = "hamming"
) -> FrameMatrix:
    if window != "hamming":
        raise ValueError(f"unsupported window {window!r}")
    L = frame_length(sig.sample_rate, frame_len_ms)
    hop = frame_length(sig.sample_rate, hop_len_ms)
    if hop <= 0 or L <= 1:
        raise ValueError("frame and hop lengths must be positive")
    if len(sig) < L:
        raise SignalTooShortError(f"signal of {len(sig)} samples is shorter than one {L}-sample frame")
    x = np.ascontiguousarray(sig.samples)
    frames = _frame_view(x, L, hop) * hamming(L)
    return FrameMatrix(frames, frame_len_ms, hop_len_ms, sig.sample_rate, window)


def estimate_noise(frames: FrameMatrix, nfft: int, quantile: float = 0.1) -> NoiseProfile:
    """Mean power spectrum of the lowest-energy 10% of frames (at least one)."""
    T = frames.n_frames
    if T < 1:
        raise InsufficientDataError("noise estimation needs at least one frame")
    energy = np.sum(frames.frames**2, axis=1)
    n_quiet = max(1, int(np.floor(quantile * T)))
    # stable sort keeps the selection deterministic under ties
    quiet = np.argsort(energy, kind="stable")[:n_quiet]
    spec = np.fft.rfft(frames.frames[quiet], n=nfft, axis=1)
    return NoiseProfile(np.mean(np.abs(spec) ** 2, axis=0))


def spectral_subtract(
    sig: Signal,
    noise: NoiseProfile,
    frame_len_ms: float = 20.0,
    hop_len_ms: float = 10.0,
    nfft: int | None = None,
) -> Signal:
    """Half-wave rectified power subtraction with the noisy phase kept.

    Frames are Hamming-windowed, the enhanced spectra are inverted and
    recombined by weighted overlap-add normalized by the summed squared
    window, so an all-zero profile reproduces the input.
    """
    L = frame_length(sig.sample_rate, frame_len_ms)
    hop = frame_length(sig.sample_rate, hop_len_ms)
    if nfft is None:
        nfft = fft_length(L)
    if nfft < L:
        raise ShapeError(f"nfft={nfft} shorter than frame length {L}")
    if noise.psd.shape != (nfft // 2 + 1,):
        raise ShapeError(f"noise psd has {noise.psd.shape[0]} bins, expected {nfft // 2 + 1}")
    x = sig.samples
    n = len(x)
    if n < L:
        raise SignalTooShortError(f"signal of {n} samples is shorter than one {L}-sample frame")

    n_frames = 1 + int(np.ceil(max(n - L, 0) / hop))
    padded = np.zeros((n_frames - 1) * hop + L)
    padded[:n] = x
    w = hamming(L)
    frames = _frame_view(padded, L, hop) * w
    spec = np.fft.rfft(frames, n=nfft, axis=1)
    power = np.abs(spec) ** 2
    enhanced = np.maximum(power - noise.psd, 0.0)
    spec = np.sqrt(enhanced) * np.exp(1j * np.angle(spec))
    rebuilt = np.fft.irfft(spec, n=nfft, axis=1)[:, :L] * w

    out = np.zeros_like(padded)
    norm = np.zeros_like(padded)
    for t in range(n_frames):
        start = t * hop
        out[start : start + L] += rebuilt[t]
        norm[start : start + L] += w**2
    return Signal(out[:n] / norm[:n], sig.sample_rate)


def enhance(sig: Signal, alpha: float = 0.97, frame_len_ms: float = 20.0, hop_len_ms: float = 10.0) -> Signal:
    """Pre-emphasis followed by one spectral-subtraction pass."""
    emph = pre_emphasize(sig, alpha)
    L = frame_length(sig.sample_rate, frame_len_ms)
    nfft = fft_length(L)
    noise = estimate_noise(frame_and_window(emph, frame_len_ms, hop_len_ms), nfft)
    return spectral_subtract(emph, noise, frame_len_ms, hop_len_ms, nfft)
