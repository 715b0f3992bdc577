"""Per-utterance feature extraction for all eleven feature kinds."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..audio import FrameMatrix, Signal, enhance, frame_and_window, frame_length, pre_emphasize
from ..errors import DegenerateFrameError, SignalTooShortError
from .cepstrum import complex_cepstrum
from .cqcc import CqtParams, cqcc, cqt
from .io import FeatureKind, FeatureMatrix
from .lpc import lpc, lpc_to_lpcc
from .postproc import cmvn, with_deltas
from .spectral import (
    filterbank_cepstra,
    make_filterbank,
    power_spectrum,
    spectrogram_features,
    subband_centroids,
    subband_cepstra,
    subband_edges,
)

_FILTERBANK_FOR = {
    FeatureKind.MFCC: "mel",
    FeatureKind.IMFCC: "inverted-mel",
    FeatureKind.LFCC: "linear-triangular",
    FeatureKind.RFCC: "linear-rectangular",
}


@dataclass(frozen=True)
class FeatureConfig:
    alpha: float = 0.97
    enhance: bool = True
    frame_len_ms: float = 20.0
    hop_len_ms: float = 10.0
    nfft: int = 512
    n_filters: int = 24
    n_ceps: int = 14
    cqt_bins_per_octave: int = 96
    cqt_octaves: float = 9.0
    cqt_resample_points: int = 16
    n_cqcc: int = 20
    lpc_order: int = 16
    n_lpcc: int = 16
    subband_nfft: int = 16384
    n_subbands: int = 24
    n_ccc: int = 50
    ccc_nfft: int = 1024
    delta_window: int = 2

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("pre-emphasis alpha must lie in [0, 1)")
        if abs(self.hop_len_ms * 2 - self.frame_len_ms) > 1e-9:
            raise ValueError("hop must be half the frame length (50% overlap)")

    def cqt_params(self, sample_rate: int) -> CqtParams:
        return CqtParams.for_rate(sample_rate, self.cqt_octaves, self.cqt_bins_per_octave, self.cqt_resample_points)

    def dimension(self, kind: FeatureKind) -> int:
        if kind in _FILTERBANK_FOR:
            return 3 * self.n_ceps
        return {
            FeatureKind.CQCC: 3 * self.n_cqcc,
            FeatureKind.LPCC: self.n_lpcc,
            FeatureKind.SPEC_AMP: self.nfft // 2 + 1,
            FeatureKind.SPEC_PHASE: self.nfft // 2 + 1,
            FeatureKind.SCFC: self.n_subbands,
            FeatureKind.SCMC: self.n_subbands,
            FeatureKind.CCC: self.n_ccc,
        }[kind]


@lru_cache(maxsize=32)
def _filterbank(kind: str, M: int, nfft: int, sample_rate: int):
    return make_filterbank(kind, M, nfft, sample_rate)


def preprocess(sig: Signal, cfg: FeatureConfig) -> Signal:
    if len(sig) < frame_length(sig.sample_rate, cfg.frame_len_ms):
        raise SignalTooShortError("utterance shorter than one analysis frame")
    if not np.any(sig.samples):
        raise DegenerateFrameError("silent utterance")
    if cfg.enhance:
        out = enhance(sig, cfg.alpha, cfg.frame_len_ms, cfg.hop_len_ms)
    else:
        out = pre_emphasize(sig, cfg.alpha)
    if not np.any(out.samples):
        raise DegenerateFrameError("utterance is silent after noise subtraction")
    return out


def _per_frame(frames: FrameMatrix, fn) -> np.ndarray:
    # frames without energy carry no model; drop them instead of emitting garbage
    rows = []
    for frame in frames.frames:
        try:
            rows.append(fn(frame))
        except DegenerateFrameError:
            continue
    if len(rows) < 2:
        raise DegenerateFrameError("fewer than two frames with usable energy")
    return np.vstack(rows)


def static_features(kind: FeatureKind, sig: Signal, cfg: FeatureConfig) -> np.ndarray:
    """Frame-level features before deltas and normalisation, on an already preprocessed signal."""
    sr = sig.sample_rate
    if kind is FeatureKind.CQCC:
        p = cfg.cqt_params(sr)
        return cqcc(cqt(sig, p, cfg.hop_len_ms, cfg.frame_len_ms), p, cfg.n_cqcc)

    frames = frame_and_window(sig, cfg.frame_len_ms, cfg.hop_len_ms)
    if kind in _FILTERBANK_FOR:
        fb = _filterbank(_FILTERBANK_FOR[kind], cfg.n_filters, cfg.nfft, sr)
        return filterbank_cepstra(power_spectrum(frames, cfg.nfft), fb, cfg.n_ceps)
    if kind in (FeatureKind.SPEC_AMP, FeatureKind.SPEC_PHASE):
        amp, phase = spectrogram_features(frames, cfg.nfft)
        return amp if kind is FeatureKind.SPEC_AMP else phase
    if kind in (FeatureKind.SCFC, FeatureKind.SCMC):
        nfft = cfg.subband_nfft
        powspec = power_spectrum(frames, nfft)
        edges = subband_edges(nfft // 2, cfg.n_subbands)
        scf, scm = subband_centroids(powspec, edges, np.arange(nfft // 2 + 1) * sr / nfft)
        return scf if kind is FeatureKind.SCFC else subband_cepstra(scm)
    if kind is FeatureKind.LPCC:
        return _per_frame(frames, lambda f: lpc_to_lpcc(lpc(f, cfg.lpc_order), cfg.n_lpcc))
    if kind is FeatureKind.CCC:
        return _per_frame(frames, lambda f: complex_cepstrum(f, cfg.n_ccc, cfg.ccc_nfft))
    raise ValueError(f"unsupported feature kind {kind!r}")


def _finish(kind: FeatureKind, values: np.ndarray, cfg: FeatureConfig) -> FeatureMatrix:
    if kind in _FILTERBANK_FOR or kind is FeatureKind.CQCC:
        values = with_deltas(values, cfg.delta_window)
    values = cmvn(values)
    if not np.all(np.isfinite(values)):
        raise DegenerateFrameError(f"{kind.name} produced non-finite values")
    return FeatureMatrix(values, kind)


def _kind(kind) -> FeatureKind:
    return FeatureKind.parse(kind) if isinstance(kind, str) else FeatureKind(kind)


def extract(kind: FeatureKind | str, sig: Signal, cfg: FeatureConfig | None = None) -> FeatureMatrix:
    """Preprocess, extract, append deltas where applicable and normalise."""
    cfg = cfg or FeatureConfig()
    kind = _kind(kind)
    return _finish(kind, static_features(kind, preprocess(sig, cfg), cfg), cfg)


def extract_many(kinds, sig: Signal, cfg: FeatureConfig | None = None) -> dict[FeatureKind, FeatureMatrix]:
    """Extract several kinds while sharing one preprocessing pass."""
    cfg = cfg or FeatureConfig()
    clean = preprocess(sig, cfg)
    return {k: _finish(k, static_features(k, clean, cfg), cfg) for k in map(_kind, kinds)}
