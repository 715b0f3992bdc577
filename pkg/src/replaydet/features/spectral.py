"""DFT-domain features: filterbank cepstra, spectrogram and sub-band centroids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..audio import FrameMatrix
from ..errors import ShapeError

LOG_FLOOR = 1e-12

FILTERBANK_KINDS = ("mel", "inverted-mel", "linear-triangular", "linear-rectangular")


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def power_spectrum(frames: FrameMatrix | np.ndarray, nfft: int) -> np.ndarray:
    """Squared magnitude of the first nfft/2+1 bins of each zero-padded frame."""
    x = frames.frames if isinstance(frames, FrameMatrix) else np.atleast_2d(frames)
    if nfft < x.shape[1]:
        raise ShapeError(f"nfft={nfft} is shorter than the frame length {x.shape[1]}")
    return np.abs(np.fft.rfft(x, n=nfft, axis=1)) ** 2


def cosine_transform(values: np.ndarray, count: int) -> np.ndarray:
    """Unnormalized DCT along the last axis: sum_m v[m] cos(q (m + 0.5) pi / M).

    This is the cosine kernel of the standard MFCC definition with m counted
    from zero.  The q = 0 term is the plain sum of the inputs.
    """
    M = values.shape[-1]
    if count > M:
        raise ShapeError(f"cannot keep {count} coefficients from {M} inputs")
    q = np.arange(count)[:, None]
    m = np.arange(M)[None, :]
    kernel = np.cos(q * (m + 0.5) * np.pi / M)
    return values @ kernel.T


@dataclass(frozen=True)
class FilterBank:
    kind: str
    responses: np.ndarray
    nfft: int
    sample_rate: int

    @property
    def n_filters(self) -> int:
        return self.responses.shape[0]


def _triangles(edges_hz: np.ndarray, bin_hz: np.ndarray) -> np.ndarray:
    lo, mid, hi = edges_hz[:-2, None], edges_hz[1:-1, None], edges_hz[2:, None]
    rising = (bin_hz - lo) / (mid - lo)
    falling = (hi - bin_hz) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


def make_filterbank(kind: str, M: int = 24, nfft: int = 512, sample_rate: int = 16000) -> FilterBank:
    """Build one of the four filterbanks used by the cepstral features.

    Triangular filters span their neighbours' centres so adjacent filters
    overlap by half.  The inverted-mel bank is the mel bank mirrored about
    half the Nyquist band, which concentrates filters at high frequency.
    Rectangular filters use ``(nfft//2 + 1) // M`` bins each and leave the
    remainder at the top of the spectrum unused.
    """
    if kind not in FILTERBANK_KINDS:
        raise ValueError(f"unknown filterbank kind {kind!r}")
    if M < 2:
        raise ValueError("a filterbank needs at least two filters")
    n_bins = nfft // 2 + 1
    nyquist = sample_rate / 2.0
    bin_hz = np.arange(n_bins) * sample_rate / nfft

    if kind == "mel" or kind == "inverted-mel":
        edges = mel_to_hz(np.linspace(0.0, hz_to_mel(nyquist), M + 2))
        H = _triangles(edges, bin_hz)
        if kind == "inverted-mel":
            H = H[::-1, ::-1].copy()
    elif kind == "linear-triangular":
        H = _triangles(np.linspace(0.0, nyquist, M + 2), bin_hz)
    else:
        width = n_bins // M
        if width == 0:
            raise ValueError(f"{M} rectangular filters do not fit in {n_bins} bins")
        H = np.zeros((M, n_bins))
        for m in range(M):
            H[m, m * width : (m + 1) * width] = 1.0

    empty = np.flatnonzero(~np.any(H > 0, axis=1))
    if empty.size:
        raise ValueError(f"filters {empty.tolist()} cover no DFT bin at nfft={nfft}")
    return FilterBank(kind, H, nfft, sample_rate)


def filter_energies(powspec: np.ndarray, fb: FilterBank) -> np.ndarray:
    if powspec.shape[-1] != fb.responses.shape[1]:
        raise ShapeError(f"power spectrum has {powspec.shape[-1]} bins, filterbank expects {fb.responses.shape[1]}")
    return powspec @ fb.responses.T


def cepstra_from_energies(energies: np.ndarray, q_count: int = 14, floor: float = LOG_FLOOR) -> np.ndarray:
    return cosine_transform(np.log(np.maximum(energies, floor)), q_count)


def filterbank_cepstra(powspec: np.ndarray, fb: FilterBank, q_count: int = 14, floor: float = LOG_FLOOR) -> np.ndarray:
    """Log filterbank energies followed by the cosine transform.

    Coefficient 0 is kept as the frame energy term.  The same routine gives
    MFCC, IMFCC, LFCC or RFCC depending on the filterbank.
    """
    return cepstra_from_energies(filter_energies(powspec, fb), q_count, floor)


def spectrogram_features(frames: FrameMatrix | np.ndarray, nfft: int) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude and frequency-unwrapped phase of each frame's spectrum."""
    x = frames.frames if isinstance(frames, FrameMatrix) else np.atleast_2d(frames)
    if nfft < x.shape[1]:
        raise ShapeError(f"nfft={nfft} is shorter than the frame length {x.shape[1]}")
    spec = np.fft.rfft(x, n=nfft, axis=1)
    amp = np.abs(spec)
    phase = np.unwrap(np.angle(spec), axis=1)
    return amp, phase


def subband_edges(n_bins: int, n_bands: int) -> np.ndarray:
    """Equally spaced half-open bin boundaries covering ``n_bins`` bins."""
    edges = np.round(np.linspace(0, n_bins, n_bands + 1)).astype(int)
    if np.any(np.diff(edges) < 1):
        raise ValueError(f"{n_bands} sub-bands do not fit in {n_bins} bins")
    return edges


def subband_centroids(
    powspec: np.ndarray, edges, bin_hz: np.ndarray, floor: float = LOG_FLOOR
) -> tuple[np.ndarray, np.ndarray]:
    """Sub-band centroid frequency and centroid magnitude.

    Band ``s`` covers bins ``edges[s] <= k < edges[s+1]``.  ``powspec`` may be
    a single spectrum or a T x (K+1) matrix.  A band without energy reports
    its centre frequency and the floor magnitude.
    """
    P = np.atleast_2d(np.asarray(powspec, dtype=np.float64))
    edges = np.asarray(edges)
    n_bins = P.shape[1]
    if (
        edges.ndim != 1
        or edges.size < 2
        or edges[0] < 0
        or edges[-1] > n_bins
        or np.any(np.diff(edges) < 1)
        or bin_hz.shape[0] != n_bins
    ):
        raise ValueError("sub-band edges must be strictly ascending bin indices within the spectrum")
    S = edges.size - 1
    scf = np.empty((P.shape[0], S))
    scm = np.empty((P.shape[0], S))
    for s in range(S):
        f = bin_hz[edges[s] : edges[s + 1]]
        band = P[:, edges[s] : edges[s + 1]]
        weighted = band @ f
        energy = band.sum(axis=1)
        f_sum = f.sum()
        centre = 0.5 * (f[0] + f[-1])
        with np.errstate(invalid="ignore", divide="ignore"):
            scf[:, s] = np.where(energy > 0, weighted / energy, centre)
        scm[:, s] = weighted / f_sum if f_sum > 0 else floor
        scm[energy <= 0, s] = floor
    if np.ndim(powspec) == 1:
        return scf[0], scm[0]
    return scf, scm


def subband_cepstra(scm: np.ndarray, floor: float = LOG_FLOOR) -> np.ndarray:
    """SCMC: cosine transform of the log centroid magnitudes, all coefficients kept."""
    return cosine_transform(np.log(np.maximum(scm, floor)), scm.shape[-1])
