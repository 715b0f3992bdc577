"""Frame-level feature extractors."""

from .cepstrum import complex_cepstrum
from .cqcc import CqtParams, cqcc, cqt
from .extract import FeatureConfig, extract, extract_many
from .io import FeatureKind, FeatureMatrix, read_features, write_features
from .lpc import LpcModel, lpc, lpc_to_lpcc
from .postproc import cmvn, deltas
from .spectral import (
    FilterBank,
    filterbank_cepstra,
    make_filterbank,
    power_spectrum,
    spectrogram_features,
    subband_centroids,
)

__all__ = [
    "CqtParams",
    "FeatureConfig",
    "FeatureKind",
    "FeatureMatrix",
    "FilterBank",
    "LpcModel",
    "cmvn",
    "complex_cepstrum",
    "cqcc",
    "cqt",
    "deltas",
    "extract",
    "extract_many",
    "filterbank_cepstra",
    "lpc",
    "lpc_to_lpcc",
    "make_filterbank",
    "power_spectrum",
    "read_features",
    "spectrogram_features",
    "subband_centroids",
    "write_features",
]
