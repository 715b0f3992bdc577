"""Dynamic coefficients and per-utterance normalisation."""

import numpy as np

from ..errors import InsufficientDataError


def deltas(feat: np.ndarray, window: int = 2) -> np.ndarray:
    """Regression deltas over +-``window`` frames with edge frames replicated."""
    feat = np.asarray(feat, dtype=np.float64)
    T = feat.shape[0]
    padded = np.concatenate([np.repeat(feat[:1], window, axis=0), feat, np.repeat(feat[-1:], window, axis=0)])
    denom = 2.0 * sum(tau * tau for tau in range(1, window + 1))
    out = np.zeros_like(feat)
    for tau in range(1, window + 1):
        out += tau * (padded[window + tau : window + tau + T] - padded[window - tau : window - tau + T])
    return out / denom


def with_deltas(static: np.ndarray, window: int = 2) -> np.ndarray:
    d = deltas(static, window)
    return np.hstack([static, d, deltas(d, window)])


def cmvn(feat: np.ndarray) -> np.ndarray:
    """Zero mean, unit population variance per column; constant columns become 0."""
    feat = np.asarray(feat, dtype=np.float64)
    if feat.shape[0] < 2:
        raise InsufficientDataError("mean/variance normalisation needs at least two frames")
    centred = feat - feat.mean(axis=0)
    std = np.sqrt(np.mean(centred**2, axis=0))
    # relative threshold: round-off leaves a tiny spread on constant columns
    scale = np.max(np.abs(feat), axis=0)
    flat = std <= 1e-12 * np.maximum(scale, 1e-300)
    out = np.zeros_like(centred)
    out[:, ~flat] = centred[:, ~flat] / std[~flat]
    return out
