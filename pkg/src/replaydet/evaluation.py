"""False-positive / false-negative rates, EER and DET points.

Higher scores mean more genuine-like.  A replay (spoof) trial is a false
positive when its score is strictly above the threshold; a genuine trial is
a false negative when its score is at or below it.
"""

from __future__ import annotations

from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from ._fileio import atomic_write_text
from .errors import InsufficientDataError


class DetPoint(NamedTuple):
    threshold: float
    p_fp: float
    p_fn: float


def _split(scores, is_genuine) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    is_genuine = np.asarray(is_genuine, dtype=bool)
    if scores.shape != is_genuine.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    gen, spf = scores[is_genuine], scores[~is_genuine]
    if gen.size == 0 or spf.size == 0:
        raise InsufficientDataError("both genuine and spoof trials are required")
    return np.sort(gen), np.sort(spf)


def rates(scores, is_genuine, thresholds) -> tuple[np.ndarray, np.ndarray]:
    gen, spf = _split(scores, is_genuine)
    th = np.asarray(thresholds, dtype=np.float64)
    p_fp = (spf.size - np.searchsorted(spf, th, side="right")) / spf.size
    p_fn = np.searchsorted(gen, th, side="right") / gen.size
    return p_fp, p_fn


def det_curve(scores, is_genuine) -> list[DetPoint]:
    """Rates at -inf, every distinct score and +inf, in increasing threshold order."""
    _split(scores, is_genuine)
    th = np.concatenate([[-np.inf], np.unique(np.asarray(scores, dtype=np.float64)), [np.inf]])
    p_fp, p_fn = rates(scores, is_genuine, th)
    return [DetPoint(float(t), float(a), float(b)) for t, a, b in zip(th, p_fp, p_fn)]


def eer_from_det(points: list[DetPoint]) -> float:
    """Crossing of the two rate step functions, as a percentage."""
    fp = np.array([p.p_fp for p in points])
    fn = np.array([p.p_fn for p in points])
    d = fn - fp
    tie = np.flatnonzero(d == 0)
    if tie.size:
        return 100.0 * fp[tie[0]]
    i = np.flatnonzero((d[:-1] < 0) & (d[1:] > 0))[0]
    t = -d[i] / (d[i + 1] - d[i])
    return 100.0 * (fp[i] + t * (fp[i + 1] - fp[i]))


def eer(scores, is_genuine) -> float:
    return eer_from_det(det_curve(scores, is_genuine))


def format_eer(value: float) -> str:
    return f"{value:.2f}"


def probit(p) -> np.ndarray:
    """Standard normal deviate used for DET axes; rates are clipped away from 0 and 1."""
    return norm.ppf(np.clip(np.asarray(p, dtype=np.float64), 1e-6, 1 - 1e-6))


def write_det(path, points: list[DetPoint]) -> None:
    atomic_write_text(path, "".join(f"{p.threshold:.17g}\t{p.p_fp:.17g}\t{p.p_fn:.17g}\n" for p in points))


def read_det(path) -> list[DetPoint]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            t, a, b = line.split("\t")
            out.append(DetPoint(float(t), float(a), float(b)))
    return out
