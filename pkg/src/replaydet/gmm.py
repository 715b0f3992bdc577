"""Diagonal-covariance GMM-UBM: binary-splitting EM, MAP mean adaptation, LLR scoring.

Model files (little-endian) hold ``b"GMM1"``, a u8 role code, u32 C, u32 D,
then C weights, C*D means and C*D variances as float64, row-major.
"""

from __future__ import annotations

import enum
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from ._fileio import atomic_write_bytes
from .errors import FormatError, InsufficientDataError, ShapeError

log = logging.getLogger(__name__)

MAGIC = b"GMM1"
_HEADER = struct.Struct("<4sBII")
_LOG_2PI = np.log(2.0 * np.pi)
_BLOCK_ELEMENTS = 1 << 21


class Role(enum.IntEnum):
    UBM = 0
    GENUINE = 1
    SPOOF = 2


@dataclass(frozen=True)
class Gmm:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    role: Role = Role.UBM

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def with_role(self, role: Role) -> "Gmm":
        return Gmm(self.weights, self.means, self.variances, role)


@dataclass(frozen=True)
class TrainConfig:
    components: int = 64
    em_iterations: int = 30
    split_iterations: int = 10
    variance_floor_factor: float = 1e-3
    split_perturbation: float = 0.2
    relevance_factor: float = 16.0

    def __post_init__(self):
        c = self.components
        if c < 1 or c & (c - 1):
            raise ValueError(f"components must be a power of two, got {c}")
        if self.em_iterations < 1 or self.split_iterations < 0:
            raise ValueError("EM iteration counts must be positive")


@dataclass
class TrainHistory:
    """Average log-likelihood per EM iteration, one list per split stage."""

    stages: list[list[float]] = field(default_factory=list)


def component_log_densities(g: Gmm, x: np.ndarray) -> np.ndarray:
    """N x C matrix of ``log w_c + log N(x_t; mu_c, diag(var_c))``."""
    if x.ndim != 2 or x.shape[1] != g.dim:
        raise ShapeError(f"frames have dimension {x.shape[-1]}, model expects {g.dim}")
    prec = 1.0 / g.variances
    const = np.log(g.weights) - 0.5 * (g.dim * _LOG_2PI + np.sum(np.log(g.variances), axis=1))
    out = np.empty((x.shape[0], g.n_components))
    chunk = max(1, _BLOCK_ELEMENTS // (g.n_components * g.dim))
    for start in range(0, x.shape[0], chunk):
        xs = x[start : start + chunk]
        diff = xs[:, None, :] - g.means[None, :, :]
        out[start : start + chunk] = const - 0.5 * np.einsum("ncd,cd->nc", diff * diff, prec)
    return out


def frame_log_likelihoods(g: Gmm, x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return logsumexp(component_log_densities(g, np.asarray(x, dtype=np.float64)), axis=1)


def log_likelihood(g: Gmm, feat: np.ndarray) -> float:
    """Average per-frame log-likelihood."""
    return float(np.mean(frame_log_likelihoods(g, feat)))


def llr_score(g_gen: Gmm, g_spf: Gmm, feat: np.ndarray) -> float:
    """Positive scores favour the genuine model."""
    if g_gen.means.shape != g_spf.means.shape:
        raise ShapeError("genuine and spoof models differ in shape")
    return log_likelihood(g_gen, feat) - log_likelihood(g_spf, feat)


def posteriors(g: Gmm, x: np.ndarray) -> tuple[np.ndarray, float]:
    with np.errstate(divide="ignore"):
        lp = component_log_densities(g, x)
        ll = logsumexp(lp, axis=1, keepdims=True)
    return np.exp(lp - ll), float(np.mean(ll))


def em_step(g: Gmm, x: np.ndarray, var_floor: np.ndarray) -> tuple[Gmm, float]:
    """One EM iteration; returns the updated model and the average log-likelihood of ``g``."""
    gamma, avg_ll = posteriors(g, x)
    n_c = gamma.sum(axis=0)
    alive = n_c > 1e-10
    weights = n_c / x.shape[0]
    means = g.means.copy()
    variances = g.variances.copy()
    first = gamma.T @ x
    second = gamma.T @ (x * x)
    means[alive] = first[alive] / n_c[alive, None]
    variances[alive] = second[alive] / n_c[alive, None] - means[alive] ** 2
    variances = np.maximum(variances, var_floor)
    weights = weights / weights.sum()
    return Gmm(weights, means, variances, g.role), avg_ll


def run_em(g: Gmm, x: np.ndarray, n_iter: int, var_floor: np.ndarray) -> tuple[Gmm, list[float]]:
    """``n_iter`` EM steps; the history includes the likelihood after the last step."""
    history = []
    for _ in range(n_iter):
        g, ll = em_step(g, x, var_floor)
        history.append(ll)
    history.append(log_likelihood(g, x))
    return g, history


def split(g: Gmm, perturbation: float) -> Gmm:
    offset = perturbation * np.sqrt(g.variances)
    means = np.concatenate([g.means - offset, g.means + offset])
    return Gmm(
        np.concatenate([g.weights, g.weights]) / 2.0,
        means,
        np.concatenate([g.variances, g.variances]),
        g.role,
    )


def train_ubm(data: np.ndarray, cfg: TrainConfig = TrainConfig(), history: TrainHistory | None = None) -> Gmm:
    """Grow a UBM from one Gaussian by repeated binary splits.

    Every split stage is refined with ``cfg.split_iterations`` EM steps; the
    stage at the target size runs ``cfg.em_iterations`` instead.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ShapeError("training data must be an N x D matrix")
    N, D = x.shape
    if N <= cfg.components:
        raise InsufficientDataError(f"{N} frames cannot support {cfg.components} components")
    mean = x.mean(axis=0)
    var = np.mean((x - mean) ** 2, axis=0)
    var_floor = np.maximum(cfg.variance_floor_factor * var, np.finfo(float).tiny)
    g = Gmm(np.ones(1), mean[None, :], np.maximum(var, var_floor)[None, :], Role.UBM)
    while g.n_components < cfg.components:
        g = split(g, cfg.split_perturbation)
        n_iter = cfg.em_iterations if g.n_components == cfg.components else cfg.split_iterations
        g, lls = run_em(g, x, n_iter, var_floor)
        log.debug("UBM stage C=%d: avg log-likelihood %.6f -> %.6f", g.n_components, lls[0], lls[-1])
        if history is not None:
            history.stages.append(lls)
    return g


def map_adapt(ubm: Gmm, class_data: np.ndarray, relevance: float = 16.0, role: Role = Role.GENUINE) -> Gmm:
    """Mean-only MAP adaptation; weights and variances are copied from the UBM."""
    x = np.asarray(class_data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InsufficientDataError("MAP adaptation needs at least one frame")
    if x.shape[1] != ubm.dim:
        raise ShapeError(f"frames have dimension {x.shape[1]}, UBM expects {ubm.dim}")
    gamma, _ = posteriors(ubm, x)
    n_c = gamma.sum(axis=0)
    first = gamma.T @ x
    means = ubm.means.copy()
    seen = n_c > 0
    expected = first[seen] / n_c[seen, None]
    alpha = (n_c[seen] / (n_c[seen] + relevance))[:, None]
    means[seen] = alpha * expected + (1.0 - alpha) * ubm.means[seen]
    return Gmm(ubm.weights.copy(), means, ubm.variances.copy(), role)


def encode_gmm(g: Gmm) -> bytes:
    C, D = g.means.shape
    body = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in (g.weights, g.means, g.variances)
    )
    return _HEADER.pack(MAGIC, int(g.role), C, D) + body


def decode_gmm(data: bytes) -> Gmm:
    if len(data) < _HEADER.size:
        raise FormatError("model file truncated before header end")
    magic, role, C, D = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad model-file magic {magic!r}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != C + 2 * C * D:
        raise FormatError(f"model payload has {body.size} values, header implies {C + 2 * C * D}")
    try:
        role = Role(role)
    except ValueError:
        raise FormatError(f"unknown model role code {role}") from None
    w = body[:C].copy()
    mu = body[C : C + C * D].reshape(C, D).copy()
    var = body[C + C * D :].reshape(C, D).copy()
    return Gmm(w, mu, var, role)


def save_gmm(path, g: Gmm) -> None:
    atomic_write_bytes(path, encode_gmm(g))


def load_gmm(path) -> Gmm:
    return decode_gmm(Path(path).read_bytes())
