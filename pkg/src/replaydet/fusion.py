"""Linear logistic-regression fusion of per-system scores.

The fused score ``w . s + b`` is a log-odds value; positive means genuine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import log_expit

from ._fileio import atomic_write_text
from .errors import FormatError, InsufficientDataError, ShapeError

GENUINE = "genuine"
SPOOF = "spoof"


@dataclass(frozen=True)
class FusionModel:
    weights: np.ndarray
    bias: float
    systems: tuple[str, ...]

    def __post_init__(self):
        if len(self.systems) < 1 or len(self.systems) != len(self.weights):
            raise ShapeError("fusion needs one weight per system and at least one system")


@dataclass
class ScoreTable:
    """Utterance ids in row order, an m-column score matrix and optional labels."""

    ids: list[str]
    scores: np.ndarray
    systems: tuple[str, ...]
    labels: list[str] | None = None

    def __post_init__(self):
        self.scores = np.atleast_2d(np.asarray(self.scores, dtype=np.float64))
        if self.scores.shape != (len(self.ids), len(self.systems)):
            raise ShapeError(f"score matrix {self.scores.shape} does not match {len(self.ids)} ids x {len(self.systems)} systems")
        if len(set(self.ids)) != len(self.ids):
            raise ShapeError("utterance ids must be unique")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("score table contains non-finite values")

    def is_genuine(self) -> np.ndarray:
        if self.labels is None:
            raise InsufficientDataError("score table carries no labels")
        return np.array([lab == GENUINE for lab in self.labels])

    def select(self, systems) -> "ScoreTable":
        idx = [self.systems.index(s) for s in systems]
        return ScoreTable(list(self.ids), self.scores[:, idx], tuple(systems), self.labels)


@dataclass
class FusionTrace:
    objective: list[float] = field(default_factory=list)


def objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, reg: float, prior: float = 0.5) -> float:
    """Prior-weighted mean log-likelihood per class minus ``reg/2 * |w|^2``."""
    z = X @ theta[:-1] + theta[-1]
    ll_gen = np.mean(log_expit(z[y]))
    ll_spf = np.mean(log_expit(-z[~y]))
    return float(prior * ll_gen + (1.0 - prior) * ll_spf - 0.5 * reg * theta[:-1] @ theta[:-1])


def _grad_hess(theta, X, y, reg, prior):
    z = X @ theta[:-1] + theta[-1]
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    # per-row weights make each class contribute its prior regardless of size
    c = np.where(y, prior / y.sum(), (1.0 - prior) / (~y).sum())
    p = np.exp(log_expit(z))
    resid = y.astype(np.float64) - p
    grad = Xa.T @ (c * resid)
    hess = -(Xa * (c * p * (1.0 - p))[:, None]).T @ Xa
    pen = np.full(theta.size, reg)
    pen[-1] = 0.0
    return grad - pen * theta, hess - np.diag(pen)


def train_fusion(
    dev: ScoreTable,
    reg: float = 1e-2,
    prior: float = 0.5,
    max_iter: int = 200,
    tol: float = 1e-12,
    trace: FusionTrace | None = None,
) -> FusionModel:
    """Maximise the regularised logistic objective from a zero start.

    Each iteration takes a Newton ascent direction (falling back to the
    gradient when the Hessian is not negative definite) and backtracks until
    the objective does not decrease.
    """
    y = dev.is_genuine()
    if y.all() or not y.any():
        raise InsufficientDataError("fusion training needs both genuine and spoof rows")
    X = dev.scores
    theta = np.zeros(X.shape[1] + 1)
    f = objective(theta, X, y, reg, prior)
    if trace is not None:
        trace.objective.append(f)
    for _ in range(max_iter):
        grad, hess = _grad_hess(theta, X, y, reg, prior)
        if np.max(np.abs(grad)) < tol:
            break
        try:
            step = -np.linalg.solve(hess, grad)
            if step @ grad <= 0:
                step = grad
        except np.linalg.LinAlgError:
            step = grad
        t = 1.0
        while True:
            cand = theta + t * step
            fc = objective(cand, X, y, reg, prior)
            if fc >= f + 1e-4 * t * (step @ grad) or t < 1e-12:
                break
            t *= 0.5
        if fc < f:
            break
        improved = fc - f
        theta, f = cand, fc
        if trace is not None:
            trace.objective.append(f)
        if improved < 1e-15:
            break
    return FusionModel(theta[:-1].copy(), float(theta[-1]), tuple(dev.systems))


def fuse(model: FusionModel, scores: np.ndarray) -> np.ndarray | float:
    s = np.asarray(scores, dtype=np.float64)
    if s.shape[-1] != len(model.weights):
        raise ShapeError(f"expected {len(model.weights)} system scores, got {s.shape[-1]}")
    out = s @ model.weights + model.bias
    return float(out) if out.ndim == 0 else out


def fuse_table(model: FusionModel, table: ScoreTable) -> np.ndarray:
    if tuple(table.systems) != tuple(model.systems):
        raise ShapeError(f"score table systems {table.systems} differ from fusion systems {model.systems}")
    return fuse(model, table.scores)


def save_fusion(path, model: FusionModel) -> None:
    lines = [
        str(len(model.systems)),
        " ".join(model.systems),
        " ".join(f"{w:.17g}" for w in model.weights),
        f"{model.bias:.17g}",
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_fusion(path) -> FusionModel:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 4:
        raise FormatError(f"{path}: fusion model needs four lines")
    try:
        m = int(lines[0])
        systems = tuple(lines[1].split())
        weights = np.array([float(v) for v in lines[2].split()])
        bias = float(lines[3])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if len(systems) != m or weights.size != m:
        raise FormatError(f"{path}: header says {m} systems")
    return FusionModel(weights, bias, systems)


def write_scores(path, ids, scores) -> None:
    """One ``id<TAB>score`` line per utterance."""
    atomic_write_text(path, "".join(f"{i}\t{float(s):.17g}\n" for i, s in zip(ids, scores)))


def read_scores(path) -> dict[str, float]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{n}: expected 'id<TAB>score'")
        if parts[0] in out:
            raise FormatError(f"{path}:{n}: duplicate id {parts[0]!r}")
        out[parts[0]] = float(parts[1])
    return out


def build_table(per_system: dict[str, dict[str, float]], labels: dict[str, str] | None = None) -> ScoreTable:
    """Align per-system score maps on their common ids; a missing score is an error."""
    systems = tuple(per_system)
    if not systems:
        raise ShapeError("no systems to fuse")
    ids = sorted(per_system[systems[0]])
    for name in systems[1:]:
        if set(per_system[name]) != set(ids):
            missing = sorted(set(ids) ^ set(per_system[name]))[:5]
            raise ShapeError(f"system {name} scores a different utterance set (e.g. {missing})")
    matrix = np.array([[per_system[s][i] for s in systems] for i in ids])
    lab = [labels[i] for i in ids] if labels is not None else None
    return ScoreTable(ids, matrix, systems, lab)
