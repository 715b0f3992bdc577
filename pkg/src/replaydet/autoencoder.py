"""Single-hidden-layer autoencoder (n -> code -> n) trained by mini-batch gradient descent.

Model files (little-endian) hold ``b"AEN1"``, u32 n, u32 code_dim, then as
float64: encoder weights (code_dim x n), encoder biases, decoder weights
(n x code_dim), decoder biases, scaler minima and scaler maxima.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from ._fileio import atomic_write_bytes
from .errors import ConfigError, FormatError, InsufficientDataError, ShapeError
from .features.io import FeatureMatrix

log = logging.getLogger(__name__)

MAGIC = b"AEN1"
_HEADER = struct.Struct("<4sII")
CODE_DIM = 100
MAX_EPOCHS = 200


@dataclass(frozen=True)
class MinMaxScaler:
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def span(self) -> np.ndarray:
        return self.maxs - self.mins

    def transform(self, x: np.ndarray) -> np.ndarray:
        span = self.span
        live = span > 0
        out = np.zeros(np.shape(x), dtype=np.float64)
        out[..., live] = (x[..., live] - self.mins[live]) / span[live]
        return out

    def inverse(self, s: np.ndarray) -> np.ndarray:
        return s * self.span + self.mins


def fit_scaler(data: np.ndarray) -> MinMaxScaler:
    """Per-dimension min-max scaling to [0, 1]; constant dimensions map to 0."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InsufficientDataError("scaler needs at least two rows")
    return MinMaxScaler(x.min(axis=0), x.max(axis=0))


@dataclass
class Params:
    w_enc: np.ndarray
    b_enc: np.ndarray
    w_dec: np.ndarray
    b_dec: np.ndarray

    def copy(self) -> "Params":
        return Params(self.w_enc.copy(), self.b_enc.copy(), self.w_dec.copy(), self.b_dec.copy())


@dataclass(frozen=True)
class Autoencoder:
    params: Params
    scaler: MinMaxScaler
    mse_history: tuple = ()

    @property
    def input_dim(self) -> int:
        return self.params.w_enc.shape[1]

    @property
    def code_dim(self) -> int:
        return self.params.w_enc.shape[0]


@dataclass
class TrainState:
    learning_rate: float = 0.01
    batch_size: int = 64
    epochs: int = MAX_EPOCHS
    seed: int = 0
    tolerance: float = 1e-8
    mse_history: list = field(default_factory=list)

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.batch_size >= 1 and 1 <= self.epochs <= MAX_EPOCHS):
            raise ConfigError(
                f"invalid autoencoder hyperparameters lr={self.learning_rate} "
                f"batch={self.batch_size} epochs={self.epochs} (epochs capped at {MAX_EPOCHS})"
            )


def init_params(n: int, code_dim: int, rng: np.random.Generator) -> Params:
    limit = np.sqrt(6.0 / (n + code_dim))
    return Params(
        rng.uniform(-limit, limit, size=(code_dim, n)),
        np.zeros(code_dim),
        rng.uniform(-limit, limit, size=(n, code_dim)),
        np.zeros(n),
    )


def forward(p: Params, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    code = expit(x @ p.w_enc.T + p.b_enc)
    return code, code @ p.w_dec.T + p.b_dec


def mse(p: Params, x: np.ndarray) -> float:
    _, y = forward(p, x)
    return float(np.mean((y - x) ** 2))


def loss_and_grads(p: Params, x: np.ndarray) -> tuple[float, Params]:
    """Mean squared reconstruction error over all entries and its gradient."""
    code, y = forward(p, x)
    err = y - x
    loss = float(np.mean(err**2))
    d_y = 2.0 * err / err.size
    d_code = d_y @ p.w_dec
    d_pre = d_code * code * (1.0 - code)
    return loss, Params(d_pre.T @ x, d_pre.sum(axis=0), d_y.T @ code, d_y.sum(axis=0))


def train_autoencoder(
    scaled: np.ndarray,
    scaler: MinMaxScaler,
    state: TrainState | None = None,
    code_dim: int = CODE_DIM,
) -> Autoencoder:
    """Fit on min-max scaled rows until the epoch cap or a loss plateau.

    Training stops once the full-data MSE improves by less than
    ``state.tolerance`` between consecutive epochs.
    """
    state = state or TrainState()
    x = np.asarray(scaled, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != scaler.mins.shape[0]:
        raise ShapeError("training data and scaler disagree on dimension")
    N = x.shape[0]
    if N < state.batch_size:
        raise InsufficientDataError(f"{N} rows are fewer than one batch of {state.batch_size}")
    rng = np.random.default_rng(state.seed)
    p = init_params(x.shape[1], code_dim, rng)
    lr = state.learning_rate
    prev = np.inf
    for epoch in range(state.epochs):
        order = rng.permutation(N)
        for start in range(0, N, state.batch_size):
            batch = x[order[start : start + state.batch_size]]
            _, g = loss_and_grads(p, batch)
            p.w_enc -= lr * g.w_enc
            p.b_enc -= lr * g.b_enc
            p.w_dec -= lr * g.w_dec
            p.b_dec -= lr * g.b_dec
        cur = mse(p, x)
        state.mse_history.append(cur)
        if prev - cur < state.tolerance:
            log.debug("autoencoder plateau at epoch %d (mse %.3g)", epoch + 1, cur)
            break
        prev = cur
    return Autoencoder(p, scaler, tuple(state.mse_history))


def fit_autoencoder(data: np.ndarray, state: TrainState | None = None, code_dim: int = CODE_DIM) -> Autoencoder:
    scaler = fit_scaler(data)
    return train_autoencoder(scaler.transform(np.asarray(data, dtype=np.float64)), scaler, state, code_dim)


def _check_dim(ae: Autoencoder, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != ae.input_dim:
        raise ShapeError(f"frame dimension {x.shape[-1]} does not match autoencoder input {ae.input_dim}")
    return x


def encode(ae: Autoencoder, frames: np.ndarray) -> np.ndarray:
    """Code-layer activations for one frame or a T x n matrix."""
    x = _check_dim(ae, frames)
    code, _ = forward(ae.params, ae.scaler.transform(x))
    return code


def reconstruct(ae: Autoencoder, frames: np.ndarray) -> np.ndarray:
    """Decoder output mapped back to feature units."""
    x = _check_dim(ae, frames)
    _, y = forward(ae.params, ae.scaler.transform(x))
    return ae.scaler.inverse(y)


def augment(ae_class: Autoencoder, utterances: list[FeatureMatrix]) -> list[FeatureMatrix]:
    """One reconstruction per utterance of the class the autoencoder was trained on."""
    out = []
    for fm in utterances:
        if fm.dim != ae_class.input_dim:
            raise ShapeError(f"{fm.kind.name} matrix of dimension {fm.dim} does not fit autoencoder input {ae_class.input_dim}")
        out.append(FeatureMatrix(reconstruct(ae_class, fm.values), fm.kind))
    return out


def encode_autoencoder(ae: Autoencoder) -> bytes:
    p = ae.params
    arrays = (p.w_enc, p.b_enc, p.w_dec, p.b_dec, ae.scaler.mins, ae.scaler.maxs)
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    return _HEADER.pack(MAGIC, ae.input_dim, ae.code_dim) + body


def decode_autoencoder(data: bytes) -> Autoencoder:
    if len(data) < _HEADER.size:
        raise FormatError("autoencoder file truncated before header end")
    magic, n, k = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad autoencoder-file magic {magic!r}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    sizes = [k * n, k, n * k, n, n, n]
    if body.size != sum(sizes):
        raise FormatError(f"autoencoder payload has {body.size} values, header implies {sum(sizes)}")
    parts = np.split(body.copy(), np.cumsum(sizes)[:-1])
    params = Params(parts[0].reshape(k, n), parts[1], parts[2].reshape(n, k), parts[3])
    return Autoencoder(params, MinMaxScaler(parts[4], parts[5]))


def save_autoencoder(path, ae: Autoencoder) -> None:
    atomic_write_bytes(path, encode_autoencoder(ae))


def load_autoencoder(path) -> Autoencoder:
    return decode_autoencoder(Path(path).read_bytes())
