"""Linear prediction by the autocorrelation method and its cepstral recursion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateFrameError


@dataclass(frozen=True)
class LpcModel:
    """All-pole model ``A(z) = 1 + sum_k a_k z^-k``.

    The predictor is ``x_hat[t] = -sum_k a_k x[t-k]`` and ``error_power`` is
    the final Levinson-Durbin residual energy.
    """

    coeffs: np.ndarray
    error_power: float

    @property
    def order(self) -> int:
        return len(self.coeffs)


def autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = len(x)
    return np.array([np.dot(x[: n - k], x[k:]) for k in range(max_lag + 1)])


def levinson_durbin(r: np.ndarray, order: int) -> LpcModel:
    if r[0] <= 0:
        raise DegenerateFrameError("zero-energy frame has no linear prediction model")
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1 : 0 : -1])
        k = -acc / err
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][:i]
        err *= 1.0 - k * k
        if err <= 0:
            raise DegenerateFrameError(f"prediction error vanished at order {i}")
    return LpcModel(a[1:].copy(), float(err))


def lpc(frame: np.ndarray, order: int = 16) -> LpcModel:
    frame = np.asarray(frame, dtype=np.float64)
    if order < 1:
        raise ValueError("LPC order must be at least 1")
    if len(frame) <= order:
        raise ValueError(f"frame of {len(frame)} samples cannot support order {order}")
    if not np.any(frame):
        raise DegenerateFrameError("all-zero frame")
    return levinson_durbin(autocorrelation(frame, order), order)


def lpc_to_lpcc(model: LpcModel, n: int = 16) -> np.ndarray:
    """Cepstrum of the all-pole model ``E / |A|^2``, coefficients 0..n-1.

    ``c_0 = ln(E)``; for ``1 <= m <= p`` the direct term ``-a_m`` is added to
    the recursive sum, and beyond the model order only the recursive sum
    ``-sum_k (m-k)/m a_k c_{m-k}`` remains.
    """
    if model.error_power <= 0:
        raise DegenerateFrameError("error power must be positive to take its logarithm")
    a = np.concatenate([[0.0], model.coeffs])
    p = model.order
    c = np.zeros(n)
    c[0] = np.log(model.error_power)
    for m in range(1, n):
        acc = 0.0
        for k in range(1, min(m - 1, p) + 1):
            acc -= (m - k) * a[k] * c[m - k]
        c[m] = acc / m
        if m <= p:
            c[m] -= a[m]
    return c
