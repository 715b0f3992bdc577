import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from replaydet.errors import InsufficientDataError
from replaydet.features.postproc import cmvn, deltas, with_deltas

matrices = arrays(
    np.float64,
    st.tuples(st.integers(2, 40), st.integers(1, 6)),
    elements=st.floats(-1e3, 1e3, allow_nan=False),
)


def test_deltas_of_constant_rows():
    assert np.all(deltas(np.full((10, 3), 4.2)) == 0)


def test_deltas_of_ramp_interior():
    beta = 0.37
    feat = beta * np.arange(20.0)[:, None] * np.ones((1, 2))
    d = deltas(feat, 2)
    np.testing.assert_allclose(d[2:-2], beta, rtol=0, atol=1e-14)


def test_deltas_single_frame():
    assert np.all(deltas(np.array([[1.0, 2.0, 3.0]])) == 0)


def test_with_deltas_layout():
    x = np.random.default_rng(41).normal(size=(12, 14))
    out = with_deltas(x)
    assert out.shape == (12, 42)
    np.testing.assert_array_equal(out[:, :14], x)
    np.testing.assert_allclose(out[:, 28:], deltas(deltas(x)))


@settings(max_examples=60, deadline=None)
@given(matrices, st.integers(1, 3))
def test_deltas_shape_and_linearity(x, w):
    d = deltas(x, w)
    assert d.shape == x.shape
    np.testing.assert_allclose(deltas(2 * x, w), 2 * d, rtol=1e-12, atol=1e-9)


def test_cmvn_column():
    out = cmvn(np.array([[1.0], [2.0], [3.0]]))
    np.testing.assert_allclose(out[:, 0], [-1.2247448714, 0, 1.2247448714], atol=1e-9)


def test_cmvn_constant_column():
    x = np.column_stack([np.full(5, 0.1), np.arange(5.0)])
    out = cmvn(x)
    assert np.all(out[:, 0] == 0)


def test_cmvn_needs_two_frames():
    with pytest.raises(InsufficientDataError):
        cmvn(np.ones((1, 3)))


@settings(max_examples=80, deadline=None)
@given(matrices)
def test_cmvn_statistics_and_idempotence(x):
    out = cmvn(x)
    live = np.std(out, axis=0) > 0
    assert np.all(np.abs(out.mean(axis=0)) < 1e-10)
    np.testing.assert_allclose(out[:, live].var(axis=0), 1.0, atol=1e-10)
    assert np.all(out[:, ~live] == 0)
    np.testing.assert_allclose(cmvn(out), out, atol=1e-12)
