import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_eer
from replaydet.errors import InsufficientDataError
from replaydet.evaluation import det_curve, eer, format_eer, probit, rates, read_det, write_det


def _labelled(seed, n):
    rng = np.random.default_rng(seed)
    y = rng.random(n) < rng.uniform(0.2, 0.8)
    y[0], y[-1] = True, False
    return rng.normal(size=n) + rng.uniform(0, 3) * y, y


def test_two_point_example():
    assert eer([1.0, 0.0], [True, False]) == 0.0
    assert eer([0.0, 1.0], [True, False]) == 100.0


def test_all_scores_tied():
    assert eer(np.zeros(6), [True, False] * 3) == 50.0


def test_interleaved_example():
    assert eer([0.0, 2.0, 1.0, 3.0], [True, True, False, False]) == 50.0


def test_rates_boundary_convention():
    p_fp, p_fn = rates([0.0, 1.0], [True, False], [0.0, 1.0])
    # spoof at exactly the threshold is rejected, genuine at the threshold is rejected too
    np.testing.assert_array_equal(p_fp, [1.0, 0.0])
    np.testing.assert_array_equal(p_fn, [1.0, 1.0])


def test_matches_brute_force_on_twenty_points():
    s, y = _labelled(91, 20)
    assert eer(s, y) == pytest.approx(brute_force_eer(s, y), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 300))
def test_matches_brute_force(seed, n):
    s, y = _labelled(seed, n)
    assert eer(s, y) == pytest.approx(brute_force_eer(s, y), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 50), st.integers(1, 50))
def test_separable_is_zero(seed, ng, ns):
    rng = np.random.default_rng(seed)
    s = np.concatenate([rng.uniform(1, 2, ng), rng.uniform(-2, 1, ns) - 1e-9])
    assert eer(s, np.arange(ng + ns) < ng) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 200))
def test_swap_labels_and_negate_scores(seed, n):
    s, y = _labelled(seed, n)
    assert eer(-s, ~y) == pytest.approx(eer(s, y), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 200))
def test_monotone_transform_invariance(seed, n):
    s, y = _labelled(seed, n)
    base = eer(s, y)
    assert eer(np.exp(s), y) == pytest.approx(base, abs=1e-9)
    assert eer(3.0 * s + 1.0, y) == pytest.approx(base, abs=1e-9)
    assert eer(np.arctan(s), y) == pytest.approx(base, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 200))
def test_det_curve_is_monotone(seed, n):
    s, y = _labelled(seed, n)
    pts = det_curve(s, y)
    fp = np.array([p.p_fp for p in pts])
    fn = np.array([p.p_fn for p in pts])
    assert np.all(np.diff(fp) <= 0) and np.all(np.diff(fn) >= 0)
    assert (fp[0], fn[0], fp[-1], fn[-1]) == (1.0, 0.0, 0.0, 1.0)
    assert 0.0 <= eer(s, y) <= 100.0


def test_errors():
    with pytest.raises(InsufficientDataError):
        eer([1.0, 2.0], [True, True])
    with pytest.raises(ValueError):
        eer([1.0, np.nan], [True, False])
    with pytest.raises(ValueError):
        eer([1.0], [True, False])


def test_det_file_round_trip(tmp_path):
    s, y = _labelled(92, 30)
    pts = det_curve(s, y)
    write_det(tmp_path / "d.tsv", pts)
    assert read_det(tmp_path / "d.tsv") == pts
    first = (tmp_path / "d.tsv").read_text().splitlines()[0]
    assert first.split("\t") == ["-inf", "1", "0"]


def test_format_eer():
    assert format_eer(12.3456) == "12.35"
    assert format_eer(0.0) == "0.00"


def test_probit():
    assert probit(0.5) == pytest.approx(0.0)
    assert np.isfinite(probit([0.0, 1.0])).all()
    assert probit(0.8413447) == pytest.approx(1.0, abs=1e-6)
