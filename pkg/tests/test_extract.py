import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from replaydet.audio import Signal
from replaydet.errors import DegenerateFrameError, FormatError, SignalTooShortError
from replaydet.features.extract import FeatureConfig, extract, extract_many
from replaydet.features.io import (
    FeatureKind,
    FeatureMatrix,
    decode_features,
    encode_features,
    read_features,
    write_features,
)

SR = 16000
CFG = FeatureConfig(cqt_octaves=5)


def _speechy(seconds, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * SR)) / SR
    x = sum(np.sin(2 * np.pi * 150 * h * t) / h for h in range(1, 20))
    x = x * (0.6 + 0.4 * np.sin(2 * np.pi * 3 * t)) + 0.05 * rng.normal(size=t.size)
    return Signal(0.3 * x / np.abs(x).max(), SR)


@pytest.fixture(scope="module")
def all_kinds():
    return extract_many(list(FeatureKind), _speechy(1.5), CFG)


def test_mfcc_one_second_shape():
    fm = extract(FeatureKind.MFCC, _speechy(1.0), CFG)
    assert fm.values.shape == (99, 42)


def test_dimension_table(all_kinds):
    expected = {
        FeatureKind.MFCC: 42,
        FeatureKind.IMFCC: 42,
        FeatureKind.LFCC: 42,
        FeatureKind.RFCC: 42,
        FeatureKind.CQCC: 60,
        FeatureKind.LPCC: 16,
        FeatureKind.SPEC_AMP: 257,
        FeatureKind.SPEC_PHASE: 257,
        FeatureKind.SCFC: 24,
        FeatureKind.SCMC: 24,
        FeatureKind.CCC: 50,
    }
    for kind, fm in all_kinds.items():
        assert fm.kind is kind
        assert fm.dim == expected[kind] == CFG.dimension(kind)
        assert fm.n_frames == 149
        assert np.all(np.isfinite(fm.values))


def test_cmvn_applied(all_kinds):
    for fm in all_kinds.values():
        assert np.all(np.abs(fm.values.mean(axis=0)) < 1e-8)


def test_extract_many_equals_single(all_kinds):
    single = extract("LPCC", _speechy(1.5), CFG)
    np.testing.assert_array_equal(single.values, all_kinds[FeatureKind.LPCC].values)


def test_silent_utterance_is_degenerate():
    with pytest.raises(DegenerateFrameError):
        extract(FeatureKind.MFCC, Signal(np.zeros(SR), SR), CFG)


def test_too_short_utterance():
    with pytest.raises(SignalTooShortError):
        extract(FeatureKind.MFCC, Signal(np.ones(100), SR), CFG)


def test_cqcc_needs_longest_window():
    with pytest.raises(SignalTooShortError):
        extract(FeatureKind.CQCC, _speechy(0.3), CFG)


def test_config_validation():
    with pytest.raises(ValueError):
        FeatureConfig(alpha=1.0)
    with pytest.raises(ValueError):
        FeatureConfig(hop_len_ms=5.0)


def test_kind_parsing():
    assert FeatureKind.parse("mfcc") is FeatureKind.MFCC
    assert FeatureKind.parse("spec_phase") is FeatureKind.SPEC_PHASE
    with pytest.raises(ValueError):
        FeatureKind.parse("plp")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 1.0))
def test_outputs_finite_on_noise(seed, level):
    x = level * np.random.default_rng(seed).uniform(-1, 1, size=SR // 2)
    feats = extract_many(["MFCC", "LFCC", "LPCC", "SCMC", "CCC"], Signal(x, SR), CFG)
    for fm in feats.values():
        assert np.all(np.isfinite(fm.values))


# ---------------------------------------------------------------- FEA1 format


def test_feature_file_layout():
    fm = FeatureMatrix(np.array([[1.0, 2.0], [3.0, 4.5], [-1.0, 0.25]]), FeatureKind.CQCC)
    raw = encode_features(fm)
    assert raw[:4] == b"FEA1"
    assert raw[4] == 4
    assert struct.unpack("<II", raw[5:13]) == (3, 2)
    np.testing.assert_array_equal(np.frombuffer(raw[13:], "<f4"), [1, 2, 3, 4.5, -1, 0.25])
    assert len(raw) == 13 + 6 * 4


def test_kind_codes_follow_table_order():
    names = ["MFCC", "IMFCC", "LFCC", "RFCC", "CQCC", "LPCC", "SPEC_AMP", "SPEC_PHASE", "SCFC", "SCMC", "CCC"]
    assert [k.name for k in sorted(FeatureKind)] == names
    assert [int(k) for k in sorted(FeatureKind)] == list(range(11))


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float32, st.tuples(st.integers(0, 30), st.integers(1, 8)), elements=st.floats(-1e6, 1e6, width=32)),
    st.sampled_from(list(FeatureKind)),
)
def test_feature_round_trip(values, kind):
    back = decode_features(encode_features(FeatureMatrix(values.astype(np.float64), kind)))
    assert back.kind is kind
    np.testing.assert_array_equal(back.values, values)


def test_feature_file_errors(tmp_path):
    fm = FeatureMatrix(np.ones((2, 3)), FeatureKind.MFCC)
    raw = encode_features(fm)
    with pytest.raises(FormatError):
        decode_features(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        decode_features(raw[:-1])
    with pytest.raises(FormatError):
        decode_features(raw[:4] + bytes([42]) + raw[5:])
    with pytest.raises(FormatError):
        decode_features(raw[:7])
    write_features(tmp_path / "x" / "a.fea", fm)
    np.testing.assert_array_equal(read_features(tmp_path / "x" / "a.fea").values, fm.values)
