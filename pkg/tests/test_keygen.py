import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from handkey.errors import EmptyFeature, InsufficientBits, ParseError
from handkey.feature import FeatureSeries
from handkey.keygen import (
    INVALID,
    ONE,
    ZERO,
    PositionVector,
    QuantizedBits,
    SymmetricKey,
    assemble_key,
    bit_rate,
    position_vector,
    quantize,
    reconcile,
)


def _fs(x, rate=200.0):
    return FeatureSeries(np.asarray(x, dtype=float), rate)


def test_constant_segment_all_invalid():
    for c in (0.0, 0.1, -3.7, 1e9):
        q = quantize(_fs([c] * 10), 0.75)
        assert np.all(q.states == INVALID)


def test_step_segment():
    q = quantize(_fs([0] * 5 + [10] * 5), 0.75)
    assert q.states.tolist() == [ZERO] * 5 + [ONE] * 5


def test_threshold_equality_is_invalid():
    # mu=0, sigma=1 with K=1: +-1 sit exactly on the thresholds.
    q = quantize(_fs([1, -1, 1, -1]), 1.0, segment_len=4)
    assert np.all(q.states == INVALID)


def test_partial_segment_rules():
    q = quantize(_fs(list(range(10)) + [5.0]), 0.5)
    assert q.states[-1] == INVALID  # lone trailing sample
    q = quantize(_fs(list(range(10)) + [0.0, 4.0]), 0.5)
    assert q.states[-2:].tolist() == [ZERO, ONE]


def test_quantize_preconditions():
    with pytest.raises(EmptyFeature):
        quantize(_fs([]))
    with pytest.raises(ValueError):
        quantize(_fs([1.0, 2.0]), K=0)
    with pytest.raises(ValueError):
        quantize(_fs([1.0, 2.0]), segment_len=1)


def test_quantize_metadata():
    q = quantize(_fs(np.arange(400.0)), 0.6, 10)
    assert len(q) == 400 and q.K == 0.6 and q.segment_len == 10
    assert q.duration == pytest.approx(2.0)


def test_quantize_matches_oracle_random(rng):
    x = rng.normal(size=1003)
    for K in (0.1, 0.5, 0.75, 1.0):
        assert quantize(_fs(x), K).states.tolist() == oracles.quantize(x.tolist(), K)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=45),
    st.sampled_from([0.1, 0.3, 0.5, 0.75, 1.0]),
    st.integers(2, 12),
)
def test_quantize_matches_oracle_property(values, K, seg):
    # Sample values from a small grid so ties and constant segments are common.
    values = [round(v / 2.5e5) * 0.5 for v in values]
    assert quantize(_fs(values), K, seg).states.tolist() == oracles.quantize(values, K, seg)


def test_valid_count_monotone_in_K(rng):
    f = _fs(rng.normal(size=400))
    counts = [quantize(f, K).valid_count for K in np.arange(0.1, 2.01, 0.1)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_scale_and_shift_invariance(rng):
    x = rng.normal(size=400)
    base = quantize(_fs(x), 0.75).states
    for c in (0.5, 2.0, 1024.0):  # powers of two scale exactly
        np.testing.assert_array_equal(quantize(_fs(x * c), 0.75).states, base)
    for c in (0.37, 13.1):
        np.testing.assert_array_equal(quantize(_fs(x * c), 0.75).states, base)
    for s in (-5.0, 0.25, 100.0):
        np.testing.assert_array_equal(quantize(_fs(x + s), 0.75).states, base)


def test_string_notation():
    q = QuantizedBits.from_string("1x0xx11x00")
    assert str(q) == "1x0xx11x00"
    assert q.valid_count == 6


def test_position_vector_examples():
    assert position_vector(QuantizedBits.from_string("1x0xx11x00")).positions.tolist() == [1, 3, 6, 7, 9, 10]
    assert len(position_vector(QuantizedBits.from_string("xxxx"))) == 0
    assert position_vector(QuantizedBits.from_string("10101")).positions.tolist() == [1, 2, 3, 4, 5]


def test_position_vector_validation():
    with pytest.raises(ValueError):
        PositionVector([0, 1])
    with pytest.raises(ValueError):
        PositionVector([3, 3])


def test_position_vector_wire():
    pv = PositionVector([1, 3, 70000])
    data = pv.to_bytes()
    assert data == bytes([3, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0]) + (70000).to_bytes(4, "little")
    assert PositionVector.from_bytes(data) == pv
    with pytest.raises(ParseError):
        PositionVector.from_bytes(data[:-1])


def test_reconcile_worked_example():
    alice = QuantizedBits.from_string("1x0xx11x00")
    bob_pv = PositionVector([1, 3, 4, 6, 7, 10])
    assert reconcile(alice, position_vector(alice), bob_pv).tolist() == [1, 0, 1, 1, 0]


def test_reconcile_edge_cases():
    q = QuantizedBits.from_string("1x0xx11x00")
    pv = position_vector(q)
    assert reconcile(q, pv, PositionVector([])).size == 0
    assert reconcile(q, pv, pv).tolist() == [1, 0, 1, 1, 0, 0]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from("10x"), min_size=1, max_size=60), st.data())
def test_reconcile_symmetry(a_text, data):
    b_text = data.draw(st.lists(st.sampled_from("10x"), min_size=len(a_text), max_size=len(a_text)))
    a = QuantizedBits.from_string("".join(a_text))
    b = QuantizedBits.from_string("".join(b_text))
    pa, pb = position_vector(a), position_vector(b)
    ra, rb = reconcile(a, pa, pb), reconcile(b, pb, pa)
    assert len(ra) == len(rb)
    if a_text == b_text:
        assert ra.tolist() == rb.tolist()


def test_assemble_key_boundaries():
    bits = np.arange(300) % 2
    with pytest.raises(InsufficientBits):
        assemble_key(bits[:139])
    k = assemble_key(bits[:140])
    assert k.bits.tolist() == bits[:128].tolist() and k.source_valid_count == 140
    k = assemble_key(bits[:260])
    assert k.bits.tolist() == bits[:128].tolist() and k.source_valid_count == 260


def test_symmetric_key_bytes():
    k = SymmetricKey(np.r_[np.ones(8), np.zeros(120)], 140)
    assert k.to_bytes() == b"\xff" + bytes(15)
    assert k.hex() == "ff" + "00" * 15
    with pytest.raises(ValueError):
        SymmetricKey(np.ones(127), 140)


def test_bit_rate():
    q = QuantizedBits(np.ones(130, dtype=np.int8), duration=1.3)
    assert bit_rate(q) == pytest.approx(100.0)
    assert bit_rate(QuantizedBits.from_string("xxxx", duration=1.0)) == 0
