import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quditqkd.protocols import (
    INCONCLUSIVE,
    MeasRecord,
    PrepRecord,
    ProtocolKind,
    ProtocolSpec,
    SiftResult,
    estimate_qber,
    measure,
    measure_batch,
    prepare,
    prepare_batch,
    prepared_state,
    sift,
    sift_rate_note,
    sift_rate_theory,
)
from quditqkd.quditmath import StateVector

S2 = math.sqrt(2)


def _pair_uniform(spec, pair):
    idx = [tuple(p) for p in spec.pairs.tolist()].index(pair)
    return (idx + 0.5) / len(spec.pairs)


def _chau15_outcome_distribution(state, pair, n=4000):
    """Exact-ish outcome distribution by sweeping the outcome uniform over a fine grid."""
    spec = ProtocolSpec(ProtocolKind.CHAU15, 4)
    u_out = (np.arange(n) + 0.5) / n
    u_choice = np.full(n, _pair_uniform(spec, pair))
    states = np.repeat(state[None, :], n, axis=0)
    out = measure_batch(spec, states, u_choice, u_out).outcomes
    return {k: float(np.mean(out == k)) for k in (0, 1, INCONCLUSIVE)}


def _projector_oracle(state, pair):
    # build the two rank-one projectors explicitly
    d = len(state)
    i, j = pair
    plus = np.zeros(d); plus[i] = plus[j] = 1 / S2
    minus = np.zeros(d); minus[i] = 1 / S2; minus[j] = -1 / S2
    p0 = abs(np.vdot(plus, state)) ** 2
    p1 = abs(np.vdot(minus, state)) ** 2
    return {0: p0, 1: p1, INCONCLUSIVE: 1 - p0 - p1}


@pytest.mark.parametrize(
    "pair,expect",
    [((1, 3), {0: 1.0, 1: 0.0, INCONCLUSIVE: 0.0}),
     ((0, 2), {0: 0.0, 1: 0.0, INCONCLUSIVE: 1.0}),
     ((1, 2), {0: 0.25, 1: 0.25, INCONCLUSIVE: 0.5})],
)
def test_chau15_subspace_measurement(pair, expect):
    state = np.array([0, 1, 0, 1], dtype=complex) / S2
    oracle = _projector_oracle(state, pair)
    got = _chau15_outcome_distribution(state, pair)
    for k in expect:
        assert oracle[k] == pytest.approx(expect[k], abs=1e-12)
        assert got[k] == pytest.approx(expect[k], abs=1e-3)


def test_prepared_states_match_examples():
    bb84 = ProtocolSpec(ProtocolKind.BB84, 2)
    plus = prepared_state(bb84, PrepRecord(0, basis_idx=1))
    assert np.allclose(plus.amps, [1 / S2, 1 / S2])
    chau = ProtocolSpec(ProtocolKind.CHAU15, 4)
    s = prepared_state(chau, PrepRecord(1, pair=(1, 3)))
    assert np.allclose(s.amps, [0, 1 / S2, 0, -1 / S2])


def test_prepare_batch_agrees_with_prepared_state(rng):
    for spec in (ProtocolSpec("BB84", 4), ProtocolSpec("MUB", 3), ProtocolSpec("CHAU15", 8), ProtocolSpec("CHAU02", 2)):
        batch, states = prepare_batch(spec, rng.random(50), rng.random(50))
        for k, rec in enumerate(batch.records()):
            assert np.allclose(prepared_state(spec, rec).amps, states[k])


def test_six_state_preparation_frequencies(rng):
    spec = ProtocolSpec(ProtocolKind.MUB, 2, 3)
    n = 100_000
    batch, _ = prepare_batch(spec, rng.random(n), rng.random(n))
    labels = batch.choice * 2 + batch.symbols
    freq = np.bincount(labels, minlength=6) / n
    assert np.all(np.abs(freq - 1 / 6) < 0.01)


def test_single_pulse_api_roundtrip(rng):
    spec = ProtocolSpec(ProtocolKind.BB84, 2)
    for _ in range(200):
        prep, state = prepare(spec, rng)
        meas = measure(spec, state, rng)
        if meas.basis_idx == prep.basis_idx:
            assert meas.outcome == prep.symbol


def test_measure_dimension_mismatch(rng):
    spec = ProtocolSpec(ProtocolKind.BB84, 4)
    with pytest.raises(ValueError, match="dimension"):
        measure(spec, StateVector.basis_state(2, 0), rng)


def _noiseless(spec, n, rng):
    preps, states = prepare_batch(spec, rng.random(n), rng.random(n))
    meas = measure_batch(spec, states, rng.random(n), rng.random(n))
    return preps, meas


@pytest.mark.parametrize(
    "spec,rate,tol",
    [(ProtocolSpec("BB84", 2), 0.5, 0.005),
     (ProtocolSpec("MUB", 2, 3), 1 / 3, 0.005),
     (ProtocolSpec("MUB", 4, 5), 1 / 5, 0.005),
     (ProtocolSpec("CHAU15", 4), 1 / 6, 0.005),
     (ProtocolSpec("CHAU15", 8), 1 / 28, 0.002),
     (ProtocolSpec("BB84", 2, basis_bias=(0.99, 0.01)), 0.9802, 0.005)],
)
def test_noiseless_sift_rates(spec, rate, tol, rng):
    preps, meas = _noiseless(spec, 100_000, rng)
    s = sift(preps, meas)
    assert s.sift_rate == pytest.approx(rate, abs=tol)
    assert sift_rate_theory(spec) == pytest.approx(rate, abs=1e-12 if rate != 0.9802 else 1e-12)
    assert np.array_equal(s.alice_dits, s.bob_dits)


def test_chau02_sift_note():
    spec = ProtocolSpec(ProtocolKind.CHAU02, 2)
    assert sift_rate_theory(spec) == pytest.approx(1 / 3)
    assert "1/2" in sift_rate_note(spec) or "0.5" in sift_rate_note(spec)
    assert sift_rate_note(ProtocolSpec("BB84", 2)) is None


def test_sift_from_record_lists():
    spec = ProtocolSpec(ProtocolKind.BB84, 2)
    preps = [PrepRecord(0, 0), PrepRecord(1, 1), PrepRecord(1, 0)]
    meas = [MeasRecord(0, 0), MeasRecord(0, 0), MeasRecord(0, 0)]
    s = sift(preps, meas, spec)
    assert s.kept_indices.tolist() == [0, 2]
    assert s.error_rate == 0.5
    with pytest.raises(ValueError, match="length"):
        sift(preps, meas[:2], spec)


def test_chau15_drops_inconclusive():
    spec = ProtocolSpec(ProtocolKind.CHAU15, 4)
    preps = [PrepRecord(0, pair=(0, 1)), PrepRecord(1, pair=(2, 3))]
    meas = [MeasRecord(INCONCLUSIVE, pair=(0, 1)), MeasRecord(1, pair=(2, 3))]
    assert sift(preps, meas, spec).kept_indices.tolist() == [1]


def _sifted(alice, bob):
    alice, bob = np.asarray(alice), np.asarray(bob)
    return SiftResult(np.arange(len(alice)), alice, bob, len(alice))


def test_estimate_qber_census_and_noiseless(rng):
    s = _sifted([0, 1, 2, 3] * 25, [0, 1, 2, 0] * 25)
    est, disclosed = estimate_qber(s, 1.0)
    assert est == s.error_rate == 0.25
    assert len(disclosed) == 100
    s0 = _sifted([1] * 50, [1] * 50)
    assert estimate_qber(s0, 0.3, rng)[0] == 0.0


def test_estimate_qber_sample_size_and_uniqueness(rng):
    s = _sifted(np.zeros(1001, int), np.zeros(1001, int))
    _, disclosed = estimate_qber(s, 0.1, rng)
    assert len(disclosed) == math.ceil(0.1 * 1001)
    assert len(set(disclosed.tolist())) == len(disclosed)
    assert np.all(np.diff(disclosed) > 0)


def test_estimate_qber_binomial_accuracy(rng):
    n = 50_000
    bob = np.where(rng.random(n) < 0.10, 1, 0)
    s = _sifted(np.zeros(n, int), bob)
    est, _ = estimate_qber(s, 0.5, rng)
    assert est == pytest.approx(0.10, abs=0.01)


def test_estimate_qber_errors(rng):
    with pytest.raises(ValueError):
        estimate_qber(_sifted([], []), 0.1, rng)
    with pytest.raises(ValueError):
        estimate_qber(_sifted([0], [0]), 0.0, rng)


@pytest.mark.parametrize(
    "kwargs,msg",
    [(dict(kind="MUB", dim=4, num_bases=6), "m > d\\+1"),
     (dict(kind="CHAU15", dim=6), "power of two"),
     (dict(kind="CHAU15", dim=2), "power of two"),
     (dict(kind="CHAU02", dim=4), "d=2"),
     (dict(kind="BB84", dim=2, basis_bias=(0.5, 0.6)), "sum to 1"),
     (dict(kind="BB84", dim=1), ">= 2"),
     (dict(kind="SARG", dim=2), "unknown")],
)
def test_spec_validation(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        ProtocolSpec(**kwargs)


def test_spec_defaults():
    assert ProtocolSpec("MUB", 4).num_bases == 5
    assert ProtocolSpec("BB84", 8).num_bases == 2
    assert ProtocolSpec("chau02", 2).num_bases == 3
    assert ProtocolSpec("CHAU15", 16).num_bases is None


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(2, 3))
def test_biased_sift_theory_is_sum_of_squares(p, m):
    bias = (p, 1 - p) if m == 2 else (p / 2, p / 2, 1 - p)
    spec = ProtocolSpec("MUB", 2, m, bias)
    assert sift_rate_theory(spec) == pytest.approx(sum(b * b for b in spec.basis_bias), abs=1e-12)
    assert 1 / m - 1e-12 <= sift_rate_theory(spec) <= 1 + 1e-12
