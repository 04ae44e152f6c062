import itertools
from fractions import Fraction

import numpy as np
import pytest

from quditqkd.channel import (
    ChannelKind,
    ChannelSpec,
    channel_from_config,
    cloner_qber_theory,
    depolarizing_for_qber,
    depolarizing_qber_theory,
    intercept_resend_qber_theory,
    transmit,
    transmit_batch,
)
from quditqkd.protocols import ProtocolSpec
from quditqkd.quditmath import StateVector, dqft_basis, mub_set
from quditqkd.simkit import RunConfig, run_experiment


def _enumerated_ir_qber(d, m):
    """Sum exact Born probabilities over every (Alice basis, symbol, Eve basis, Eve outcome, Bob outcome)."""
    mats = mub_set(d, m).matrices
    err = 0.0
    for a, s, e in itertools.product(range(m), range(d), range(m)):
        sent = mats[a][:, s]
        for o in range(d):
            p_eve = abs(np.vdot(mats[e][:, o], sent)) ** 2
            resent = mats[e][:, o]
            for b in range(d):
                if b != s:
                    err += p_eve * abs(np.vdot(mats[a][:, b], resent)) ** 2
    return err / (m * d * m)


@pytest.mark.parametrize("d,m,expect", [(2, 2, 0.25), (4, 2, 0.375), (2, 3, 1 / 3), (3, 4, 0.5), (4, 5, 0.6)])
def test_intercept_resend_theory_matches_enumeration(d, m, expect):
    assert intercept_resend_qber_theory(d, m) == pytest.approx(expect, abs=1e-12)
    assert _enumerated_ir_qber(d, m) == pytest.approx(expect, abs=1e-12)


def test_intercept_resend_theory_domain():
    with pytest.raises(ValueError):
        intercept_resend_qber_theory(2, 4)


def test_identity_returns_state_unchanged(rng):
    plus = dqft_basis(2)[0]
    out, eve = transmit(ChannelSpec.identity(), plus, rng)
    assert out == plus
    assert eve is None


def test_intercept_resend_forwards_basis_vector(rng):
    bs = mub_set(4, 3)
    chan = ChannelSpec.intercept_resend(bs)
    for _ in range(50):
        out, eve = transmit(chan, StateVector.basis_state(4, 2), rng)
        assert np.allclose(out.amps, bs.matrices[eve.basis_idx][:, eve.outcome])
        if eve.basis_idx == 0:
            assert eve.outcome == 2


def test_depolarizing_zero_is_identity():
    states = mub_set(3, 4).matrices[2].T.copy()
    u = np.random.default_rng(1).random((3, 3))
    out, _ = transmit_batch(ChannelSpec.depolarizing(0.0), states, u)
    assert np.array_equal(out, states)


def test_depolarizing_replacement_distribution():
    n, d, q = 200_000, 4, 0.3
    rng = np.random.default_rng(5)
    states = np.tile(dqft_basis(d)[1].amps, (n, 1))
    out, _ = transmit_batch(ChannelSpec.depolarizing(q), states, rng.random((n, 3)))
    replaced = ~np.all(np.isclose(out, states), axis=1)
    assert replaced.mean() == pytest.approx(q, abs=0.005)
    levels = np.argmax(np.abs(out[replaced]), axis=1)
    assert np.all(np.abs(np.bincount(levels, minlength=d) / replaced.sum() - 1 / d) < 0.01)


def test_cloner_shrink_and_disturbance():
    assert ChannelSpec.cloner(2).shrink == pytest.approx(2 / 3)
    assert cloner_qber_theory(2) == pytest.approx(1 / 6)
    assert cloner_qber_theory(7) == pytest.approx(0.375)
    for d in range(2, 17):
        eta = Fraction(ChannelSpec.cloner(d).shrink).limit_denominator(10_000)
        assert (1 - eta) * Fraction(d - 1, d) == Fraction(1, 2) - Fraction(1, d + 1)


def test_depolarizing_theory_inverse():
    for spec in (ProtocolSpec("BB84", 2), ProtocolSpec("BB84", 8), ProtocolSpec("CHAU15", 4)):
        for e in (0.0, 0.01, 0.1, 0.2):
            q = depolarizing_for_qber(spec, e)
            assert depolarizing_qber_theory(spec, q) == pytest.approx(e, abs=1e-12)
    with pytest.raises(ValueError):
        depolarizing_for_qber(ProtocolSpec("BB84", 2), 0.6)


@pytest.mark.parametrize("spec", [ProtocolSpec("BB84", 4), ProtocolSpec("CHAU15", 8)])
def test_depolarizing_monte_carlo_matches_theory(spec):
    q = 0.2
    r = run_experiment(RunConfig(spec, ChannelSpec.depolarizing(q), 100_000, master_seed=3))
    theory = depolarizing_qber_theory(spec, q)
    assert abs(r.qber_exact - theory) < 4 * r.qber_stderr


def test_channel_validation():
    with pytest.raises(ValueError):
        ChannelSpec.depolarizing(1.5)
    with pytest.raises(ValueError):
        ChannelSpec(ChannelKind.INTERCEPT_RESEND)
    with pytest.raises(ValueError, match="d=4"):
        RunConfig(ProtocolSpec("BB84", 2), ChannelSpec.cloner(4))
    with pytest.raises(ValueError, match="dimension"):
        transmit_batch(ChannelSpec.cloner(4), np.eye(2, dtype=complex), np.zeros((2, 3)))


def test_channel_from_config_defaults():
    assert channel_from_config("INTERCEPT_RESEND", ProtocolSpec("MUB", 2)).eve_bases.m == 3
    assert channel_from_config("INTERCEPT_RESEND", ProtocolSpec("CHAU15", 4)).eve_bases.m == 2
    assert channel_from_config("intercept_resend", ProtocolSpec("BB84", 4), eve_m=5).eve_bases.m == 5
    assert channel_from_config("CLONER", ProtocolSpec("BB84", 7)).dim == 7
