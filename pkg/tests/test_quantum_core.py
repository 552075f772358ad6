import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rpsattack import quantum_core as qc
from rpsattack.quantum_core import ALICE, BOB

from oracles import born_table

# Frozen from oracles.born_table (eigh projectors on the 4x4 density matrix).
P_EQUAL_Z_N1 = 0.853553390593274


def test_bell_state_amplitudes():
    state = qc.make_bell_state()
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(state.amplitudes, [r, 0, 0, r], atol=1e-15)
    assert state.is_normalized()


def test_bell_state_z_marginal():
    obs = qc.standard_observables()
    assert qc.alice_marginal(qc.make_bell_state(), obs[(ALICE, 1)]) == pytest.approx(0.5, abs=1e-12)


def test_standard_observables():
    obs = qc.standard_observables()
    np.testing.assert_array_equal(obs[(ALICE, 1)].matrix, [[1, 0], [0, -1]])
    np.testing.assert_array_equal(obs[(ALICE, 2)].matrix, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(obs[(BOB, 3)].matrix, [[1, 0], [0, -1]])
    assert set(obs) == {(ALICE, 1), (ALICE, 2), (BOB, 1), (BOB, 2), (BOB, 3)}
    for o in obs.values():
        assert o.is_hermitian()
        assert o.is_involution()
    np.testing.assert_allclose(obs[(BOB, 1)].matrix @ obs[(BOB, 1)].matrix, np.eye(2), atol=1e-12)


def test_zz_perfect_correlation():
    obs = qc.standard_observables()
    dist = qc.outcome_distribution(qc.make_bell_state(), obs[(ALICE, 1)], obs[(BOB, 3)])
    assert dist[(0, 0)] == pytest.approx(0.5, abs=1e-12)
    assert dist[(1, 1)] == pytest.approx(0.5, abs=1e-12)
    assert dist[(0, 1)] == pytest.approx(0, abs=1e-12)
    assert dist[(1, 0)] == pytest.approx(0, abs=1e-12)


def test_z_n1_agreement_matches_frozen_oracle():
    obs = qc.standard_observables()
    dist = qc.outcome_distribution(qc.make_bell_state(), obs[(ALICE, 1)], obs[(BOB, 1)])
    assert dist[(0, 0)] + dist[(1, 1)] == pytest.approx(P_EQUAL_Z_N1, abs=1e-12)
    assert P_EQUAL_Z_N1 == pytest.approx((1 + 1 / math.sqrt(2)) / 2, abs=1e-12)


@pytest.mark.parametrize("x", [1, 2])
@pytest.mark.parametrize("y", [1, 2, 3])
def test_outcome_distribution_matches_eigh_oracle(x, y):
    obs = qc.standard_observables()
    state = qc.make_bell_state()
    ours = qc.outcome_distribution(state, obs[(ALICE, x)], obs[(BOB, y)])
    ref = born_table(state.amplitudes, obs[(ALICE, x)].matrix, obs[(BOB, y)].matrix)
    for k in ref:
        assert ours[k] == pytest.approx(ref[k], abs=1e-12)
    assert sum(ours.values()) == pytest.approx(1.0, abs=1e-12)


def test_rejects_unnormalized_state():
    obs = qc.standard_observables()
    with pytest.raises(ValueError, match="normalized"):
        qc.outcome_distribution(qc.TwoQubitState([1, 0, 0, 1]), obs[(ALICE, 1)], obs[(BOB, 1)])


def test_rejects_non_hermitian_observable():
    bad = qc.BinaryObservable([[0, 1], [0, 0]])
    with pytest.raises(ValueError, match="Hermitian"):
        qc.outcome_distribution(qc.make_bell_state(), bad, qc.standard_observables()[(BOB, 1)])


def test_honest_table_no_signalling():
    table = qc.honest_correlation_table()
    for x in (1, 2):
        for y in (1, 2, 3):
            assert sum(table[(a, b, x, y)] for a in (0, 1) for b in (0, 1)) == pytest.approx(1, abs=1e-12)
    for x in (1, 2):
        margs = [sum(table[(0, b, x, y)] for b in (0, 1)) for y in (1, 2, 3)]
        assert max(margs) - min(margs) < 1e-12
    for y in (1, 2, 3):
        margs = [sum(table[(a, 0, x, y)] for a in (0, 1)) for x in (1, 2)]
        assert max(margs) - min(margs) < 1e-12


def test_chsh_honest_is_tsirelson():
    assert qc.chsh_value(qc.honest_correlation_table()) == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def test_chsh_uniform_and_deterministic():
    uniform = {(a, b, x, y): 0.25 for a in (0, 1) for b in (0, 1) for x in (1, 2) for y in (1, 2)}
    assert qc.chsh_value(uniform) == pytest.approx(0.0, abs=1e-15)
    det = {(a, b, x, y): float(a == b == 0) for a in (0, 1) for b in (0, 1) for x in (1, 2) for y in (1, 2)}
    assert qc.chsh_value(det) == pytest.approx(2.0)


def test_chsh_missing_cell():
    table = qc.honest_correlation_table()
    del table[(0, 0, 2, 2)]
    with pytest.raises(KeyError, match="x=2, y=2"):
        qc.chsh_value(table)


angles = st.floats(min_value=0, max_value=2 * math.pi, allow_nan=False)


@given(theta=angles, phi=angles, alpha=angles)
def test_distribution_normalized_for_any_state_and_observable(theta, phi, alpha):
    amps = np.array([math.cos(theta), 0, math.sin(theta) * np.exp(1j * phi), 0]) \
        + np.array([0, 1, 0, 1]) * 0.3
    amps = amps / np.linalg.norm(amps)
    obs_b = qc.BinaryObservable(math.cos(alpha) * qc.PAULI_Z + math.sin(alpha) * qc.PAULI_X)
    dist = qc.outcome_distribution(qc.TwoQubitState(amps), qc.standard_observables()[(ALICE, 2)], obs_b)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    assert all(v >= -1e-15 for v in dist.values())
