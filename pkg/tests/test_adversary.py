import numpy as np
import pytest

from qauthlab.adversary import (
    AttackDescriptor,
    build_attack,
    purified_input,
    standard_suite,
)
from qauthlab.qmath import RegisterError, StateVector


DIMS = {"R": 2, "T": 8}


def test_identity_attack():
    ch = build_attack(AttackDescriptor("identity"), DIMS)
    assert ch.env_dim == 1
    assert np.allclose(ch.kraus_ops[0], np.eye(8))


def test_fixed_pauli_attack():
    ch = build_attack(AttackDescriptor("fixed_pauli", x=0b001, z=0), DIMS)
    assert ch.env_dim == 1
    op = ch.kraus_ops[0]
    assert np.allclose(op @ op, np.eye(8))
    basis0 = np.zeros(8)
    basis0[0] = 1.0
    assert np.allclose(op @ basis0, np.eye(8)[:, 1])  # X on qubit 0 flips the low bit


def test_mixture_weights_must_normalize():
    with pytest.raises(ValueError):
        build_attack(
            AttackDescriptor("pauli_mixture", weights=((0.5, 0, 0), (0.6, 1, 0))), DIMS
        )


def test_depolarizing_strength_range():
    for p in (0.1, 0.5, 1.0):
        ch = build_attack(AttackDescriptor("depolarizing", strength=p), DIMS)
        comp = sum(k.conj().T @ k for k in ch.kraus_ops)
        assert np.allclose(comp, np.eye(8), atol=1e-12)
    with pytest.raises(ValueError):
        build_attack(AttackDescriptor("depolarizing", strength=1.5), DIMS)


def test_random_dilation_is_seed_deterministic():
    d1 = build_attack(AttackDescriptor("random_dilation", seed=9, env_dim=2), DIMS)
    d2 = build_attack(AttackDescriptor("random_dilation", seed=9, env_dim=2), DIMS)
    for a, b in zip(d1.kraus_ops, d2.kraus_ops):
        np.testing.assert_allclose(a, b)
    d3 = build_attack(AttackDescriptor("random_dilation", seed=10, env_dim=2), DIMS)
    assert not np.allclose(d1.kraus_ops[0], d3.kraus_ops[0])


def test_swap_with_r_is_a_swap():
    dims = {"R": 2, "T": 2}
    ch = build_attack(
        AttackDescriptor("swap_with_r", acts_on=("R", "T"), qubit=0), dims
    )
    op = ch.kraus_ops[0]
    swap = np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    )
    np.testing.assert_allclose(op, swap)


def test_suite_composition_and_determinism():
    for m, s in ((1, 1), (1, 2), (1, 3)):
        suite = standard_suite(m, s)
        n = m + s
        assert len(suite) == 15 + 3 * n
        assert len(suite) >= 20
        labels = [a.name() for a in suite]
        assert labels[0] == "identity"
        assert len(set(labels)) == len(labels)
        again = standard_suite(m, s)
        assert [a.to_json() for a in again] == [a.to_json() for a in suite]
        # every member compiles into a valid channel (completeness is checked
        # by the QuantumChannel constructor)
        for desc in suite:
            ch = build_attack(desc, {"R": 1 << m, "T": 1 << n})
            assert ch.input_dim == ch.output_dim


def test_descriptor_json_roundtrip():
    suite = standard_suite(1, 2)
    for desc in suite:
        back = AttackDescriptor.from_json(desc.to_json())
        assert back.to_json() == desc.to_json()


def test_purified_inputs():
    ent = purified_input("entangled", 1)
    assert isinstance(ent, StateVector)
    np.testing.assert_allclose(ent.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))

    plus = purified_input("plus", 1)
    np.testing.assert_allclose(plus.amplitudes, np.array([1, 1, 0, 0]) / np.sqrt(2))

    basis = purified_input("basis-1", 1)
    np.testing.assert_allclose(basis.amplitudes, [0, 1, 0, 0])

    r1 = purified_input("random-5", 1)
    r2 = purified_input("random-5", 1)
    np.testing.assert_allclose(r1.amplitudes, r2.amplitudes)
    assert abs(np.vdot(r1.amplitudes, r1.amplitudes) - 1.0) < 1e-12

    with pytest.raises(ValueError):
        purified_input("nonsense", 1)


def test_unknown_kind_and_missing_register():
    with pytest.raises(ValueError):
        build_attack(AttackDescriptor("bogus"), DIMS)
    with pytest.raises(RegisterError):
        build_attack(AttackDescriptor("identity", acts_on=("R", "T")), {"T": 8})


def test_suite_dilations_roundtrip(rng):
    # every suite channel is trace preserving and its dilation reproduces the
    # operator-sum action after discarding the environment
    from qauthlab.qmath import random_density

    dims = {"R": 2, "T": 4}
    for desc in standard_suite(1, 1):
        ch = build_attack(desc, dims)
        v = ch.dilation()
        d = ch.input_dim
        assert np.allclose(v.conj().T @ v, np.eye(d), atol=1e-12)
        rho = random_density(d, rng)
        big = v @ rho @ v.conj().T
        k = ch.env_dim
        reduced = big.reshape(d, k, d, k).trace(axis1=1, axis2=3)
        assert np.allclose(reduced, ch.apply_matrix(rho), atol=1e-10)


def test_suite_covers_sure_accept_and_strong_reject(family_s2):
    # the suite must contain the no-op (accepted with certainty) and at least
    # one keyed Pauli rejected with probability >= 1 - epsilon; acceptance of
    # a keyed Pauli equals its zero-syndrome fraction over the family
    from qauthlab.codes import syndrome
    from qauthlab.pauli import PauliString

    suite = standard_suite(family_s2.m, family_s2.s)
    assert any(a.kind == "identity" for a in suite)
    best_reject = 0.0
    for desc in suite:
        if desc.kind != "fixed_pauli":
            continue
        e = PauliString(family_s2.n, desc.x, desc.z)
        p_acc = sum(1 for c in family_s2.codes if syndrome(c, e) == 0) / len(
            family_s2.codes
        )
        best_reject = max(best_reject, 1.0 - p_acc)
    assert best_reject >= 1.0 - family_s2.epsilon_verified - 1e-12
