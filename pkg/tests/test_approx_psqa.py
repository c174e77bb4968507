import numpy as np
import pytest

from qauthlab.adversary import AttackDescriptor, standard_suite
from qauthlab.approx_psqa import (
    measure_delta,
    pauli_cipher,
    psqa_advantage,
    rsp_povm,
    run_psqa_kg,
    run_psrqa_kg,
    sample_cipher,
)
from qauthlab.pauli import PauliString, pauli_matrix
from qauthlab.protocols import ACC, run_qa_kg
from qauthlab.qmath import StateVector, haar_state, trace_norm


@pytest.fixture(scope="module")
def message():
    vec = np.array([0.6, 0.8j], dtype=complex)
    return vec / np.linalg.norm(vec)


def test_pauli_cipher_is_exact():
    cip = pauli_cipher(1)
    assert cip.key_count == 4
    assert cip.delta_measured < 1e-10


def test_sampled_cipher_reports_delta(message):
    cip = sample_cipher(1, 16, seed=3)
    assert cip.key_count == 16
    assert 0.0 < cip.delta_measured < 2.0
    again = sample_cipher(1, 16, seed=3)
    assert again.delta_measured == cip.delta_measured
    for u in cip.unitaries:
        assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12)


def test_delta_shrinks_with_key_count_in_distribution():
    # monotone trend in expectation: average measured delta over seeds drops
    # as the cipher grows
    small = np.mean([sample_cipher(1, 4, seed=s).delta_measured for s in range(6)])
    large = np.mean([sample_cipher(1, 32, seed=s).delta_measured for s in range(6)])
    assert large < small


def test_measure_delta_matches_flattening_definition(rng):
    cip = sample_cipher(1, 8, seed=1)
    vec = haar_state(2, rng)
    rho = np.outer(vec, vec.conj())
    avg = sum(u @ rho @ u.conj().T for u in cip.unitaries) / cip.key_count
    value = 2 * np.linalg.norm(avg - np.eye(2) / 2, 2)
    assert value <= cip.delta_measured + 1e-12


def test_rsp_povm_structure(message):
    cip = pauli_cipher(1)
    meas = rsp_povm(cip, message)
    assert len(meas.povm.elements) == cip.key_count + 1
    total = sum(meas.povm.elements)
    assert np.allclose(total, np.eye(2), atol=1e-10)
    # with the exact cipher the failure element vanishes
    assert meas.failure_probability < 1e-10
    # post-measurement states on the far half are the four Pauli conjugates
    rho = np.outer(message, message.conj())
    for k in range(4):
        x, z = divmod(k, 2)
        u = pauli_matrix(PauliString(1, x, z))
        elem = meas.povm.elements[k]
        np.testing.assert_allclose(elem, (u @ rho @ u.conj().T).T / meas.scale, atol=1e-12)


def test_rsp_povm_failure_probability(message):
    cip = sample_cipher(1, 8, seed=5)
    meas = rsp_povm(cip, message)
    assert 0.0 <= meas.failure_probability < 1.0
    assert meas.scale >= cip.key_count / 2.0 - 1e-12
    with pytest.raises(ValueError):
        rsp_povm(cip, np.array([1.0, 1.0]))


def test_psqa_reduces_to_qa_with_pauli_cipher(family_s1, message):
    cip = pauli_cipher(1)
    qa_input = StateVector(np.kron([1.0], message), (("R", 1), ("M", 2)))
    for label in ("identity", "X0", "depol-0.5", "random-102"):
        desc = next(a for a in standard_suite(1, 1) if a.name() == label)
        if desc.acts_on != ("T",):
            continue
        psqa = run_psqa_kg(message, cip, family_s1, desc)
        qa = run_qa_kg(qa_input, family_s1, desc)
        total = 0.0
        for rec, blk in qa.blocks.items():
            d = dict(rec)
            if d["verdict"] == ACC:
                x, z = d["key_alice"]
                target = (("verdict", ACC), ("key", 2 * x + z))
            else:
                target = (("verdict", "REJ"), ("key", "ERR"))
            other = psqa.blocks.get(target)
            total += trace_norm(blk.matrix - other.matrix) if other else blk.weight
        assert total < 1e-9, label


def test_psrqa_matches_psqa_branch_for_branch(family_s1, message):
    cip = sample_cipher(1, 8, seed=5)
    meas = rsp_povm(cip, message)
    for label in ("identity", "depol-0.5", "random-103"):
        desc = next(a for a in standard_suite(1, 1) if a.name() == label)
        psqa = run_psqa_kg(message, cip, family_s1, desc, detail=True)
        psrqa = run_psrqa_kg(message, cip, family_s1, desc, detail=True)
        scale = 1.0 - meas.failure_probability
        for rec, blk in psqa.blocks.items():
            other = psrqa.blocks.get(rec)
            assert other is not None, rec
            assert other.weight == pytest.approx(scale * blk.weight, abs=1e-12)
            assert (
                trace_norm(blk.matrix / blk.weight - other.matrix / other.weight)
                < 1e-9
            )
        f_mass = sum(
            blk.weight
            for rec, blk in psrqa.blocks.items()
            if dict(dict(rec)["detail"]).get("k") == "f"
        )
        assert f_mass == pytest.approx(meas.failure_probability, abs=1e-10)


def test_psqa_advantage_identity_attack(family_s1, message):
    cip = sample_cipher(1, 16, seed=3)
    rep = psqa_advantage(message, cip, family_s1, AttackDescriptor("identity", label="identity"))
    assert rep.advantage < 1e-9
    assert rep.passed


def test_psqa_advantage_bound_over_attacks(family_s2, message):
    cip = sample_cipher(1, 16, seed=3)
    for label in ("X0", "depol-0.5", "swap-held", "random-101"):
        desc = next(a for a in standard_suite(1, 2) if a.name() == label)
        rep = psqa_advantage(message, cip, family_s2, desc)
        assert rep.passed, label
        assert rep.extras["failure_probability"] >= 0.0
        assert rep.bound <= 2.0


def test_cipher_json(message):
    cip = sample_cipher(1, 8, seed=2)
    payload = cip.to_json()
    assert payload["K"] == 8 and payload["m"] == 1 and payload["seed"] == 2
    assert payload["delta_measured"] == cip.delta_measured
