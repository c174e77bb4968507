import math

import numpy as np
import pytest

from qauthlab.adversary import AttackDescriptor, purified_input, standard_suite
from qauthlab.hybrid import record_get
from qauthlab.pauli import enumerate_paulis
from qauthlab.protocols import ACC
from qauthlab.qmath import max_entangled_vector, trace_norm
from qauthlab.ucharness import (
    AdvantageReport,
    CompositionCycleError,
    CompositionTree,
    compose,
    ebit_advantage,
    ebit_advantage_bound,
    ebit_output_ideal,
    ebit_output_real,
    embed_final_state,
    overlap_chain_checks,
    pauli_displaced_input,
    ptp_soundness_exact,
    qa_kg_advantage,
    run_qa_kg_ideal,
    soundness_functional,
)


def is_acc(rec):
    return record_get(rec, "verdict") == ACC


def test_bound_values():
    # eps = 8/27 gives 2 sqrt(2) * (2/3)
    assert ebit_advantage_bound(8.0 / 27.0) == pytest.approx(4.0 * math.sqrt(2.0) / 3.0)
    assert ebit_advantage_bound(0.0) == 0.0
    assert ebit_advantage_bound(1.0) == 2.0  # capped at the trace-distance maximum
    with pytest.raises(ValueError):
        ebit_advantage_bound(-0.1)


def test_eta_states_identity_attack(family_s1):
    ident = AttackDescriptor("identity", label="identity")
    real = ebit_output_real(family_s1, ident)
    ideal = ebit_output_ideal(family_s1, ident)
    assert real.total_weight() == pytest.approx(1.0)
    assert real.weight_where(is_acc) == pytest.approx(1.0)
    assert real.distance(ideal) < 1e-12
    phi = max_entangled_vector(2)
    blk = real.conditional_where(is_acc)
    np.testing.assert_allclose(blk.matrix / blk.weight, np.outer(phi, phi.conj()), atol=1e-12)


def test_eta_reject_branches_identical(family_s1):
    desc = AttackDescriptor("random_dilation", seed=11, env_dim=2, label="r11")
    real = ebit_output_real(family_s1, desc)
    ideal = ebit_output_ideal(family_s1, desc)
    rej_real = real.conditional_where(lambda rec: not is_acc(rec))
    rej_ideal = ideal.conditional_where(lambda rec: not is_acc(rec))
    assert trace_norm(rej_real.matrix - rej_ideal.matrix) < 1e-12
    assert real.total_weight() == pytest.approx(1.0)
    assert ideal.total_weight() == pytest.approx(1.0)


def test_eta_always_detected_pauli_is_pure_reject(family_s2):
    from qauthlab.codes import syndrome

    chosen = next(
        e
        for e in enumerate_paulis(family_s2.n, include_identity=False)
        if all(syndrome(code, e) != 0 for code in family_s2.codes)
    )
    desc = AttackDescriptor("fixed_pauli", x=chosen.x, z=chosen.z, label="det")
    real = ebit_output_real(family_s2, desc)
    assert real.weight_where(is_acc) == pytest.approx(0.0, abs=1e-12)


def test_advantage_factored_form_and_bound(family_s1):
    for desc in standard_suite(1, 1):
        rep = ebit_advantage(family_s1, desc)
        assert rep.passed
        assert abs(rep.advantage - rep.extras["advantage_factored"]) < 1e-9
        assert 0.0 <= rep.advantage <= 2.0 + 1e-12


def test_overlap_chain_checks(family_s1):
    eps = family_s1.epsilon_verified
    for desc in standard_suite(1, 1):
        chk = overlap_chain_checks(family_s1, desc)
        assert chk["fidelity"] >= chk["fidelity_floor"] - 1e-9
        if chk["p_acc"] > eps ** (1.0 / 3.0):
            assert chk["overlap_defect"] <= eps / chk["p_acc"] + 1e-9
        # the soundness product is bounded by eps unconditionally
        assert chk["soundness_product"] <= eps + 1e-9


def test_ptp_soundness_exact_cross_validates(family_s1, family_s2, family_s3):
    for fam in (family_s1, family_s2, family_s3):
        exact = ptp_soundness_exact(fam)
        assert exact <= fam.epsilon_verified + 1e-9
        # Pauli-displaced entangled inputs achieve the worst case, so the
        # mask-level and state-level definitions agree to precision
        best = max(
            soundness_functional(fam, pauli_displaced_input(fam, e))
            for e in enumerate_paulis(fam.n, include_identity=False)
        )
        assert best <= exact + 1e-9
        assert exact == pytest.approx(fam.epsilon_verified, abs=1e-9)


def test_soundness_exact_dominates_random_inputs(family_s2, rng):
    from qauthlab.qmath import haar_state

    exact = ptp_soundness_exact(family_s2)
    dt = 1 << family_s2.n
    for _ in range(10):
        vec = haar_state(dt * dt, rng)
        rho = np.outer(vec, vec.conj())
        assert soundness_functional(family_s2, rho) <= exact + 1e-9


def test_qa_kg_advantage_identity_attack(family_s1):
    psi = purified_input("entangled", 1)
    rep = qa_kg_advantage(family_s1, psi, AttackDescriptor("identity", label="identity"))
    assert rep.advantage < 1e-9
    assert rep.passed
    assert rep.p_acc == pytest.approx(1.0)


def test_qa_kg_ideal_key_is_fresh_uniform(family_s1):
    psi = purified_input("entangled", 1)
    desc = AttackDescriptor("random_dilation", seed=12, env_dim=2, label="r12")
    ideal = run_qa_kg_ideal(psi, family_s1, desc)
    acc_blocks = {
        record_get(rec, "key_alice"): blk
        for rec, blk in ideal.blocks.items()
        if is_acc(rec)
    }
    assert len(acc_blocks) == 4
    weights = [blk.weight for blk in acc_blocks.values()]
    assert max(weights) - min(weights) < 1e-12
    mats = [blk.matrix / blk.weight for blk in acc_blocks.values()]
    for mat in mats[1:]:
        assert trace_norm(mat - mats[0]) < 1e-12


def test_qa_kg_advantage_suite(family_s1):
    psi = purified_input("entangled", 1)
    for desc in standard_suite(1, 1):
        rep = qa_kg_advantage(family_s1, psi, desc)
        assert rep.passed, desc.name()
        assert abs(rep.p_acc - rep.extras["p_acc_ideal"]) < 1e-9


def test_qa_kg_advantage_other_inputs(family_s2):
    # the bound holds for every message input the environment can pick, not
    # just the maximally entangled one
    attacks = [
        a
        for a in standard_suite(1, 2)
        if a.name() in ("identity", "Z1", "depol-0.5", "swap-R-T0", "random-102")
    ]
    for spec in ("plus", "basis-0", "random-17"):
        psi = purified_input(spec, 1)
        for desc in attacks:
            rep = qa_kg_advantage(family_s2, psi, desc)
            assert rep.passed, (spec, desc.name())


def test_two_qubit_messages_end_to_end():
    # nothing in the pipeline is single-logical-qubit specific
    from qauthlab.codes import ptc_epsilon_formula, search_ptc
    from qauthlab.protocols import ebit_ptc, ebit_ptp, run_qa_kg, run_tqa_kg

    fam = search_ptc(2, 2, target_eps=ptc_epsilon_formula(2, 2), budget=60, seed=4)
    assert fam.met_target
    assert ptp_soundness_exact(fam) <= fam.epsilon_verified + 1e-9
    psi = purified_input("entangled", 2)
    for label in ("identity", "X0", "random-101"):
        desc = next(a for a in standard_suite(2, 2) if a.name() == label)
        assert run_qa_kg(psi, fam, desc).distance(run_tqa_kg(psi, fam, desc)) < 1e-9
        assert ebit_ptc(fam, desc).distance(ebit_ptp(fam, desc)) < 1e-9
        assert qa_kg_advantage(fam, psi, desc).passed


def test_embedded_distance_matches_per_record(family_s1):
    desc = AttackDescriptor("depolarizing", strength=0.5, label="d5")
    real = ebit_output_real(family_s1, desc)
    ideal = ebit_output_ideal(family_s1, desc)
    dense = trace_norm(
        embed_final_state(real).matrix - embed_final_state(ideal).matrix
    )
    assert dense == pytest.approx(real.distance(ideal), abs=1e-10)
    assert abs(embed_final_state(real).matrix.trace() - 1.0) < 1e-10


def test_advantage_report_json(family_s1):
    rep = ebit_advantage(family_s1, AttackDescriptor("identity", label="identity"))
    payload = rep.to_json()
    assert payload["pass"] is True
    assert payload["protocol"] == "EBIT"
    assert 0.0 <= payload["advantage"] <= 2.0


def test_compose_sums_and_detects_cycles():
    tree = CompositionTree(nodes=(("a", 0.1), ("b", 0.05)), edges=(("a", "b"),))
    assert compose(tree) == pytest.approx(0.15)
    single = CompositionTree(nodes=(("only", 0.3),))
    assert compose(single) == pytest.approx(0.3)
    cyclic = CompositionTree(
        nodes=(("a", 0.0), ("b", 0.0)), edges=(("a", "b"), ("b", "a"))
    )
    with pytest.raises(CompositionCycleError):
        compose(cyclic)
    with pytest.raises(ValueError):
        compose(CompositionTree(nodes=(("a", 0.0),), edges=(("a", "zz"),)))


def test_compose_full_protocol_chain(family_s3):
    # the whole argument: two exact circuit rewrites, one simulator step with
    # the cube-root bound, and two exact endgame identifications
    eps = family_s3.epsilon_verified
    bound = ebit_advantage_bound(eps)
    chain = CompositionTree(
        nodes=(
            ("qa-kg-to-teleported", 0.0),
            ("code-form-to-protocol-form", 0.0),
            ("entanglement-vs-ideal", bound),
            ("teleport-over-ideal-ebits", 0.0),
            ("fresh-key-identification", 0.0),
        ),
        edges=(
            ("qa-kg-to-teleported", "code-form-to-protocol-form"),
            ("code-form-to-protocol-form", "entanglement-vs-ideal"),
            ("entanglement-vs-ideal", "teleport-over-ideal-ebits"),
            ("teleport-over-ideal-ebits", "fresh-key-identification"),
        ),
    )
    assert compose(chain) == pytest.approx(bound)
    roundtrip = CompositionTree.from_json(chain.to_json())
    assert compose(roundtrip) == pytest.approx(bound)
