"""Approximate encryption and pure-state authentication at toy scale.

An approximate cipher is a sampled set of K unitaries standing in for the
exact Pauli one-time pad; its flattening quality delta is measured on a grid
of test states plus a seeded sample of random pure states (a sampled lower
bound on the true supremum, reported as such, never assumed).

Remote state preparation turns a known-pure-message cipher into a measurement
on shared entanglement: measuring one ebit half with the POVM
{ (U_k rho U_k^dag)^T / M }_k  plus the failure element F collapses the other
half exactly onto U_k rho U_k^dag when k != f. Substituting this for
teleportation inside the authentication protocol yields the pure-state
variant; with the exact Pauli cipher the variant reduces to the standard
protocol branch for branch, and with sampled ciphers the security bound picks
up 2 Pr(f) from the failure branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adversary import AttackDescriptor
from .codes import PtcFamily
from .hybrid import Branch, FinalState, HybridState, Record, record_get
from .pauli import PauliString, pauli_matrix
from .protocols import (
    ACC,
    ERR,
    REJ,
    _attack_pieces,
    _family_encoders,
    _send_through,
    _with_verdict,
)
from .qmath import (
    Povm,
    StateVector,
    haar_state,
    haar_unitary,
    max_entangled_vector,
    operator_norm,
    psd_sqrt,
)
from .ucharness import ebit_advantage_bound, make_report, AdvantageReport


@dataclass(frozen=True)
class ApproxCipher:
    """K unitaries on m qubits with a measured flattening parameter.

    delta_measured is the maximum over the tested pure states rho of
    2^m * || (1/K) sum_k U_k rho U_k^dag - I/2^m ||_inf. Exhaustive over the
    test grid, sampled beyond it.
    """

    unitaries: tuple[np.ndarray, ...]
    m: int
    delta_measured: float
    seed: int | None = None
    label: str = ""

    @property
    def key_count(self) -> int:
        return len(self.unitaries)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "K": self.key_count,
            "seed": self.seed,
            "delta_measured": self.delta_measured,
            "label": self.label,
        }


def _test_states(m: int, rng: np.random.Generator, samples: int) -> list[np.ndarray]:
    d = 1 << m
    states = [np.eye(d, dtype=complex)[:, i] for i in range(d)]
    had = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    hall = had
    for _ in range(m - 1):
        hall = np.kron(hall, had)
    states += [hall @ np.eye(d, dtype=complex)[:, i] for i in range(d)]
    states += [haar_state(d, rng) for _ in range(samples)]
    return states


def measure_delta(
    unitaries, m: int, seed: int = 0, samples: int = 2000
) -> float:
    """Measured flattening parameter of a cipher over the standard test set."""
    d = 1 << m
    rng = np.random.default_rng(seed ^ 0x5EED)
    worst = 0.0
    eye = np.eye(d) / d
    for vec in _test_states(m, rng, samples):
        rho = np.outer(vec, vec.conj())
        avg = sum(u @ rho @ u.conj().T for u in unitaries) / len(unitaries)
        worst = max(worst, d * operator_norm(avg - eye))
    return float(worst)


def pauli_cipher(m: int) -> ApproxCipher:
    """The exact cipher: all 4^m keyed Paulis, delta numerically zero."""
    unis = tuple(
        pauli_matrix(PauliString(m, x, z))
        for x in range(1 << m)
        for z in range(1 << m)
    )
    delta = measure_delta(unis, m, seed=0, samples=64)
    return ApproxCipher(unis, m, delta, seed=None, label=f"pauli-{m}")


def sample_cipher(m: int, key_count: int, seed: int) -> ApproxCipher:
    """K Haar-random unitaries with the measured (not assumed) delta."""
    if m > 2:
        raise ValueError("toy-scale ciphers are limited to m <= 2")
    rng = np.random.default_rng(seed)
    unis = tuple(haar_unitary(1 << m, rng) for _ in range(key_count))
    delta = measure_delta(unis, m, seed=seed)
    return ApproxCipher(unis, m, delta, seed=seed, label=f"haar-{m}-K{key_count}-s{seed}")


# ---------------------------------------------------------------------------
# remote state preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RspMeasurement:
    povm: Povm
    failure_index: int
    scale: float  # M = || sum_k U_k rho U_k^dag ||_inf
    failure_probability: float  # on half of a maximally entangled pair


def rsp_povm(cipher: ApproxCipher, message_vec: np.ndarray) -> RspMeasurement:
    """The cipher's preparation measurement for one known pure message.

    Elements (U_k rho U_k^dag)^T / M for each key plus the failure element
    F = I - (sum_k U_k rho U_k^dag)^T / M; they sum to the identity by
    construction. Applied to half of a maximally entangled pair, outcome k
    occurs with probability 1/(M 2^m) and leaves the far half in exactly
    U_k rho U_k^dag; the failure outcome has probability 1 - K/(M 2^m).
    """
    vec = np.asarray(message_vec, dtype=complex).reshape(-1)
    d = 1 << cipher.m
    if vec.size != d:
        raise ValueError(f"message must have dimension {d}")
    if abs(np.vdot(vec, vec).real - 1.0) > 1e-10:
        raise ValueError("message must be a unit vector (pure state)")
    rho = np.outer(vec, vec.conj())
    total = sum(u @ rho @ u.conj().T for u in cipher.unitaries)
    scale = operator_norm(total)
    elements = [(u @ rho @ u.conj().T).T / scale for u in cipher.unitaries]
    failure = np.eye(d, dtype=complex) - total.T / scale
    povm = Povm(tuple(elements) + (failure,))
    p_fail = 1.0 - cipher.key_count / (scale * d)
    return RspMeasurement(povm, cipher.key_count, scale, float(max(p_fail, 0.0)))


# ---------------------------------------------------------------------------
# the pure-state protocol and its remote-preparation twin
# ---------------------------------------------------------------------------


def _psqa_plan(detail: bool):
    def plan(rec: Record):
        verdict = record_get(rec, "verdict")
        key = record_get(rec, "k")
        if verdict == ACC and key != "f":
            out_rec = (("verdict", ACC), ("key", key))
            drop = ()
        else:
            out_rec = (("verdict", verdict), ("key", ERR))
            drop = ("M",)
        if detail:
            fields = dict(rec)
            out_rec = out_rec + (
                ("detail", tuple((kk, fields[kk]) for kk in ("k", "t", "y", "ysyn") if kk in fields)),
            )
        return out_rec, drop, ()

    return plan


def run_psqa_kg(
    message_vec: np.ndarray,
    cipher: ApproxCipher,
    family: PtcFamily,
    attack: AttackDescriptor,
    detail: bool = False,
) -> FinalState:
    """Pure-state authentication: the cipher replaces the Pauli pad.

    The message is a known pure state prepared at the sender (no reference
    register), encrypted with a uniformly chosen cipher key, encoded and
    shipped exactly as in the standard protocol, and the cipher key is
    recycled on accept.
    """
    m, s = family.m, family.s
    dm, dy = 1 << m, 1 << s
    vec = np.asarray(message_vec, dtype=complex).reshape(-1)
    base = StateVector(vec, (("Mc", dm),))
    encs = _family_encoders(family)
    iso, att_names, att_out = _attack_pieces(family, attack)
    key_count = cipher.key_count * len(encs) * dy
    collected: list[Branch] = []
    registers = None
    for k, u in enumerate(cipher.unitaries):
        for t, enc in enumerate(encs):
            for y in range(dy):
                rec = (("k", k), ("t", t), ("y", y))
                h = HybridState.from_pure(base, rec)
                h = h.apply(u, ("Mc",))
                h = _send_through(h, "Mc", enc, y, iso, att_names, att_out, dy, dm)
                h = h.rename_register("B", "M")
                h = h.apply_where(
                    u.conj().T, ("M",), lambda r, _y=y: record_get(r, "ysyn") == _y
                )
                registers = h.registers
                for br in h.branches:
                    collected.append(
                        Branch(br.probability / key_count, br.record, br.vector)
                    )
    combined = _with_verdict(HybridState(registers, collected, renormalized=True))
    return combined.finalize(_psqa_plan(detail))


def run_psrqa_kg(
    message_vec: np.ndarray,
    cipher: ApproxCipher,
    family: PtcFamily,
    attack: AttackDescriptor,
    detail: bool = False,
) -> FinalState:
    """Remote-preparation twin: entanglement through the attacked channel,
    then the message-specific measurement on the sender's halves.

    On outcome k != f the receiver's half collapses exactly onto the k-th
    encryption of the message, so conditioned on not failing, the final state
    matches ``run_psqa_kg`` branch for branch; the failure outcome carries
    probability 1 - K/(M 2^m) and error symbols.
    """
    m, s = family.m, family.s
    dm, dy = 1 << m, 1 << s
    vec = np.asarray(message_vec, dtype=complex).reshape(-1)
    meas = rsp_povm(cipher, vec)
    rho = np.outer(vec, vec.conj())
    scale = meas.scale
    ket0 = np.eye(dm, dtype=complex)[:, 0]
    ops: list[tuple[object, np.ndarray, tuple]] = []
    for k, u in enumerate(cipher.unitaries):
        # measurement operator |0><conj(phi_k)| / sqrt(M); as a matrix its row
        # is the unconjugated encryption, so the far half collapses to phi_k
        kraus = np.outer(ket0, u @ vec) / np.sqrt(scale)
        ops.append((k, kraus, (("Ams", dm),)))
    f_op = psd_sqrt(np.eye(dm, dtype=complex) - (sum(u @ rho @ u.conj().T for u in cipher.unitaries)).T / scale)
    ops.append(("f", f_op, (("Ams", dm),)))

    encs = _family_encoders(family)
    iso, att_names, att_out = _attack_pieces(family, attack)
    base = StateVector(max_entangled_vector(dm), (("Ams", dm), ("B0", dm)))
    key_count = len(encs) * dy
    collected: list[Branch] = []
    registers = None
    for t, enc in enumerate(encs):
        for y in range(dy):
            rec = (("t", t), ("y", y))
            h = HybridState.from_pure(base, rec)
            h = _send_through(h, "B0", enc, y, iso, att_names, att_out, dy, dm)
            h = h.apply_instrument(ops, ("Ams",), "k")
            h = h.rename_register("B", "M")
            h = h.apply_by_record(
                lambda r: (
                    cipher.unitaries[record_get(r, "k")].conj().T
                    if record_get(r, "k") != "f" and record_get(r, "ysyn") == record_get(r, "y")
                    else None
                ),
                ("M",),
            )
            registers = h.registers
            for br in h.branches:
                collected.append(Branch(br.probability / key_count, br.record, br.vector))
    combined = _with_verdict(HybridState(registers, collected, renormalized=True))

    def plan(rec: Record):
        new_rec, drop, mix = _psqa_plan(detail)(rec)
        # the sender's measured half is internal; it never reaches the environment
        return new_rec, drop + ("Ams",), mix

    return combined.finalize(plan)


def psqa_ideal(
    message_vec: np.ndarray,
    cipher: ApproxCipher,
    family: PtcFamily,
    attack: AttackDescriptor,
) -> FinalState:
    """Simulator + ideal channel + ideal key box for the pure-state protocol."""
    m, s = family.m, family.s
    dm, dy = 1 << m, 1 << s
    vec = np.asarray(message_vec, dtype=complex).reshape(-1)
    encs = _family_encoders(family)
    iso, att_names, att_out = _attack_pieces(family, attack)
    base = StateVector(max_entangled_vector(dm), (("Ad", dm), ("B0", dm)))
    key_count = len(encs) * dy
    collected: list[Branch] = []
    registers = None
    for t, enc in enumerate(encs):
        for y in range(dy):
            rec = (("t", t), ("y", y))
            h = HybridState.from_pure(base, rec)
            h = _send_through(h, "B0", enc, y, iso, att_names, att_out, dy, dm)
            registers = h.registers
            for br in h.branches:
                collected.append(Branch(br.probability / key_count, br.record, br.vector))
    combined = _with_verdict(HybridState(registers, collected, renormalized=True))
    combined = combined.branch_uniform(
        "key", list(range(cipher.key_count)), where=lambda r: record_get(r, "verdict") == ACC
    )

    def plan(rec: Record):
        if record_get(rec, "verdict") == ACC:
            return (
                (("verdict", ACC), ("key", record_get(rec, "key"))),
                ("Ad", "B"),
                (),
            )
        return ((("verdict", REJ), ("key", ERR)), ("Ad", "B"), ())

    final = combined.finalize(plan)
    # deliver the exact message on accept: tensor it onto the accept blocks
    rho = np.outer(vec, vec.conj())
    blocks = {}
    for rec, block in final.blocks.items():
        if record_get(rec, "verdict") == ACC:
            regs = tuple(sorted(block.registers + (("M", dm),), key=lambda r: r[0]))
            pos = [nm for nm, _ in regs].index("M")
            mat = _insert_factor(block.matrix, [d for _, d in block.registers], pos, rho)
            blocks[rec] = (regs, mat)
        else:
            blocks[rec] = (block.registers, block.matrix.copy())
    return FinalState(blocks)


def _insert_factor(matrix: np.ndarray, dims: list[int], pos: int, factor: np.ndarray) -> np.ndarray:
    """Tensor ``factor`` into a density matrix as a new register at axis ``pos``."""
    left = int(np.prod(dims[:pos])) if pos else 1
    right = int(np.prod(dims[pos:])) if pos < len(dims) else 1
    d = factor.shape[0]
    t4 = matrix.reshape(left, right, left, right)
    out = np.einsum("ab,ixjy->iaxjby", factor, t4)
    return out.reshape(left * d * right, left * d * right)


def psqa_advantage(
    message_vec: np.ndarray,
    cipher: ApproxCipher,
    family: PtcFamily,
    attack: AttackDescriptor,
) -> AdvantageReport:
    """Real-vs-ideal advantage of the pure-state protocol.

    The bound is the entanglement-generation bound plus 2 Pr(f) with the
    failure probability measured for this very message and cipher.
    """
    real = run_psqa_kg(message_vec, cipher, family, attack)
    ideal = psqa_ideal(message_vec, cipher, family, attack)
    advantage = real.distance(ideal)
    p_f = rsp_povm(cipher, message_vec).failure_probability
    bound = min(2.0, ebit_advantage_bound(family.epsilon_verified) + 2.0 * p_f)
    p_acc = real.weight_where(lambda r: record_get(r, "verdict") == ACC)
    return make_report(
        "PSQA+KG",
        attack,
        p_acc,
        advantage,
        bound,
        family.epsilon_verified,
        failure_probability=float(p_f),
        delta_measured=float(cipher.delta_measured),
        cipher=cipher.to_json(),
    )
