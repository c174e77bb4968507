"""The composable-security experiments: real vs ideal-plus-simulator.

For entanglement generation, the simulator runs a dummy copy of the protocol
through the same attack, uses its verdict to drive the ideal box, and discards
the dummy payload. Writing S for the accept-conditional joint state on the
payload pair (A, B) and the adversary's retained system E, the two final
states an environment can hold are

    real : p_acc * S_ABE (x) acc   +  p_rej * (error state) (x) rej
    ideal: p_acc * (perfect ebits (x) S_E) (x) acc  +  the same reject term

with identical reject terms by construction, so the distinguishability
advantage equals p_acc times the distance between S_ABE and perfect ebits
tensored with its own E-marginal, and is bounded by 2 sqrt(2) eps^(1/3)
where eps is the family's verified detection-failure rate.

For the full authentication-plus-key-generation protocol, the composed ideal
side is built directly: the dummy run decides the verdict; on accept the ideal
channel delivers the message exactly and the ideal key box emits a fresh
uniform key; on reject everything is replaced by error symbols.

Everything is reported in the full 1-norm (maximum 2 between states).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

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
    ebit_ptp,
    run_qa_kg,
)
from .qmath import (
    DensityMatrix,
    StateVector,
    fidelity,
    max_entangled_vector,
    tensor,
    trace_norm,
)

ADVANTAGE_TOL = 1e-9


@dataclass(frozen=True)
class AdvantageReport:
    """Record of one real-vs-ideal experiment."""

    protocol: str
    attack: dict
    p_acc: float
    advantage: float
    bound: float
    epsilon_used: float
    passed: bool
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "attack": self.attack,
            "p_acc": self.p_acc,
            "advantage": self.advantage,
            "bound": self.bound,
            "epsilon_used": self.epsilon_used,
            "pass": self.passed,
            **({"extras": self.extras} if self.extras else {}),
        }


def make_report(protocol, attack_desc, p_acc, advantage, bound, epsilon, **extras):
    advantage = float(advantage)
    if not -ADVANTAGE_TOL <= advantage <= 2.0 + ADVANTAGE_TOL:
        raise ValueError(f"advantage {advantage} outside [0, 2]")
    return AdvantageReport(
        protocol=protocol,
        attack=attack_desc.to_json(),
        p_acc=float(p_acc),
        advantage=advantage,
        bound=float(bound),
        epsilon_used=float(epsilon),
        passed=bool(advantage <= bound + ADVANTAGE_TOL),
        extras=extras,
    )


def ebit_advantage_bound(eps: float) -> float:
    """2 sqrt(2) eps^(1/3), capped at the trace-distance maximum 2."""
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    return min(2.0, 2.0 * math.sqrt(2.0) * eps ** (1.0 / 3.0))


def _is_acc(rec: Record) -> bool:
    return record_get(rec, "verdict") == ACC


# ---------------------------------------------------------------------------
# entanglement generation: real and simulated-ideal final states
# ---------------------------------------------------------------------------


def ebit_output_real(family: PtcFamily, attack: AttackDescriptor) -> FinalState:
    """Final environment-visible state of the bilateral-syndrome protocol."""
    return ebit_ptp(family, attack)


def ebit_output_ideal(family: PtcFamily, attack: AttackDescriptor) -> FinalState:
    """Final state of simulator + ideal box, assembled from a dummy real run.

    The dummy run is statistically identical to the real one, so its accept
    probability and environment marginal are reused; the accept branch's
    payload is replaced by perfect ebits, and the reject branch is identical
    to the real protocol's by construction.
    """
    real = ebit_output_real(family, attack)
    dm = 1 << family.m
    phi = max_entangled_vector(dm)
    phi_mat = np.outer(phi, phi.conj())
    blocks: dict[Record, tuple] = {}
    for rec, block in real.blocks.items():
        if not _is_acc(rec):
            blocks[rec] = (block.registers, block.matrix.copy())
            continue
        names = [name for name, _ in block.registers]
        env_names = [name for name in names if name not in ("A", "B")]
        xi_e = _partial_trace_named(block.matrix, block.registers, keep=env_names)
        # registers sorted by name: A, B precede E and R
        mat = np.kron(phi_mat, xi_e)
        blocks[rec] = (block.registers, mat)
    return FinalState(blocks)


def _partial_trace_named(matrix: np.ndarray, registers, keep) -> np.ndarray:
    dims = [dim for _, dim in registers]
    names = [name for name, _ in registers]
    keep_idx = [i for i, name in enumerate(names) if name in set(keep)]
    drop_idx = [i for i in range(len(dims)) if i not in keep_idx]
    k = len(dims)
    tens = matrix.reshape(dims * 2)
    for ax in sorted(drop_idx, reverse=True):
        tens = np.trace(tens, axis1=ax, axis2=ax + k)
        k -= 1
    d = int(np.sqrt(tens.size))
    return tens.reshape(d, d)


def ebit_advantage(family: PtcFamily, attack: AttackDescriptor) -> AdvantageReport:
    """Distinguishability advantage of entanglement generation vs its ideal.

    Computed two ways: directly as the distance between the assembled final
    states, and through the factored form p_acc * ||xi_ABE - Phi (x) xi_E||_1.
    Both land in the report; they agree to numerical precision.
    """
    real = ebit_output_real(family, attack)
    ideal = ebit_output_ideal(family, attack)
    direct = real.distance(ideal)
    p_acc = real.weight_where(_is_acc)
    factored = 0.0
    fid = 1.0
    alpha = 0.0
    if p_acc > 0:
        acc = real.conditional_where(_is_acc)
        xi = acc.matrix / acc.weight
        ideal_acc = ideal.conditional_where(_is_acc)
        target = ideal_acc.matrix / ideal_acc.weight
        factored = p_acc * trace_norm(xi - target)
        regs = acc.registers
        fid = fidelity(DensityMatrix(xi, regs), DensityMatrix(target, regs))
        phi = max_entangled_vector(1 << family.m)
        xi_ab = _partial_trace_named(xi, regs, keep=("A", "B"))
        alpha = float(np.real(np.trace(xi_ab) - phi.conj() @ xi_ab @ phi))
    bound = ebit_advantage_bound(family.epsilon_verified)
    return make_report(
        "EBIT",
        attack,
        p_acc,
        direct,
        bound,
        family.epsilon_verified,
        advantage_factored=float(factored),
        fidelity_acc=float(fid),
        overlap_defect=float(alpha),
    )


def overlap_chain_checks(family: PtcFamily, attack: AttackDescriptor) -> dict:
    """The two analytic consequences used in the security argument.

    Returns the overlap defect d = Tr[S_AB (I - perfect ebits)], p_acc, the
    soundness product p_acc * d (bounded by the family epsilon), and the
    fidelity between the accept-conditional state and perfect ebits tensored
    with its E-marginal, which obeys F >= (1 - d)^2.
    """
    rep = ebit_advantage(family, attack)
    defect = rep.extras["overlap_defect"]
    return {
        "p_acc": rep.p_acc,
        "overlap_defect": defect,
        "soundness_product": rep.p_acc * defect,
        "fidelity": rep.extras["fidelity_acc"],
        "fidelity_floor": (1.0 - defect) ** 2,
        "advantage": rep.advantage,
        "advantage_factored": rep.extras["advantage_factored"],
    }


# ---------------------------------------------------------------------------
# exact worst-case soundness of the bilateral syndrome test
# ---------------------------------------------------------------------------


def ptp_soundness_exact(family: PtcFamily) -> float:
    """Exact worst case of Tr[ T(rho) ((I - Phi^m) (x) acc) ] over all inputs.

    The functional is linear in the 2n-qubit input rho, so the maximum equals
    the largest eigenvalue of the adjoint map applied to the accept projector:
        Omega = (1/|codes|) sum_{t,u} L_{t,u}^dag (I - Phi^m) L_{t,u}
    with L_{t,u} the accept-and-decode operator at code t and syndrome u.
    Cross-validates the mask-level detection predicate against the state-level
    soundness definition: the value matches the family's verified epsilon.
    """
    m, n, s = family.m, family.n, family.s
    if n > 4:
        raise ValueError("exact soundness is limited to n <= 4 (operator on 4^n dims)")
    dm, dt, dy = 1 << m, 1 << n, 1 << s
    phi = max_entangled_vector(dm)
    defect = np.eye(dm * dm, dtype=complex) - np.outer(phi, phi.conj())
    omega = np.zeros((dt * dt, dt * dt), dtype=complex)
    for enc in _family_encoders(family):
        dec = enc.decoder
        for u in range(dy):
            block = dec[u * dm : (u + 1) * dm, :]  # <u| D : 2^n -> 2^m
            l_op = np.kron(block.conj(), block)  # sender conjugate-basis, receiver plain
            omega += l_op.conj().T @ defect @ l_op
    omega /= len(family.codes)
    return float(np.linalg.eigvalsh((omega + omega.conj().T) / 2).max())


def soundness_functional(family: PtcFamily, rho: np.ndarray) -> float:
    """Tr[ T(rho) ((I - Phi^m) (x) acc) ] for one explicit 2n-qubit input."""
    m, n, s = family.m, family.n, family.s
    dm, dy = 1 << m, 1 << s
    phi = max_entangled_vector(dm)
    defect = np.eye(dm * dm, dtype=complex) - np.outer(phi, phi.conj())
    total = 0.0
    for enc in _family_encoders(family):
        dec = enc.decoder
        for u in range(dy):
            block = dec[u * dm : (u + 1) * dm, :]
            l_op = np.kron(block.conj(), block)
            out = l_op @ rho @ l_op.conj().T
            total += float(np.real(np.trace(defect @ out)))
    return total / len(family.codes)


def pauli_displaced_input(family: PtcFamily, error: PauliString) -> np.ndarray:
    """(I (x) E) Phi^n (I (x) E)^dag: the canonical family of worst-case inputs."""
    dt = 1 << family.n
    phi = max_entangled_vector(dt)
    op = np.kron(np.eye(dt, dtype=complex), pauli_matrix(error))
    vec = op @ phi
    return np.outer(vec, vec.conj())


# ---------------------------------------------------------------------------
# the composed experiment for authentication with key recycling
# ---------------------------------------------------------------------------


def run_qa_kg_ideal(
    input_state: StateVector,
    family: PtcFamily,
    attack: AttackDescriptor,
) -> FinalState:
    """Simulator + ideal channel + ideal key box, against the same attack.

    The simulator feeds the attack a dummy encoded ebit half (the message
    never leaves the ideal channel), decodes, and compares syndromes. On
    accept the message is delivered exactly and a fresh uniform key is
    emitted; on reject all outputs are error symbols. The final state lives
    on the same registers (R, M, E) as the real run.
    """
    m, s = family.m, family.s
    dm, dy = 1 << m, 1 << s
    if dict(input_state.registers).get("M") != dm:
        raise ValueError(f"input must carry an M register of dimension {dm}")
    encs = _family_encoders(family)
    iso, att_names, att_out = _attack_pieces(family, attack)
    dummy = StateVector(max_entangled_vector(dm), (("Ad", dm), ("B0", dm)))
    base = tensor(input_state, dummy)
    key_count = len(encs) * dy
    keys = [(x, z) for x in range(dm) for z in range(dm)]
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
    combined = combined.branch_uniform("key", keys, where=_is_acc)

    def plan(rec: Record):
        if _is_acc(rec):
            key = record_get(rec, "key")
            return (
                (("verdict", ACC), ("key_alice", key), ("key_bob", key)),
                ("Ad", "B"),
                (),
            )
        return (
            (("verdict", REJ), ("key_alice", ERR), ("key_bob", ERR)),
            ("Ad", "B", "M"),
            (),
        )

    return combined.finalize(plan)


def qa_kg_advantage(
    family: PtcFamily,
    input_state: StateVector,
    attack: AttackDescriptor,
) -> AdvantageReport:
    """Advantage of the real authentication-plus-key-generation run against
    the composed ideal, bounded by the same 2 sqrt(2) eps^(1/3)."""
    real = run_qa_kg(input_state, family, attack, back_communication=True)
    ideal = run_qa_kg_ideal(input_state, family, attack)
    advantage = real.distance(ideal)
    p_acc = real.weight_where(_is_acc)
    bound = ebit_advantage_bound(family.epsilon_verified)
    return make_report(
        "QA+KG",
        attack,
        p_acc,
        advantage,
        bound,
        family.epsilon_verified,
        p_acc_ideal=float(ideal.weight_where(_is_acc)),
    )


# ---------------------------------------------------------------------------
# composition accounting
# ---------------------------------------------------------------------------


class CompositionCycleError(ValueError):
    """The modular structure has a dependency cycle (a security deadlock)."""


@dataclass(frozen=True)
class CompositionTree:
    """Protocol nodes with per-node advantages and subroutine edges."""

    nodes: tuple[tuple[str, float], ...]
    edges: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> dict:
        return {
            "nodes": [{"id": nid, "epsilon": eps} for nid, eps in self.nodes],
            "edges": [list(edge) for edge in self.edges],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "CompositionTree":
        nodes = tuple((str(n["id"]), float(n["epsilon"])) for n in payload["nodes"])
        edges = tuple((str(a), str(b)) for a, b in payload.get("edges", ()))
        return cls(nodes, edges)


def compose(tree: CompositionTree) -> float:
    """Total advantage of a composed protocol: the sum over nodes.

    Raises CompositionCycleError if the subroutine graph is cyclic; advantages
    only add up over a proper (acyclic) modular structure.
    """
    ids = [nid for nid, _ in tree.nodes]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate node ids")
    adjacency: dict[str, list[str]] = {nid: [] for nid in ids}
    for parent, child in tree.edges:
        if parent not in adjacency or child not in adjacency:
            raise ValueError(f"edge ({parent}, {child}) references unknown node")
        adjacency[parent].append(child)
    state: dict[str, int] = {}

    def visit(node: str):
        if state.get(node) == 1:
            raise CompositionCycleError(f"cycle through {node!r}")
        if state.get(node) == 2:
            return
        state[node] = 1
        for nxt in adjacency[node]:
            visit(nxt)
        state[node] = 2

    for nid in ids:
        visit(nid)
    return float(sum(eps for _, eps in tree.nodes))


def embed_final_state(final: FinalState, b_error_dim: bool = True) -> DensityMatrix:
    """Dense single-matrix embedding of an entanglement-run final state.

    The verdict becomes an explicit two-level register V and the error symbol
    on B becomes an extra orthogonal level, so accept blocks live on
    A (x) B (x) E (x) V and reject blocks on the B = err level. Mostly useful
    for spot-checking that the per-record distance equals the distance of the
    embedded block-diagonal matrices.
    """
    records = final.records()
    acc_block = next((final.blocks[r] for r in records if _is_acc(r)), None)
    rej_block = next((final.blocks[r] for r in records if not _is_acc(r)), None)
    if acc_block is None:
        raise ValueError("need at least an accept block to infer dimensions")
    regs = acc_block.registers
    names = [name for name, _ in regs]
    dims = {name: dim for name, dim in regs}
    da, db = dims["A"], dims["B"]
    env_names = [nm for nm in names if nm not in ("A", "B")]
    de = int(np.prod([dims[nm] for nm in env_names])) if env_names else 1
    db_ext = db + 1 if b_error_dim else db
    dim = da * db_ext * de * 2
    out = np.zeros((dim, dim), dtype=complex)

    def embed_abe(mat: np.ndarray, v: int) -> np.ndarray:
        tens = mat.reshape(da, db, de, da, db, de)
        big = np.zeros((da, db_ext, de, 2, da, db_ext, de, 2), dtype=complex)
        big[:, :db, :, v, :, :db, :, v] = tens
        return big.reshape(dim, dim)

    if acc_block is not None:
        out += embed_abe(acc_block.matrix, 0)
    if rej_block is not None:
        # reject: A (x) err_B (x) env, err is the extra B level
        mat = rej_block.matrix  # over (A, env) sorted as A first
        tens = mat.reshape(da, de, da, de)
        big = np.zeros((da, db_ext, de, 2, da, db_ext, de, 2), dtype=complex)
        big[:, db, :, 1, :, db, :, 1] = tens
        out += big.reshape(dim, dim)
    regs_out = (("A", da), ("Bext", db_ext), ("Env", de), ("V", 2))
    return DensityMatrix(out, regs_out)
