"""Dense complex linear algebra over named multi-qubit (or multi-level) registers.

Everything here operates on plain numpy arrays wrapped in light value types that
carry a register layout. Conventions used throughout the package:

- A register layout is an ordered tuple ``((name, dim), ...)``. The flat index
  of a state runs with the FIRST register most significant, i.e. reshaping an
  amplitude vector to ``dims`` in register order gives one axis per register
  (C order). Within a multi-qubit register, basis label ``b`` has qubit ``j``
  equal to bit ``j`` of ``b`` (qubit 0 is the least significant bit).
- ``trace_distance`` returns the full Schatten 1-norm of the difference
  (maximum 2 for a pair of states), not half of it.
- ``fidelity`` uses the squared-overlap convention
  ``F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``, which equals
  ``|<psi|phi>|**2`` on pure states.

All values are immutable after construction; the operations are pure functions,
so everything is safe to hand to worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

# Tolerance hierarchy: exact algebraic identities are held to ATOL_EXACT,
# accumulated protocol pipelines to ATOL_PIPELINE. PSD checks tolerate
# eigenvalues down to -PSD_FLOOR and clip when constructing states.
ATOL_EXACT = 1e-12
ATOL_PIPELINE = 1e-9
PSD_FLOOR = 1e-10

Registers = tuple[tuple[str, int], ...]


class RegisterError(ValueError):
    """Raised for unknown, duplicate, or dimension-mismatched register names."""


def as_registers(registers: Iterable) -> Registers:
    regs = tuple((str(name), int(dim)) for name, dim in registers)
    names = [name for name, _ in regs]
    if len(set(names)) != len(names):
        raise RegisterError(f"duplicate register name in {names}")
    for name, dim in regs:
        if dim < 1:
            raise RegisterError(f"register {name!r} has dimension {dim}")
    return regs


def reg_names(registers: Registers) -> tuple[str, ...]:
    return tuple(name for name, _ in registers)


def reg_dims(registers: Registers) -> tuple[int, ...]:
    return tuple(dim for _, dim in registers)


def total_dim(registers: Registers) -> int:
    out = 1
    for _, dim in registers:
        out *= dim
    return out


def reg_positions(registers: Registers, names: Sequence[str]) -> tuple[int, ...]:
    table = {name: i for i, (name, _) in enumerate(registers)}
    try:
        return tuple(table[name] for name in names)
    except KeyError as exc:
        raise RegisterError(f"unknown register {exc.args[0]!r}; have {reg_names(registers)}") from None


@dataclass(frozen=True)
class StateVector:
    """A pure state: complex amplitudes over an ordered set of named registers."""

    amplitudes: np.ndarray
    registers: Registers

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        regs = as_registers(self.registers)
        if amps.size != total_dim(regs):
            raise RegisterError(
                f"amplitude length {amps.size} != product of register dims {total_dim(regs)}"
            )
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > 1e-8:
            raise ValueError(f"state vector squared norm {norm2} is not 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "registers", regs)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.registers)


@dataclass(frozen=True)
class DensityMatrix:
    """A mixed state held as a dense matrix over named registers.

    The constructor enforces Hermiticity, positivity down to -PSD_FLOOR
    (tiny negative eigenvalues are tolerated, not clipped), and unit trace.
    """

    matrix: np.ndarray
    registers: Registers

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        regs = as_registers(self.registers)
        d = total_dim(regs)
        if mat.shape != (d, d):
            raise RegisterError(f"matrix shape {mat.shape} != register dims {d}x{d}")
        if not np.allclose(mat, mat.conj().T, atol=1e-8):
            raise ValueError("density matrix is not Hermitian")
        eigs = np.linalg.eigvalsh((mat + mat.conj().T) / 2)
        if eigs.min() < -PSD_FLOOR:
            raise ValueError(f"density matrix has eigenvalue {eigs.min()} below -{PSD_FLOOR}")
        tr = float(mat.trace().real)
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"density matrix trace {tr} is not 1")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "registers", regs)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class QuantumChannel:
    """A completely positive trace-preserving map in operator-sum form.

    ``kraus_ops`` all share one (output_dim, input_dim) shape and satisfy
    sum(K^dag K) = identity to ATOL_EXACT. ``dilation()`` exposes the
    corresponding isometry V : input -> output (x) env with env dimension
    equal to the number of Kraus operators, so the retained system held by
    whoever applies the channel is always explicit.
    """

    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators disagree on shape")
        comp = sum(k.conj().T @ k for k in ops)
        if not np.allclose(comp, np.eye(shape[1]), atol=ATOL_EXACT * 10):
            raise ValueError("Kraus operators violate completeness sum(K^dag K) = I")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def input_dim(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    @property
    def env_dim(self) -> int:
        return len(self.kraus_ops)

    def dilation(self) -> np.ndarray:
        """Isometry V with row index (output, env), env least significant."""
        dout, din = self.kraus_ops[0].shape
        k = len(self.kraus_ops)
        v = np.zeros((dout * k, din), dtype=complex)
        for e, op in enumerate(self.kraus_ops):
            v[e::k, :] = op
        return v

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus_ops)


@dataclass(frozen=True)
class Povm:
    """A finite measurement: positive elements summing to the identity."""

    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        elems = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        d = elems[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for e in elems:
            if e.shape != (d, d):
                raise ValueError("POVM elements disagree on dimension")
            if np.linalg.eigvalsh((e + e.conj().T) / 2).min() < -PSD_FLOOR:
                raise ValueError("POVM element is not positive semidefinite")
            total += e
        if not np.allclose(total, np.eye(d), atol=1e-10):
            raise ValueError("POVM elements do not sum to the identity")
        for e in elems:
            e.setflags(write=False)
        object.__setattr__(self, "elements", elems)


# ---------------------------------------------------------------------------
# basic operations
# ---------------------------------------------------------------------------


def tensor(a, b):
    """Tensor product of two states, concatenating their register lists.

    Register names must be disjoint. Works for StateVector (x) StateVector and
    DensityMatrix (x) DensityMatrix.
    """
    if set(reg_names(a.registers)) & set(reg_names(b.registers)):
        raise RegisterError(
            f"register names overlap: {reg_names(a.registers)} vs {reg_names(b.registers)}"
        )
    regs = a.registers + b.registers
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), regs)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix), regs)
    raise TypeError("tensor expects two StateVector or two DensityMatrix values")


def _trace_out_axes(matrix: np.ndarray, dims: Sequence[int], drop: Sequence[int]) -> np.ndarray:
    """Partial trace of a square matrix over the axes listed in ``drop``."""
    k = len(dims)
    tens = matrix.reshape(tuple(dims) * 2)
    for ax in sorted(drop, reverse=True):
        tens = np.trace(tens, axis1=ax, axis2=ax + k)
        k -= 1
    d = int(np.sqrt(tens.size))
    return tens.reshape(d, d)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Reduce ``rho`` to the named registers, preserving their relative order."""
    keep = set(keep)
    unknown = keep - set(reg_names(rho.registers))
    if unknown:
        raise RegisterError(f"unknown register(s) {sorted(unknown)}")
    drop = [i for i, (name, _) in enumerate(rho.registers) if name not in keep]
    new_regs = tuple(r for r in rho.registers if r[0] in keep)
    if not new_regs:
        raise RegisterError("cannot trace out every register")
    mat = _trace_out_axes(rho.matrix, reg_dims(rho.registers), drop)
    return DensityMatrix(mat, new_regs)


def trace_norm(delta: np.ndarray) -> float:
    """Sum of singular values (Schatten 1-norm)."""
    return float(np.linalg.svd(delta, compute_uv=False).sum())


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Full 1-norm distance ||rho - sigma||_1 between two states.

    Note the convention: this is the whole Schatten 1-norm, so orthogonal pure
    states are at distance 2. All security bounds in this package are stated in
    this convention.
    """
    if rho.dim != sigma.dim:
        raise RegisterError(f"dimension mismatch {rho.dim} vs {sigma.dim}")
    return trace_norm(rho.matrix - sigma.matrix)


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Matrix square root of a Hermitian PSD matrix via eigendecomposition.

    Eigenvalues below zero (roundoff) are clipped to zero.
    """
    eigs, vecs = np.linalg.eigh((mat + mat.conj().T) / 2)
    eigs = np.clip(eigs, 0.0, None)
    return (vecs * np.sqrt(eigs)) @ vecs.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Squared fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1].

    Equals the maximum squared overlap over purifications of the two states.
    """
    if rho.dim != sigma.dim:
        raise RegisterError(f"dimension mismatch {rho.dim} vs {sigma.dim}")
    s = psd_sqrt(rho.matrix)
    inner = s @ sigma.matrix @ s
    eigs = np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None)
    val = float(np.sqrt(eigs).sum() ** 2)
    return min(val, 1.0) if val < 1.0 + 1e-9 else val


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(a, dtype=complex), 2))


def apply_channel(ch: QuantumChannel, rho: DensityMatrix, targets: Sequence[str]) -> DensityMatrix:
    """Operator-sum action of ``ch`` on the named target registers.

    The channel input dimension must equal the product of the target register
    dimensions, taken in the order given by ``targets`` (first name most
    significant). Registers not targeted are untouched.
    """
    targets = tuple(targets)
    pos = reg_positions(rho.registers, targets)
    dims = reg_dims(rho.registers)
    t_dim = int(np.prod([dims[p] for p in pos]))
    if ch.input_dim != t_dim:
        raise RegisterError(f"channel input dim {ch.input_dim} != target dims {t_dim}")
    if ch.output_dim != ch.input_dim:
        raise RegisterError("apply_channel keeps register shapes; need a square channel")
    k = len(dims)
    tens = rho.matrix.reshape(dims * 2)
    out = np.zeros_like(tens)
    t_dims = tuple(dims[p] for p in pos)
    for op in ch.kraus_ops:
        op_t = op.reshape(t_dims + t_dims)
        left = np.tensordot(op_t, tens, axes=(range(len(pos), 2 * len(pos)), pos))
        left = np.moveaxis(left, range(len(pos)), pos)
        right = np.tensordot(
            left, op_t.conj(), axes=([k + p for p in pos], list(range(len(pos), 2 * len(pos))))
        )
        right = np.moveaxis(right, range(2 * k - len(pos), 2 * k), [k + p for p in pos])
        out += right
    d = rho.dim
    return DensityMatrix(out.reshape(d, d), rho.registers)


def dilate(ch: QuantumChannel) -> tuple[np.ndarray, int]:
    """Stinespring isometry and environment dimension of a channel.

    Returns (V, env_dim) where V maps input -> output (x) env and tracing the
    env register out of V rho V^dag reproduces the operator-sum action.
    """
    return ch.dilation(), ch.env_dim


# ---------------------------------------------------------------------------
# transpose-trick identities
# ---------------------------------------------------------------------------


def _unnormalized_max_entangled(d: int) -> np.ndarray:
    vec = np.zeros(d * d, dtype=complex)
    vec[:: d + 1] = 1.0
    return vec


def transpose_trick_residual(m: np.ndarray) -> float:
    """Residual of relocating a matrix across an unnormalized entangled pair.

    For M of shape (d2, d1), computes the norm of
    (M^T (x) I) sum_j |j>|j> - (I (x) M) sum_i |i>|i>,
    which is zero for every matrix. Used as a machine check of the identity
    that powers the code-based / protocol-based entanglement equivalence.
    """
    m = np.asarray(m, dtype=complex)
    d2, d1 = m.shape
    lhs = np.kron(m.T, np.eye(d2)) @ _unnormalized_max_entangled(d2)
    rhs = np.kron(np.eye(d1), m) @ _unnormalized_max_entangled(d1)
    return float(np.linalg.norm(lhs - rhs))


def encoder_postselection_residual(u: np.ndarray, y: int, d: int, d2: int) -> float:
    """Residual of trading an encoder for a postselected transposed decoder.

    ``u`` is unitary on a (d * d2)-dimensional space interpreted as two
    subsystems of dimensions d and d2. The left-hand side applies u to
    |y> (x) (one half of an unnormalized d2-dim entangled pair); the
    right-hand side postselects <y| after the transposed u acting on half of a
    (d*d2)-dim entangled pair. The two are equal for every unitary and every
    basis index y < d; this is the step that lets a secretly keyed encoder be
    re-read as a syndrome measurement with postselection.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (d * d2, d * d2):
        raise ValueError(f"u must be {(d * d2, d * d2)}, got {u.shape}")
    if not np.allclose(u.conj().T @ u, np.eye(d * d2), atol=1e-10):
        raise ValueError("u is not unitary")
    if not 0 <= y < d:
        raise ValueError(f"basis index y={y} out of range for dimension {d}")

    ket_y = np.zeros(d, dtype=complex)
    ket_y[y] = 1.0
    # systems (1, 2, 3) with dims (d, d2, d2)
    lhs = np.kron(u, np.eye(d2)) @ np.kron(ket_y, _unnormalized_max_entangled(d2))
    # systems (1, 2, 4, 3): project <y| on 4 after u^T acting on (4, 3)
    big = _unnormalized_max_entangled(d * d2)  # on (12), (43)
    bra_y_ut = np.kron(ket_y.conj(), np.eye(d2)) @ u.T  # maps (4,3) -> (3)
    rhs = np.kron(np.eye(d * d2), bra_y_ut) @ big
    return float(np.linalg.norm(lhs - rhs))


# ---------------------------------------------------------------------------
# random test objects (deterministic under a seeded Generator)
# ---------------------------------------------------------------------------


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix with phase fixing."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    mat = g @ g.conj().T
    return mat / mat.trace()


def random_channel(dim: int, kraus_rank: int, rng: np.random.Generator) -> QuantumChannel:
    """Random channel sampled by truncating a Haar isometry into Kraus blocks."""
    big = haar_unitary(dim * kraus_rank, rng)
    iso = big[:, :dim]  # isometry dim -> dim * kraus_rank, row index (out, env)
    ops = [iso[e::kraus_rank, :] for e in range(kraus_rank)]
    return QuantumChannel(tuple(ops))


def basis_state(dim: int, index: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=complex)
    vec[index] = 1.0
    return vec


def max_entangled_vector(d: int) -> np.ndarray:
    """Normalized d-dim maximally entangled pair, index order (left, right)."""
    return _unnormalized_max_entangled(d) / np.sqrt(d)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)
