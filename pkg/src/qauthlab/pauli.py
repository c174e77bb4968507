"""Symplectic-binary Pauli group algebra on n qubits, plus dense realizations.

An n-qubit Pauli operator is stored as two n-bit masks (x, z) and a phase that
is a power of i. The mask pair (x_j, z_j) for qubit j selects the single-qubit
factor

    s_00 = I,   s_10 = [[0,1],[1,0]],   s_01 = [[1,0],[0,-1]],   s_11 = s_10 s_01,

so the bare operator is X^x Z^z qubit-wise and s_11 equals the product X Z
(not the Hermitian Y; use ``hermitian_pauli`` when a Hermitian representative
is needed, e.g. for stabilizer generators). Bit j of a mask addresses qubit j,
and qubit 0 is the least significant bit of a basis label.

Masks are plain Python ints, so brute-force loops over all 4^n errors stay
cheap for the n <= 6 regime this package targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .qmath import kron_all

_SINGLE = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1], [1, 0]], dtype=complex),  # X @ Z
}

_PHASES = (1, 1j, -1, -1j)


def _parity(mask: int) -> int:
    return mask.bit_count() & 1


@dataclass(frozen=True)
class PauliString:
    """n-qubit Pauli operator: phase i^phase_exp times X^x Z^z qubit-wise."""

    n: int
    x: int
    z: int
    phase_exp: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if self.x >> self.n or self.z >> self.n:
            raise ValueError(f"mask exceeds {self.n} qubits")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exp]

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_hermitian(self) -> bool:
        # X^x Z^z is Hermitian iff the XZ overlap is even; an odd overlap is
        # repaired by a +-i phase.
        return (self.phase_exp + (self.x & self.z).bit_count()) % 2 == 0

    def to_text(self) -> str:
        """Mask text form "xz:<x bits>|<z bits>", qubit j at character j."""
        xs = "".join(str((self.x >> j) & 1) for j in range(self.n))
        zs = "".join(str((self.z >> j) & 1) for j in range(self.n))
        return f"xz:{xs}|{zs}"

    @classmethod
    def from_text(cls, text: str, phase_exp: int = 0) -> "PauliString":
        if not text.startswith("xz:") or "|" not in text:
            raise ValueError(f"bad Pauli text form {text!r}")
        xs, zs = text[3:].split("|", 1)
        if len(xs) != len(zs) or not xs:
            raise ValueError(f"bad Pauli text form {text!r}")
        x = int(xs[::-1], 2)
        z = int(zs[::-1], 2)
        return cls(len(xs), x, z, phase_exp)


def identity(n: int) -> PauliString:
    return PauliString(n, 0, 0)


def hermitian_pauli(n: int, x: int, z: int, sign: int = +1) -> PauliString:
    """The Hermitian operator +-(i^|x&z|) X^x Z^z with the given overall sign."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    exp = (x & z).bit_count() % 4
    if sign == -1:
        exp += 2
    return PauliString(n, x, z, exp)


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense 2^n x 2^n realization; qubit 0 is the least significant bit."""
    factors = [
        _SINGLE[((p.x >> j) & 1, (p.z >> j) & 1)] for j in range(p.n - 1, -1, -1)
    ]
    return p.phase * kron_all(factors)


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    """Group product; agrees with dense matrix multiplication including phase.

    Per qubit, (X^a Z^b)(X^c Z^d) = (-1)^(b c) X^(a xor c) Z^(b xor d), so the
    accumulated phase is (-1)^|z_p & x_q| on top of the input phases.
    """
    if p.n != q.n:
        raise ValueError(f"length mismatch {p.n} vs {q.n}")
    exp = p.phase_exp + q.phase_exp + 2 * _parity(p.z & q.x)
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z, exp)


def symplectic_product(p: PauliString, q: PauliString) -> int:
    """0 if the operators commute, 1 if they anticommute (phases irrelevant)."""
    if p.n != q.n:
        raise ValueError(f"length mismatch {p.n} vs {q.n}")
    return _parity(p.x & q.z) ^ _parity(p.z & q.x)


def commutes(p: PauliString, q: PauliString) -> bool:
    return symplectic_product(p, q) == 0


def enumerate_paulis(n: int, include_identity: bool = True) -> Iterator[PauliString]:
    """All 4^n phase-free Pauli strings on n qubits, identity optional.

    Iteration order is deterministic: x-major, z-minor.
    """
    for x in range(1 << n):
        for z in range(1 << n):
            if not include_identity and x == 0 and z == 0:
                continue
            yield PauliString(n, x, z)
