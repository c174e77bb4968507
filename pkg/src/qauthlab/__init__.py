"""qauthlab: an executable laboratory for quantum message authentication with
key recycling.

The package simulates the full protocol family at small qubit counts (Pauli
one-time-pad encryption, purity-test codes and protocols, teleportation-based
twins, entanglement generation over insecure channels, and the classical
Wegman-Carter counterpart) and verifies the exact circuit equivalences and
composable-security bounds by direct state computation and brute force.
"""

__version__ = "0.1.0"

from . import (
    adversary,
    approx_psqa,
    classical_wc,
    codes,
    hybrid,
    pauli,
    protocols,
    qmath,
    ucharness,
)

__all__ = [
    "__version__",
    "adversary",
    "approx_psqa",
    "classical_wc",
    "codes",
    "hybrid",
    "pauli",
    "protocols",
    "qmath",
    "ucharness",
]
