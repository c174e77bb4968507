import numpy as np
import pytest

from qauthlab.codes import PtcFamily, StabilizerCode, search_ptc
from qauthlab.pauli import hermitian_pauli


@pytest.fixture(scope="session")
def family_s1():
    """The XX / ZZ / YY triple: m=1, s=1, worst undetected fraction 2/3."""
    codes = tuple(
        StabilizerCode((hermitian_pauli(2, x, z),)) for x, z in ((3, 0), (0, 3), (3, 3))
    )
    return PtcFamily(codes, epsilon_verified=2.0 / 3.0)


@pytest.fixture(scope="session")
def family_s2():
    fam = search_ptc(1, 2, target_eps=0.6, budget=60, seed=1)
    assert fam.met_target
    return fam


@pytest.fixture(scope="session")
def family_s3():
    fam = search_ptc(1, 3, target_eps=8.0 / 27.0, budget=120, seed=1)
    assert fam.met_target
    return fam


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)
