import cmath

import numpy as np
import pytest

from functional_rep import make_family, solve_prest
from hierarchy_spectral import CouplingSet
from numerics_core import QParams
from schemas import RawBoundarySpec
from xxz_chain import BoundaryParams

CHI = (0.3, 0.5, -0.7, 1.2)
CHI6 = CHI + (0.8, -1.5)


@pytest.fixture
def q_real():
    return QParams.from_phi(cmath.log(1.3))


@pytest.fixture
def family(q_real):
    return make_family(1, CHI, (), q_real)


@pytest.fixture
def family_n2(q_real):
    # xi equal to two of the chi: the reducible N=2 family
    return make_family(2, CHI6, (0.8, -1.5), q_real)


@pytest.fixture
def prest_family(q_real):
    # xi solved from the two parameter relations only
    xi = solve_prest(CHI6)[0]
    return make_family(2, CHI6, xi, q_real, check="prest")


@pytest.fixture
def couplings():
    return CouplingSet.create(
        kappa=1.0,
        kappa_star=0.05,
        kappa_plus=0.002 * 0.4,
        kappa_minus=0.003 * -0.7,
        k_plus=0.4,
        k_minus=-0.7,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def q_chain():
    return QParams.from_phi(0.3 + 0.2j)


@pytest.fixture
def boundary(q_chain):
    return BoundaryParams.create(
        alpha=0.7 + 0.4j,
        alpha_star=-0.2 + 0.5j,
        theta=0.6 + 0.1j,
        q=q_chain,
        kappa=0.8 + 0.1j,
        kappa_star=0.3 - 0.2j,
        kappa_plus=0.2 + 0.1j,
        kappa_minus=-0.15 + 0.05j,
    )


@pytest.fixture
def q_unimodular():
    return QParams.from_phi(0.7j)


@pytest.fixture
def raw_boundary():
    return RawBoundarySpec(c00=0.8, c01=0.3, c00_tilde=0.5, c01_tilde=-0.4, theta=0.9, theta_tilde=0.2)
