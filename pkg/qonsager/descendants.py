"""The descendants W_-1 and W_2 of the pair (W0, W1).

    W_-1 = -(1/rho)  [W0, [W0, W1]_q]_{q^-1} + W1
    W_2  = -(1/rho*) [W1, [W1, W0]_q]_{q^-1} + W0

W_-1 commutes with W0 and W_2 with W1. In the functional representation W_2 is
multiplication by nu_2 and W_-1 is again a q-difference operator, with
phibar_-1 / phi_-1 = phibar / phi.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from config import settings
from exceptions import DomainError, PreconditionError, RejectedInputError
from functional_rep import QDiffOperator, SymLaurentPoly, TridiagFamily
from numerics_core import QParams, ResidualReport, block_norms, commutator, linalg_guard, q_commutator
from polynomial_eigenbasis import build_psi

logger = logging.getLogger(__name__)


def _check_rho(value: complex, name: str) -> None:
    if abs(value) < settings.POLE_GUARD:
        raise PreconditionError(f"{name} must be nonzero to form the descendants", **{name: value})


def descendants_from_matrices(
    W0: np.ndarray, W1: np.ndarray, rho: complex, rho_star: complex, q: QParams
) -> Tuple[np.ndarray, np.ndarray]:
    _check_rho(rho, "rho")
    _check_rho(rho_star, "rho_star")
    qi = q.inverse()
    w_minus1 = -q_commutator(W0, q_commutator(W0, W1, q), qi) / rho + W1
    w_2 = -q_commutator(W1, q_commutator(W1, W0, q), qi) / rho_star + W0
    return w_minus1, w_2


def _relative_commutator(X: np.ndarray, Y: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(X)) * float(np.linalg.norm(Y)), 1e-300)
    return float(np.linalg.norm(commutator(X, Y))) / scale


@dataclass(frozen=True)
class MatrixDescendants:
    W0: np.ndarray
    W1: np.ndarray
    w_minus1: np.ndarray
    w_2: np.ndarray

    def commutation(self) -> Tuple[float, float]:
        """Relative ||[W0, W_-1]|| and ||[W1, W_2]||."""
        return _relative_commutator(self.W0, self.w_minus1), _relative_commutator(self.W1, self.w_2)

    def off_diagonal(self, V: np.ndarray, sizes) -> float:
        """Largest off-diagonal block of W_-1 on the eigenbasis V of W0, relative to the whole."""
        with linalg_guard("change to the W0 eigenbasis"):
            M = np.linalg.solve(V, self.w_minus1 @ V)
        norms = block_norms(M, sizes)
        off = norms - np.diag(np.diag(norms))
        return float(off.max()) / max(float(np.linalg.norm(M)), 1e-300)


def build_descendants_matrix(ops) -> MatrixDescendants:
    """Descendants of a chain's generators; ``ops`` is an xxz_chain.ChainOperators."""
    w_minus1, w_2 = descendants_from_matrices(ops.W0, ops.W1, ops.rho, ops.rho, ops.q)
    return MatrixDescendants(W0=ops.W0, W1=ops.W1, w_minus1=w_minus1, w_2=w_2)


@dataclass(frozen=True)
class FunctionalDescendants:
    """Coefficients of W_-1 and W_2 on the functional representation of ``fam``."""

    fam: TridiagFamily

    def __post_init__(self):
        _check_rho(self.fam.rho, "rho")
        _check_rho(self.fam.rho_star, "rho_star")

    def _q(self):
        return self.fam.q.q, self.fam.q.q_half

    def _s(self, z):
        q, _ = self._q()
        mu = self.fam.mu
        return mu(q * z) * ((q - q * q) * z + (1 / q - q ** -2) / z) + mu(z) * ((1 - 1 / q) * z + (1 - q) / z)

    def _s_bar(self, z):
        q, _ = self._q()
        mu = self.fam.mu
        return mu(z / q) * ((1 / q - q ** -2) * z + (q - q * q) / z) + mu(z) * ((1 - q) * z + (1 - 1 / q) / z)

    def phi_m1(self, z):
        return -self._s(z) * self.fam.phi(z) / self.fam.rho

    def phibar_m1(self, z):
        return -self._s_bar(z) * self.fam.phibar(z) / self.fam.rho

    def mu_m1(self, z):
        q, c = self._q()
        fam = self.fam
        x = z + 1 / z
        k0 = (q * q - 1) / c
        mu = fam.mu(z)
        T = k0 * (
            fam.phi(z) * fam.phibar(q * z) * (c ** -3 / z - c * z)
            + fam.phibar(z) * fam.phi(z / q) * (c ** -3 * z - c / z)
        ) - (c - 1 / c) ** 2 * mu * mu * x
        return -T / fam.rho + x

    def nu2(self, z):
        _, c = self._q()
        x = z + 1 / z
        return (1 - x * x / (c + 1 / c) ** 2) * self.fam.mu(z)

    def operator(self) -> QDiffOperator:
        return QDiffOperator(phi_fn=self.phi_m1, phibar_fn=self.phibar_m1, mu_fn=self.mu_m1, q=self.fam.q)

    def apply_w_minus1(self, f: Callable, z):
        return self.operator().apply(f, z)

    def apply_w2(self, f: Callable, z):
        return self.nu2(z) * f(z)


DescendantOps = Union[MatrixDescendants, FunctionalDescendants]


def build_descendants_functional(fam: TridiagFamily) -> FunctionalDescendants:
    return FunctionalDescendants(fam)


# Direct bracket evaluation, used as the reference for the closed forms

def _w0_act(fam: TridiagFamily, f: Callable) -> Callable:
    return fam.operator().act(f)


def _x_act(f: Callable) -> Callable:
    return lambda z: (z + 1 / z) * f(z)


def _bracket(A: Callable, B: Callable, f: Callable, s: complex) -> Callable:
    """[A, B]_s f = s^{1/2} A(B f) - s^{-1/2} B(A f), with s^{1/2} passed directly."""
    return lambda z: s * A(B(f))(z) - B(A(f))(z) / s


def direct_w_minus1(fam: TridiagFamily, f: Callable, z):
    _check_rho(fam.rho, "rho")
    c = fam.q.q_half
    W0 = lambda g: _w0_act(fam, g)
    inner = lambda g: _bracket(W0, _x_act, g, c)
    outer = _bracket(W0, inner, f, 1 / c)
    return -outer(z) / fam.rho + _x_act(f)(z)


def direct_w2(fam: TridiagFamily, f: Callable, z):
    _check_rho(fam.rho_star, "rho_star")
    c = fam.q.q_half
    W0 = lambda g: _w0_act(fam, g)
    inner = lambda g: _bracket(_x_act, W0, g, c)
    outer = _bracket(_x_act, inner, f, 1 / c)
    return -outer(z) / fam.rho_star + W0(f)(z)


def ratio_identity_check(fam: TridiagFamily, z, tolerance: float = 1e-10) -> ResidualReport:
    """|phibar_-1/phi_-1 - phibar/phi| over the points where phi_-1 is safely nonzero."""
    desc = FunctionalDescendants(fam)
    diffs = []
    for w in np.atleast_1d(np.asarray(z, dtype=complex)):
        try:
            p = desc.phi_m1(w)
            if abs(p) < 1e-8:
                continue
            ref = fam.phibar(w) / fam.phi(w)
            diffs.append((desc.phibar_m1(w) / p - ref) / max(1.0, abs(ref)))
        except DomainError:
            continue
    if not diffs:
        raise DomainError("every sample point was excluded from the ratio check")
    return ResidualReport.of(np.array(diffs), tolerance)


def descendant_eigenvalue(desc: FunctionalDescendants, psi: SymLaurentPoly, z) -> Tuple[complex, float]:
    """Rayleigh quotient of W_-1 on psi over sample points, and the relative eigen-residual."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    v = np.asarray(psi(z))
    w = np.asarray(desc.apply_w_minus1(psi, z))
    value = complex(np.vdot(v, w) / np.vdot(v, v))
    residual = float(np.max(np.abs(w - value * v))) / max(float(np.max(np.abs(w))), 1e-300)
    return value, residual


def w_minus1_eigen_check(fam: TridiagFamily, max_degree: int, z) -> List[Tuple[int, complex, float]]:
    """(n, eigenvalue, residual) for psi_0..psi_max_degree."""
    if max_degree < 0 or max_degree > settings.DEGREE_CAP:
        raise RejectedInputError(f"degree must lie in 0..{settings.DEGREE_CAP}", max_degree=max_degree)
    desc = FunctionalDescendants(fam)
    out = []
    for n in range(max_degree + 1):
        state = build_psi(fam, n)[0]
        value, residual = descendant_eigenvalue(desc, state.polynomial(), z)
        out.append((n, value, residual))
    return out
