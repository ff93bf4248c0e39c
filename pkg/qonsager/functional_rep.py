"""The infinite-dimensional functional representation.

W0 acts on functions of z as phi(z)eta + phibar(z)eta^-1 + mu(z), where eta
shifts z -> qz, and W1 multiplies by x = z + 1/z. The rational family is

    phi(z) = prod(1 - chi_k z) / ((1 - z^2)(1 - q z^2) prod(1 - xi_k z)),
    phibar(z) = phi(1/z),  mu = d - phi - phibar.

Symmetric polynomials are stored in the basis b_0 = 1, b_k = z^k + z^-k, which
is 2 T_k(x/2); numpy's Chebyshev routines do the arithmetic.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import numpy.polynomial.chebyshev as cheb
import numpy.polynomial.polynomial as P
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict, model_validator

from config import settings
from exceptions import (
    ConvergenceError,
    DomainError,
    FamilyConstraintError,
    InterpolationError,
    RejectedInputError,
    UnsupportedFamilyError,
)
from numerics_core import QParams, ResidualReport, linalg_guard, tridiag_residual
from schemas import Complex

logger = logging.getLogger(__name__)


# Laurent and rational functions

@dataclass(frozen=True)
class LaurentPoly:
    """Finite sum of c_k z^k, stored without zero coefficients."""

    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(k): complex(v) for k, v in self.coeffs.items() if v != 0}
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def constant(cls, c: complex) -> "LaurentPoly":
        return cls({0: c})

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for k, c in self.coeffs.items():
            out = out + c * z ** k
        return out[()]

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return LaurentPoly(out)

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + (-other)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        out: Dict[int, complex] = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                out[i + j] = out.get(i + j, 0) + a * b
        return LaurentPoly(out)

    def inverted(self) -> "LaurentPoly":
        """f(1/z)"""
        return LaurentPoly({-k: c for k, c in self.coeffs.items()})

    def shifted(self, s: complex) -> "LaurentPoly":
        """f(s z)"""
        return LaurentPoly({k: c * s ** k for k, c in self.coeffs.items()})


def linear_product(roots: Sequence[complex]) -> LaurentPoly:
    """prod(1 - r z)"""
    out = LaurentPoly.constant(1.0)
    for r in roots:
        out = out * LaurentPoly({0: 1.0, 1: -r})
    return out


@dataclass(frozen=True)
class RationalFunc:
    numerator: LaurentPoly
    denominator: LaurentPoly

    def __post_init__(self):
        if self.denominator.is_zero():
            raise RejectedInputError("denominator is identically zero")

    def __call__(self, z, guard: Optional[float] = None):
        guard = settings.POLE_GUARD if guard is None else guard
        den = np.asarray(self.denominator(z))
        if np.any(np.abs(den) < guard):
            raise DomainError("evaluation point too close to a pole", z=_first(z))
        return (np.asarray(self.numerator(z)) / den)[()]

    def inverted(self) -> "RationalFunc":
        return RationalFunc(self.numerator.inverted(), self.denominator.inverted())


def _first(z) -> complex:
    return complex(np.ravel(np.asarray(z, dtype=complex))[0])


# Symmetric Laurent polynomials

@dataclass(frozen=True)
class SymLaurentPoly:
    """sum_k c_k b_k with b_0 = 1 and b_k = z^k + z^-k."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        object.__setattr__(self, "coeffs", c if c.size else np.zeros(1, dtype=complex))

    @classmethod
    def one(cls) -> "SymLaurentPoly":
        return cls(np.ones(1))

    @classmethod
    def x(cls) -> "SymLaurentPoly":
        return cls(np.array([0.0, 1.0]))

    @classmethod
    def from_chebyshev(cls, t: np.ndarray) -> "SymLaurentPoly":
        t = np.asarray(t, dtype=complex)
        c = t.copy()
        c[1:] = t[1:] / 2
        return cls(c)

    @classmethod
    def from_x_roots(cls, xs: Sequence[complex]) -> "SymLaurentPoly":
        """prod(x - x_j), monic in x."""
        t = cheb.chebfromroots(np.asarray(xs, dtype=complex) / 2) * 2 ** len(xs)
        return cls.from_chebyshev(t)

    def to_chebyshev(self) -> np.ndarray:
        t = self.coeffs.copy()
        t[1:] = 2 * self.coeffs[1:]
        return t

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(np.abs(self.coeffs) > 0)
        return int(nz[-1]) if nz.size else 0

    @property
    def leading(self) -> complex:
        """Coefficient of b_deg, which is also the x^deg coefficient."""
        return complex(self.coeffs[self.degree])

    def trimmed(self, tol: float = 0.0) -> "SymLaurentPoly":
        c = self.coeffs
        scale = max(1.0, float(np.max(np.abs(c))))
        keep = np.flatnonzero(np.abs(c) > tol * scale)
        top = int(keep[-1]) + 1 if keep.size else 1
        return SymLaurentPoly(c[:top])

    def monic(self) -> "SymLaurentPoly":
        lead = self.leading
        if lead == 0:
            raise RejectedInputError("the zero polynomial has no monic form")
        return SymLaurentPoly(self.coeffs / lead)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return cheb.chebval((z + 1 / z) / 2, self.to_chebyshev())[()]

    def at_x(self, x):
        return cheb.chebval(np.asarray(x, dtype=complex) / 2, self.to_chebyshev())[()]

    def __add__(self, other: "SymLaurentPoly") -> "SymLaurentPoly":
        n = max(self.coeffs.size, other.coeffs.size)
        return SymLaurentPoly(np.pad(self.coeffs, (0, n - self.coeffs.size)) + np.pad(other.coeffs, (0, n - other.coeffs.size)))

    def __sub__(self, other: "SymLaurentPoly") -> "SymLaurentPoly":
        return self + other.scale(-1)

    def scale(self, s: complex) -> "SymLaurentPoly":
        return SymLaurentPoly(self.coeffs * s)

    def mul_x(self) -> "SymLaurentPoly":
        return SymLaurentPoly.from_chebyshev(2 * cheb.chebmulx(self.to_chebyshev()))

    def roots_x(self) -> np.ndarray:
        if self.degree == 0:
            return np.zeros(0, dtype=complex)
        return 2 * cheb.chebroots(self.to_chebyshev()[: self.degree + 1])

    def padded(self, n: int) -> np.ndarray:
        return np.pad(self.coeffs, (0, max(0, n - self.coeffs.size)))[:n]


def basis_values(z, degree: int) -> np.ndarray:
    """Matrix B[j, k] = b_k(z_j) for k = 0..degree."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    k = np.arange(degree + 1)
    B = z[:, None] ** k[None, :] + z[:, None] ** (-k[None, :])
    B[:, 0] = 1.0
    return B


def x_matrix(degree: int) -> np.ndarray:
    """Multiplication by x on {b_0..b_degree}, truncated at b_degree."""
    n = degree + 1
    X = np.zeros((n, n), dtype=complex)
    for k in range(n):
        if k + 1 < n:
            X[k + 1, k] = 1.0
        if k == 1:
            X[0, k] = 2.0
        elif k >= 2:
            X[k - 1, k] = 1.0
    return X


# The rational family

def elementary_symmetric(values: Sequence[complex]) -> np.ndarray:
    """[e_0, e_1, ..., e_n]"""
    if len(values) == 0:
        return np.ones(1, dtype=complex)
    poly = np.poly(np.asarray(values, dtype=complex))
    return np.array([(-1) ** k * poly[k] for k in range(len(poly))], dtype=complex)


@dataclass(frozen=True)
class QDiffOperator:
    """phi(z) f(qz) + phibar(z) f(z/q) + mu(z) f(z)"""

    phi_fn: Callable
    phibar_fn: Callable
    mu_fn: Callable
    q: QParams

    def apply(self, f: Callable, z):
        qv = self.q.q
        return self.phi_fn(z) * f(qv * z) + self.phibar_fn(z) * f(z / qv) + self.mu_fn(z) * f(z)

    def act(self, f: Callable) -> Callable:
        return lambda z: self.apply(f, z)

    def gauge(self, f: Callable) -> "QDiffOperator":
        """Operator D' with D'(f Psi) = f D(Psi)."""
        qv = self.q.q
        return QDiffOperator(
            phi_fn=lambda z: self.phi_fn(z) * f(z) / f(qv * z),
            phibar_fn=lambda z: self.phibar_fn(z) * f(z) / f(z / qv),
            mu_fn=self.mu_fn,
            q=self.q,
        )


class TridiagFamily(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: int
    chi: Tuple[Complex, ...]
    xi: Tuple[Complex, ...] = ()
    d_const: Complex
    rho: Complex
    rho_star: Complex
    q: QParams

    @model_validator(mode="after")
    def check_lengths(self):
        if len(self.chi) != 2 * self.N + 2 or len(self.xi) != 2 * self.N - 2:
            raise ValueError(f"N={self.N} needs {2 * self.N + 2} chi and {2 * self.N - 2} xi parameters")
        return self

    @property
    def ladder_constant(self) -> complex:
        """C = prod(chi) prod(xi)^-1 q^-1, so that lambda_n = C q^n + q^-n."""
        return complex(np.prod(self.chi) / np.prod(self.xi) / self.q.q) if self.xi else complex(np.prod(self.chi) / self.q.q)

    def phi(self, z):
        z = np.asarray(z, dtype=complex)
        qv = self.q.q
        den = (1 - z * z) * (1 - qv * z * z)
        for x in self.xi:
            den = den * (1 - x * z)
        if np.any(np.abs(den) < settings.POLE_GUARD):
            raise DomainError("phi evaluated too close to a pole", z=_first(z))
        num = np.ones_like(z)
        for c in self.chi:
            num = num * (1 - c * z)
        return (num / den)[()]

    def phibar(self, z):
        return self.phi(1 / np.asarray(z, dtype=complex))

    def d(self, z):
        return (self.d_const + 0 * np.asarray(z, dtype=complex))[()]

    def mu(self, z):
        return self.d(z) - self.phi(z) - self.phibar(z)

    def phi_fn(self) -> RationalFunc:
        qv = self.q.q
        den = LaurentPoly({0: 1.0, 2: -1.0}) * LaurentPoly({0: 1.0, 2: -qv}) * linear_product(self.xi)
        return RationalFunc(linear_product(self.chi), den)

    def operator(self) -> QDiffOperator:
        phi_fn = self.phi_fn()
        phibar_fn = phi_fn.inverted()
        d = LaurentPoly.constant(self.d_const)
        return QDiffOperator(
            phi_fn=phi_fn,
            phibar_fn=phibar_fn,
            mu_fn=lambda z: d(z) - phi_fn(z) - phibar_fn(z),
            q=self.q,
        )

    def poles(self) -> np.ndarray:
        """Poles of phi and phibar together."""
        r = 1 / self.q.q_half
        pts = [1, -1, r, -r, 1 / r, -1 / r]
        pts += [1 / x for x in self.xi if x != 0] + list(self.xi)
        return np.array(pts, dtype=complex)


def make_family(
    N: int,
    chi: Sequence[complex],
    xi: Sequence[complex],
    q: QParams,
    check: Optional[str] = None,
) -> TridiagFamily:
    """Assemble the N=1 or N=2 rational family.

    For N=2 the parameters are verified according to ``check`` (defaults to
    settings.FAMILY_CHECK): "constraints" samples beta = 0 and gamma = rho,
    "prest" evaluates the two parameter relations directly.
    """
    if N not in (1, 2):
        if N >= 3:
            raise UnsupportedFamilyError(f"families with N={N} are not supported", N=N)
        raise RejectedInputError("N must be 1 or 2", N=N)
    chi = tuple(complex(c) for c in chi)
    xi = tuple(complex(x) for x in xi)
    if len(chi) != 2 * N + 2:
        raise RejectedInputError(f"N={N} needs {2 * N + 2} chi parameters", got=len(chi))
    if len(xi) != 2 * N - 2:
        raise RejectedInputError(f"N={N} needs {2 * N - 2} xi parameters", got=len(xi))
    if any(x == 0 for x in xi):
        raise RejectedInputError("xi parameters must be nonzero", xi=list(xi))

    C = complex(np.prod(chi) / (np.prod(xi) if xi else 1.0) / q.q)
    fam = TridiagFamily(
        N=N, chi=chi, xi=xi, d_const=1 + C, rho=-(q.t ** 2) * C, rho_star=-(q.t ** 2), q=q
    )
    if N == 2:
        mode = check or settings.FAMILY_CHECK
        if mode == "prest":
            r1, r2 = prest_residuals(chi, xi)
            worst = max(r1, r2)
        else:
            worst = constraint_residual(fam)
        if worst > settings.FUNCTIONAL_TOLERANCE:
            raise FamilyConstraintError(
                f"N=2 parameters fail the {mode} check", residual=worst, xi=list(xi)
            )
        logger.debug("N=2 family accepted by %s check (residual %.2e)", mode, worst)
    return fam


# Constraint functionals

def _excess(fam: TridiagFamily, z):
    """phi + phibar - d"""
    return fam.phi(z) + fam.phibar(z) - fam.d(z)


def _x(z):
    return z + 1 / z


def beta_terms(fam: TridiagFamily, z: complex) -> Tuple[complex, complex, complex]:
    q = fam.q.q
    e1, e0, em = _excess(fam, q * z), _excess(fam, z), _excess(fam, z / q)
    return (
        e1 * ((q * q - q) * z + (q ** -2 - 1 / q) / z),
        e0 * fam.q.t * (1 / z - z),
        em * ((1 / q - q ** -2) * z + (q - q * q) / z),
    )


def beta_functional(fam: TridiagFamily, z: complex) -> complex:
    return complex(sum(beta_terms(fam, z)))


def gamma_terms(fam: TridiagFamily, z: complex) -> Tuple[complex, ...]:
    q = fam.q.q
    gap = _x(q * z) - _x(z)
    if abs(gap) < settings.POLE_GUARD:
        raise DomainError("eta(x) - x underflows at this point", z=complex(z))
    e1, e0 = _excess(fam, q * z), _excess(fam, z)
    p_pb = fam.phi(z) * fam.phibar(q * z)
    pb_p = fam.phibar(z) * fam.phi(z / q)
    p_pb2 = fam.phi(q * z) * fam.phibar(q * q * z)
    return (
        e1 * e1,
        e0 * e0,
        -(q + 1 / q) * e1 * e0,
        (2 + q + 1 / q) * p_pb,
        pb_p,
        p_pb2,
        (1 + q + 1 / q) / gap * pb_p * (_x(z / q) - _x(z)),
        (1 + q + 1 / q) / gap * p_pb2 * (_x(q * z) - _x(q * q * z)),
    )


def gamma_functional(fam: TridiagFamily, z: complex) -> complex:
    return complex(sum(gamma_terms(fam, z)))


def constraint_residual(fam: TridiagFamily, count: int = 16, seed: int = 0) -> float:
    """Worst relative violation of beta = 0 and gamma = rho over sampled points."""
    worst = 0.0
    for z in sample_points(np.random.default_rng(seed), count, fam):
        bt = beta_terms(fam, z)
        worst = max(worst, abs(sum(bt)) / max(sum(abs(t) for t in bt), 1e-300))
        gt = gamma_terms(fam, z)
        worst = max(worst, abs(sum(gt) - fam.rho) / max(sum(abs(t) for t in gt) + abs(fam.rho), 1e-300))
    return worst


def sample_points(rng: np.random.Generator, count: int, fam: Optional[TridiagFamily] = None,
                  clearance: Optional[float] = None) -> np.ndarray:
    """Points uniform on 0.5 < |z| < 2, kept away from poles of phi, phibar at z, qz, z/q and q^2 z."""
    clearance = settings.SAMPLE_CLEARANCE if clearance is None else clearance
    poles = fam.poles() if fam is not None else np.array([1, -1], dtype=complex)
    shifts = [1.0]
    if fam is not None:
        qv = fam.q.q
        shifts = [1.0, qv, 1 / qv, qv * qv]
    out: List[complex] = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 1000 * count:
            raise DomainError("could not place sample points away from the poles", count=count)
        r = np.sqrt(rng.uniform(0.25, 4.0))
        z = r * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if all(np.min(np.abs(s * z - poles)) > clearance for s in shifts):
            out.append(complex(z))
    return np.array(out)


# W0 on symmetric polynomials

def apply_w0(fam: TridiagFamily, f: Callable, z):
    """phi(z) f(qz) + phibar(z) f(z/q) + mu(z) f(z) for any callable f."""
    qv = fam.q.q
    return fam.phi(z) * f(qv * z) + fam.phibar(z) * f(z / qv) + fam.mu(z) * f(z)


def interpolation_nodes(fam: TridiagFamily, degree: int) -> np.ndarray:
    M = 2 * (degree + 1) + 8
    theta = (np.arange(M) + 0.5) * np.pi / M
    z = settings.SAMPLE_RADIUS * np.exp(1j * theta)
    poles = fam.poles()
    keep = np.array([np.min(np.abs(w - poles)) > settings.NODE_CLEARANCE for w in z])
    if keep.sum() < degree + 1:
        raise InterpolationError("too few interpolation nodes clear of the poles", degree=degree)
    return z[keep]


def fit_symmetric(values: np.ndarray, nodes: np.ndarray, degree: int) -> Tuple[np.ndarray, float]:
    """Least-squares coefficients in b_0..b_degree for one or more value columns, and the relative residual."""
    B = basis_values(nodes, degree)
    V = values.reshape(len(nodes), -1)
    with linalg_guard("symmetric polynomial fit"):
        coeffs, *_ = sla.lstsq(B, V)
    scale = max(float(np.max(np.abs(V))), 1e-300)
    residual = float(np.max(np.abs(B @ coeffs - V))) / scale
    return coeffs, residual


def apply_w0_poly(fam: TridiagFamily, f: SymLaurentPoly, with_residual: bool = False):
    if not np.any(f.coeffs):
        raise RejectedInputError("f must be nonzero")
    deg = f.degree
    nodes = interpolation_nodes(fam, deg)
    coeffs, residual = fit_symmetric(np.asarray(apply_w0(fam, f, nodes)), nodes, deg)
    if residual > settings.FUNCTIONAL_TOLERANCE:
        raise InterpolationError("W0 f is not a symmetric polynomial of the same degree", residual=residual)
    out = SymLaurentPoly(coeffs[:, 0])
    return (out, residual) if with_residual else out


def w0_matrix(fam: TridiagFamily, degree: int) -> np.ndarray:
    """Matrix of W0 on {b_0..b_degree}; upper triangular for a valid family."""
    nodes = interpolation_nodes(fam, degree)
    B = basis_values(nodes, degree)
    values = np.column_stack([apply_w0(fam, lambda w, k=k: basis_values(w, k)[:, k], nodes) for k in range(degree + 1)])
    with linalg_guard("W0 matrix fit"):
        coeffs, *_ = sla.lstsq(B, values)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    residual = float(np.max(np.abs(B @ coeffs - values))) / scale
    lower = float(np.max(np.abs(np.tril(coeffs, -1)))) / max(float(np.max(np.abs(coeffs))), 1e-300) if degree else 0.0
    if residual > settings.FUNCTIONAL_TOLERANCE or lower > settings.FUNCTIONAL_TOLERANCE:
        raise InterpolationError(
            "W0 does not preserve symmetric polynomials of bounded degree",
            residual=residual,
            lower=lower,
        )
    return np.triu(coeffs)


def functional_tridiag_residual(fam: TridiagFamily, degree: int, tolerance: Optional[float] = None):
    """Both q-Dolan-Grady relations on polynomials of degree <= ``degree``, in a workspace of degree + 3."""
    tolerance = settings.FUNCTIONAL_TOLERANCE if tolerance is None else tolerance
    work = degree + 3
    W0 = w0_matrix(fam, work)
    X = x_matrix(work)
    return tridiag_residual(W0, X, fam.rho, fam.rho_star, fam.q, tolerance=tolerance,
                            normalize=True, columns=degree + 1)


# The N=2 parameter relations

_S_DEG, _P_DEG = 6, 8


def _h_table(m_max: int) -> List[np.ndarray]:
    """Complete homogeneous h_m(xi1, xi2) as 2-D coefficient arrays in (s, p) = (xi1 + xi2, xi1 xi2)."""
    table = [np.zeros((_S_DEG, _P_DEG), dtype=complex) for _ in range(m_max + 1)]
    table[0][0, 0] = 1.0
    if m_max >= 1:
        table[1][1, 0] = 1.0
    for m in range(2, m_max + 1):
        table[m][1:, :] += table[m - 1][:-1, :]
        table[m][:, 1:] -= table[m - 2][:, :-1]
    return table


def _relation_terms(e: np.ndarray, first: bool) -> List[Tuple[complex, int, int]]:
    """(coefficient, power of p, index of h) for each term of one relation."""
    if first:
        return [((-1) ** k * e[3 + k], 3 - k, 2 + k) for k in range(-2, 4)]
    return [((-1) ** k * e[3 + k], 3 + k, 2 - k) for k in range(-3, 3)]


def _relation_polys(chi: Sequence[complex]) -> Tuple[np.ndarray, np.ndarray]:
    e = elementary_symmetric(chi)
    h = _h_table(5)
    polys = []
    for first in (True, False):
        out = np.zeros((_S_DEG, _P_DEG), dtype=complex)
        for coeff, pw, hi in _relation_terms(e, first):
            out[:, pw:] += coeff * h[hi][:, : _P_DEG - pw]
        polys.append(out)
    return polys[0], polys[1]


def prest_residuals(chi: Sequence[complex], xi: Sequence[complex]) -> Tuple[float, float]:
    """Relative residuals |sum of terms| / sum |terms| of both N=2 parameter relations."""
    if len(chi) != 6 or len(xi) != 2:
        raise RejectedInputError("the N=2 relations need six chi and two xi")
    e = elementary_symmetric(chi)
    x1, x2 = complex(xi[0]), complex(xi[1])
    p = x1 * x2

    def h(m):
        return sum(x1 ** j * x2 ** (m - j) for j in range(m + 1))

    out = []
    for first in (True, False):
        terms = [c * p ** pw * h(hi) for c, pw, hi in _relation_terms(e, first)]
        out.append(abs(sum(terms)) / max(sum(abs(t) for t in terms), 1e-300))
    return out[0], out[1]


def solve_prest(chi: Sequence[complex], q: Optional[QParams] = None) -> List[Tuple[complex, complex]]:
    """All (xi1, xi2) solving both N=2 relations, each unordered pair reported once.

    Damped Newton in (s, p) from a grid of starts, with deflation of the roots
    already found and of the spurious root s = p = 0; roots are polished in
    (xi1, xi2) and kept when both relative residuals are below PREST_TOLERANCE.
    """
    chi = [complex(c) for c in chi]
    if len(chi) != 6:
        raise RejectedInputError("solve_prest needs six chi parameters", got=len(chi))
    if any(c == 0 for c in chi):
        raise RejectedInputError("chi parameters must be nonzero")
    R1, R2 = _relation_polys(chi)
    dR = [(P.polyder(R, axis=0), P.polyder(R, axis=1)) for R in (R1, R2)]

    def F(v):
        return np.array([P.polyval2d(v[0], v[1], R1), P.polyval2d(v[0], v[1], R2)])

    def J(v):
        return np.array([[P.polyval2d(v[0], v[1], d) for d in pair] for pair in dR])

    deflated: List[np.ndarray] = [np.zeros(2, dtype=complex)]

    def deflation(v):
        m, grad = 1.0, np.zeros(2, dtype=complex)
        for r in deflated:
            diff = v - r
            n2 = float(np.real(np.vdot(diff, diff)))
            if n2 == 0:
                return np.inf, grad
            factor = 1 / n2 + 1
            m *= factor
            grad += -np.conj(diff) / n2 ** 2 / factor
        return m, grad

    starts = []
    for r1 in (0.5, 1.0, 2.0):
        for a in range(8):
            ang = 2 * np.pi * a / 8
            for r2 in (0.5, 1.0, 2.0):
                x1 = r1 * np.exp(1j * (ang + 0.1))
                x2 = r2 * np.exp(1j * (ang + 0.1 + 2 * np.pi * 0.37))
                starts.append(np.array([x1 + x2, x1 * x2]))

    found: List[Tuple[complex, complex]] = []
    best = np.inf
    for v in starts:
        for _ in range(settings.PREST_MAX_ITERATIONS):
            fv = F(v)
            m, g = deflation(v)
            if not np.isfinite(m):
                break
            try:
                delta = -np.linalg.solve(J(v), fv)
            except np.linalg.LinAlgError:
                break
            denom = 1 - np.dot(g, delta)
            step = delta / denom if abs(denom) > 1e-12 else delta
            current = m * np.linalg.norm(fv)
            lam = 1.0
            for _ in range(20):
                trial = v + lam * step
                mt, _ = deflation(trial)
                if np.isfinite(mt) and mt * np.linalg.norm(F(trial)) < current:
                    break
                lam /= 2
            v = v + lam * step
            if np.linalg.norm(lam * step) < 1e-14 * max(1.0, np.linalg.norm(v)):
                break
        pair = _polish_pair(chi, v, F, J)
        if pair is None:
            continue
        res = max(prest_residuals(chi, pair))
        best = min(best, res)
        if res < settings.PREST_TOLERANCE:
            deflated.append(np.array([pair[0] + pair[1], pair[0] * pair[1]]))
            if not any(_same_pair(pair, other) for other in found):
                found.append(pair)
    if not found:
        raise ConvergenceError("no solution of the N=2 relations found", best_residual=float(best))
    logger.debug("solve_prest: %d solutions", len(found))
    return found


def _polish_pair(chi, v, F, J) -> Optional[Tuple[complex, complex]]:
    s, p = complex(v[0]), complex(v[1])
    disc = np.sqrt(s * s - 4 * p + 0j)
    x = np.array([(s + disc) / 2, (s - disc) / 2])
    for _ in range(3):
        sp = np.array([x[0] + x[1], x[0] * x[1]])
        Jx = J(sp) @ np.array([[1, 1], [x[1], x[0]]])
        step, *_ = np.linalg.lstsq(Jx, -F(sp), rcond=None)
        x = x + step
    if not np.all(np.isfinite(x)) or np.min(np.abs(x)) < 1e-6:
        return None
    x1, x2 = sorted((complex(x[0]), complex(x[1])), key=lambda c: (c.real, c.imag))
    return x1, x2


def _same_pair(a: Tuple[complex, complex], b: Tuple[complex, complex], tol: float = 1e-7) -> bool:
    scale = max(1.0, abs(a[0]), abs(a[1]))
    direct = abs(a[0] - b[0]) + abs(a[1] - b[1])
    swapped = abs(a[0] - b[1]) + abs(a[1] - b[0])
    return min(direct, swapped) < tol * scale
