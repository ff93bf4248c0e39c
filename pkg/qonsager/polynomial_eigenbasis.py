"""Polynomial eigenfunctions of W0, their Bethe roots and three-term recurrence.

psi_n is kept monic in x = z + 1/z, so that

    x psi_n = psi_{n+1} + a_n psi_n + chat_n psi_{n-1}.

At N=1 the Askey-Wilson coefficients (b, c, a) give a_n directly and
chat_n = b_{n-1} c_n; at N=2 the coefficients are read off W0's triangular matrix.
"""

import cmath
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.polynomial.chebyshev as cheb
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict, Field

from config import settings
from exceptions import (
    ConvergenceError,
    DegenerateParameterError,
    DomainError,
    FamilyConstraintError,
    RejectedInputError,
    UnsupportedFamilyError,
)
from functional_rep import SymLaurentPoly, TridiagFamily, constraint_residual, w0_matrix
from numerics_core import linalg_guard, null_space_basis
from schemas import Complex

logger = logging.getLogger(__name__)


class BetheState(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int
    m: int = 0
    roots: Tuple[Complex, ...]
    residuals: Tuple[float, ...]
    eigenvalue: Complex = Field(alias="lambda")
    coeffs: Tuple[Complex, ...] = ()

    def polynomial(self) -> SymLaurentPoly:
        return SymLaurentPoly(np.array(self.coeffs, dtype=complex))

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


class AWCoeffs(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    b: Complex
    c: Complex
    a: Complex


def _check_supported(fam: TridiagFamily) -> None:
    if fam.N not in (1, 2):
        raise UnsupportedFamilyError(f"families with N={fam.N} are not supported", N=fam.N)


def require_admissible(fam: TridiagFamily) -> None:
    """N=2 families must satisfy beta = 0 and gamma = rho before W0 has polynomial eigenfunctions."""
    _check_supported(fam)
    if fam.N == 2:
        worst = constraint_residual(fam)
        if worst > settings.FUNCTIONAL_TOLERANCE:
            raise FamilyConstraintError("N=2 family violates beta = 0, gamma = rho", residual=worst, xi=list(fam.xi))


def eigenvalue_ladder(fam: TridiagFamily, n: int) -> complex:
    """lambda_n = C q^n + q^-n"""
    _check_supported(fam)
    if n < 0:
        raise RejectedInputError("n must be nonnegative", n=n)
    return fam.ladder_constant * fam.q.power(n) + fam.q.power(-n)


# Root extraction

def x_roots(poly: SymLaurentPoly, polish_steps: int = 2) -> np.ndarray:
    """Roots in x, refined by Newton steps on the Chebyshev series."""
    xs = poly.roots_x()
    t = poly.to_chebyshev()
    dt = cheb.chebder(t)
    for _ in range(polish_steps):
        y = xs / 2
        f = cheb.chebval(y, t)
        df = cheb.chebval(y, dt) / 2
        ok = np.abs(df) > 0
        xs = np.where(ok, xs - np.where(ok, f / np.where(ok, df, 1), 0), xs)
    return xs


def z_from_x(xs: Sequence[complex]) -> np.ndarray:
    """Solve z + 1/z = x, picking the representative with |z| >= 1."""
    out = []
    for x in np.asarray(xs, dtype=complex):
        w = np.sqrt(x * x / 4 - 1)
        z1, z2 = x / 2 + w, x / 2 - w
        out.append(z1 if abs(z1) >= abs(z2) else z2)
    return np.array(out, dtype=complex)


def bethe_roots(poly: SymLaurentPoly) -> np.ndarray:
    """Roots from the coefficient array; only for polynomials with no recurrence at hand."""
    if poly.degree == 0:
        return np.zeros(0, dtype=complex)
    xs = x_roots(poly)
    scale = max(1.0, float(np.max(np.abs(poly.coeffs))))
    worst = float(np.max(np.abs(poly.at_x(xs)))) / scale if xs.size else 0.0
    if not np.isfinite(worst) or worst > 1e-6:
        raise ConvergenceError("root extraction is badly conditioned", best_residual=worst)
    return z_from_x(xs)


def comrade_matrix(a: np.ndarray, chat: np.ndarray, f: Sequence[complex]) -> np.ndarray:
    """Matrix whose eigenvalues are the x-roots of sum_k f_k psi_k.

    With f = e_n this is the Jacobi matrix of the recurrence.
    """
    f = np.asarray(f, dtype=complex)
    n = f.size - 1
    T = np.zeros((n, n), dtype=complex)
    for k in range(n):
        T[k, k] = a[k]
        if k + 1 < n:
            T[k, k + 1] = 1.0
        if k:
            T[k, k - 1] = chat[k]
    T[n - 1, :] -= f[:n] / f[n]
    return T


def recurrence_eval(a: np.ndarray, chat: np.ndarray, f: Sequence[complex], x) -> Tuple[np.ndarray, np.ndarray]:
    """sum_k f_k psi_k(x) and its x-derivative by forward recurrence."""
    f = np.asarray(f, dtype=complex)
    x = np.asarray(x, dtype=complex)
    p_prev, p = np.zeros_like(x), np.ones_like(x)
    d_prev, d = np.zeros_like(x), np.zeros_like(x)
    value, slope = f[0] * p, f[0] * d
    for k in range(f.size - 1):
        p_next = (x - a[k]) * p - chat[k] * p_prev
        d_next = p + (x - a[k]) * d - chat[k] * d_prev
        p_prev, p, d_prev, d = p, p_next, d, d_next
        value = value + f[k + 1] * p
        slope = slope + f[k + 1] * d
    return value, slope


def recurrence_roots(a: np.ndarray, chat: np.ndarray, f: Sequence[complex], polish_steps: int = 4) -> np.ndarray:
    """x-roots of sum_k f_k psi_k: comrade eigenvalues, then Newton steps on the recurrence."""
    f = np.asarray(f, dtype=complex)
    if f.size <= 1:
        return np.zeros(0, dtype=complex)
    if f[-1] == 0:
        raise RejectedInputError("the top psi coefficient must be nonzero")
    try:
        xs = sla.eigvals(comrade_matrix(a, chat, f))
    except (sla.LinAlgError, ValueError) as exc:
        raise ConvergenceError("comrade matrix did not diagonalize", reason=str(exc)) from exc
    for _ in range(polish_steps):
        value, slope = recurrence_eval(a, chat, f, xs)
        ok = np.abs(slope) > 0
        trial = xs - np.where(ok, value / np.where(ok, slope, 1), 0)
        better = np.abs(recurrence_eval(a, chat, f, trial)[0]) <= np.abs(value)
        xs = np.where(better, trial, xs)
    return xs


def root_ratios(roots: Sequence[complex], q: complex) -> np.ndarray:
    """psi(q z_i) / psi(z_i / q) for psi = prod_j (x - x_j), as a product of factor ratios."""
    zs = np.asarray(roots, dtype=complex)
    xs = zs + 1 / zs
    up = (q * zs + 1 / (q * zs))[:, None] - xs[None, :]
    down = (zs / q + q / zs)[:, None] - xs[None, :]
    if np.any(np.abs(down) < settings.POLE_GUARD):
        i = int(np.argmin(np.min(np.abs(down), axis=1)))
        raise DomainError("psi vanishes at z/q for a Bethe root", root=complex(zs[i]))
    return np.prod(up / down, axis=1)


def bethe_residuals(fam: TridiagFamily, roots: Sequence[complex]) -> List[float]:
    """|psi(q z_i)/psi(z_i/q) + phibar(z_i)/phi(z_i)| for each root."""
    if len(roots) == 0:
        return []
    ratios = root_ratios(roots, fam.q.q)
    return [float(abs(r + fam.phibar(z) / fam.phi(z))) for r, z in zip(ratios, roots)]


def _ladder_roots(fam: TridiagFamily, n: int, poly: SymLaurentPoly) -> np.ndarray:
    """Bethe roots of psi_n, from the recurrence when its coefficients exist."""
    try:
        a, chat = recurrence_coefficients(fam, n - 1)
    except DegenerateParameterError as exc:
        logger.warning("recurrence unavailable at n=%d (%s); using coefficient roots", n, exc.detail)
        return bethe_roots(poly)
    f = np.zeros(n + 1, dtype=complex)
    f[n] = 1.0
    return z_from_x(recurrence_roots(a, chat, f))


# Eigenfunctions

def psi_matrix(fam: TridiagFamily, n_max: int) -> np.ndarray:
    """Columns are the monic psi_0..psi_{n_max} in the b-basis (upper unitriangular)."""
    W = w0_matrix(fam, n_max)
    size = n_max + 1
    Psi = np.eye(size, dtype=complex)
    for n in range(1, size):
        lam = W[n, n]
        A = W[:n, :n] - lam * np.eye(n)
        with linalg_guard(f"triangular solve for psi_{n}"):
            Psi[:n, n] = sla.solve_triangular(A, -W[:n, n])
    return Psi


def build_psi(fam: TridiagFamily, n: int) -> List[BetheState]:
    require_admissible(fam)
    if n < 0 or n > settings.DEGREE_CAP:
        raise RejectedInputError(f"degree must lie in 0..{settings.DEGREE_CAP}", n=n)
    lam = eigenvalue_ladder(fam, n)
    if n == 0:
        return [BetheState(n=0, roots=(), residuals=(), eigenvalue=lam, coeffs=(1.0,))]

    W = w0_matrix(fam, n)
    scale = max(1.0, float(np.max(np.abs(np.diag(W)))))
    if abs(W[n, n] - lam) > settings.FUNCTIONAL_TOLERANCE * scale:
        raise FamilyConstraintError(
            "no eigenvalue of W0 matches the ladder value", n=n, ladder=lam, found=complex(W[n, n])
        )
    lower = np.diag(W)[:n] - lam
    coincident = np.flatnonzero(np.abs(lower) <= settings.FUNCTIONAL_TOLERANCE * scale)
    if coincident.size == 0:
        v = np.zeros(n + 1, dtype=complex)
        v[n] = 1.0
        with linalg_guard(f"triangular solve for psi_{n}"):
            v[:n] = sla.solve_triangular(W[:n, :n] - lam * np.eye(n), -W[:n, n])
        vectors = [v]
    else:
        # lambda_n repeats lower on the ladder: every eigenvector at lambda_n is returned
        logger.warning("lambda_%d is degenerate with degrees %s", n, coincident.tolist())
        basis, _, _ = null_space_basis(W - lam * np.eye(n + 1), coincident.size + 1)
        lead = int(np.argmax(np.abs(basis[n, :])))
        top = basis[:, lead] / basis[n, lead]
        vectors = [top] + [basis[:, j] - basis[n, j] * top for j in range(basis.shape[1]) if j != lead]

    states = []
    for m, v in enumerate(vectors):
        poly = SymLaurentPoly(v).trimmed(1e-13)
        # eigenvectors of a repeated ladder value are not recurrence polynomials
        roots = bethe_roots(poly) if coincident.size else _ladder_roots(fam, n, poly)
        states.append(
            BetheState(
                n=poly.degree,
                m=m,
                roots=tuple(complex(r) for r in roots),
                residuals=tuple(bethe_residuals(fam, roots)),
                eigenvalue=lam,
                coeffs=tuple(complex(c) for c in poly.coeffs),
            )
        )
    return states


def hyperbolic_roots(z_roots: Sequence[complex]) -> List[complex]:
    """lambda = log(z)/2 on the principal branch."""
    return [cmath.log(complex(z)) / 2 for z in z_roots]


def _sinh(w: complex) -> complex:
    s = cmath.sinh(w)
    if abs(s) < settings.POLE_GUARD:
        raise DomainError("a sinh factor of the Bethe equations underflows", argument=w)
    return s


def bethe_residual_hyperbolic(fam: TridiagFamily, roots: Sequence[complex]) -> List[complex]:
    """LHS - RHS of the hyperbolic Bethe equations for z = e^{2 lambda}, chi = e^{2 eta}, xi = e^{2 c}."""
    lams = [complex(v) for v in roots]
    etas = [cmath.log(c) / 2 for c in fam.chi]
    cs = [cmath.log(x) / 2 for x in fam.xi]
    half = fam.q.phi / 2
    out = []
    for i, li in enumerate(lams):
        lhs = 1.0 + 0j
        for c in cs:
            lhs *= _sinh(li + c) / _sinh(li - c)
        for e in etas:
            lhs *= _sinh(li - e) / _sinh(li + e)
        rhs = 1.0 + 0j
        for j, lj in enumerate(lams):
            if j == i:
                continue
            rhs *= _sinh(li + lj + half) * _sinh(li - lj + half)
            rhs /= _sinh(li + lj - half) * _sinh(li - lj - half)
        out.append(lhs - rhs)
    return out


# Recurrence coefficients

def aw_coeffs(fam: TridiagFamily, n: int) -> AWCoeffs:
    if fam.N != 1:
        raise UnsupportedFamilyError("closed-form recurrence coefficients exist for N=1 only", N=fam.N)
    if n < 0:
        raise RejectedInputError("n must be nonnegative", n=n)
    x1, x2, x3, x4 = fam.chi
    A = x1 * x2 * x3 * x4
    qn = fam.q.power(n)

    def guarded(value: complex, label: str) -> complex:
        if abs(value) <= 1e-10:
            raise DegenerateParameterError(f"degenerate denominator {label}", n=n, value=value)
        return value

    d_b = guarded(x1 * (1 - A * fam.q.power(2 * n - 1)) * (1 - A * fam.q.power(2 * n)), "of b_n")
    b = (1 - x1 * x2 * qn) * (1 - x1 * x3 * qn) * (1 - x1 * x4 * qn) * (1 - A * fam.q.power(n - 1)) / d_b
    if n == 0:
        c = 0j
    else:
        d_c = guarded((1 - A * fam.q.power(2 * n - 2)) * (1 - A * fam.q.power(2 * n - 1)), "of c_n")
        qm = fam.q.power(n - 1)
        c = x1 * (1 - qn) * (1 - x2 * x3 * qm) * (1 - x2 * x4 * qm) * (1 - x3 * x4 * qm) / d_c
    a = x1 + 1 / x1 - b - c
    return AWCoeffs(n=n, b=b, c=c, a=a)


def recurrence_coefficients(fam: TridiagFamily, n_max: int, numeric: Optional[bool] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(a, chat) for n = 0..n_max of the monic recurrence; chat[0] = 0.

    Closed form at N=1 unless ``numeric`` is set; N=2 always goes through W0's matrix.
    """
    _check_supported(fam)
    numeric = fam.N != 1 if numeric is None else numeric
    if not numeric:
        coeffs = [aw_coeffs(fam, n) for n in range(n_max + 1)]
        a = np.array([c.a for c in coeffs], dtype=complex)
        chat = np.array([0j] + [coeffs[n - 1].b * coeffs[n].c for n in range(1, n_max + 1)])
        return a, chat

    if n_max + 1 > settings.NUMERIC_DEGREE_CAP:
        raise RejectedInputError(f"numeric recurrence limited to degree {settings.NUMERIC_DEGREE_CAP}", n_max=n_max)
    Psi = psi_matrix(fam, n_max + 1)
    size = n_max + 2
    a = np.zeros(n_max + 1, dtype=complex)
    chat = np.zeros(n_max + 1, dtype=complex)
    for n in range(n_max + 1):
        xpsi = SymLaurentPoly(Psi[:, n]).mul_x().padded(size)
        with linalg_guard("recurrence extraction"):
            comp = sla.solve_triangular(Psi, xpsi, unit_diagonal=True)
        a[n] = comp[n]
        if n:
            chat[n] = comp[n - 1]
        stray = np.delete(comp, [k for k in (n - 1, n, n + 1) if k >= 0])
        if stray.size and float(np.max(np.abs(stray))) > 1e-6 * max(1.0, float(np.max(np.abs(comp)))):
            logger.warning("x psi_%d leaks outside psi_{n-1..n+1}: %.2e", n, float(np.max(np.abs(stray))))
    return a, chat


def psi_values(a: np.ndarray, chat: np.ndarray, n_max: int, z) -> np.ndarray:
    """Rows psi_0(z)..psi_{n_max}(z) by forward recurrence."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    x = z + 1 / z
    out = np.zeros((n_max + 1, z.size), dtype=complex)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x - a[0]
    for n in range(1, n_max):
        out[n + 1] = (x - a[n]) * out[n] - chat[n] * out[n - 1]
    return out
