"""The first conserved charge I1 and its spectrum in the functional representation.

    I1 = kappa W0 + kappa* W1 + (kappa+/k+) [W1, W0]_q + (kappa-/k-) [W0, W1]_q

On the psi_n basis I1 is tridiagonal: it sends psi_n to B_n psi_{n+1}, (kappa lambda_n + A_n) psi_n
and C_n psi_{n-1}. When B_n vanishes the polynomials of degree <= n are invariant and the spectrum
there is algebraic; otherwise eigenpairs come from a truncated recurrence.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from config import settings
from exceptions import (
    ConvergenceError,
    DomainError,
    PreconditionError,
    RejectedInputError,
    UnsupportedFamilyError,
)
from functional_rep import (
    SymLaurentPoly,
    TridiagFamily,
    elementary_symmetric,
    fit_symmetric,
    interpolation_nodes,
)
from numerics_core import ResidualReport, phase_fix
from polynomial_eigenbasis import (
    BetheState,
    aw_coeffs,
    eigenvalue_ladder,
    psi_matrix,
    psi_values,
    recurrence_coefficients,
    recurrence_roots,
    require_admissible,
    root_ratios,
    z_from_x,
)
from schemas import Complex

logger = logging.getLogger(__name__)


class CouplingSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    kappa: Complex
    kappa_star: Complex
    kappa_plus: Complex
    kappa_minus: Complex
    k_plus: Complex
    k_minus: Complex

    @model_validator(mode="after")
    def check_k(self):
        if self.k_plus == 0 or self.k_minus == 0:
            raise ValueError("k+ and k- must be nonzero")
        return self

    @classmethod
    def create(cls, **values) -> "CouplingSet":
        try:
            return cls(**values)
        except ValidationError as exc:
            raise PreconditionError(exc.errors()[0]["msg"], **{k: complex(v) for k, v in values.items()}) from exc

    @property
    def ratio_plus(self) -> complex:
        """kappa+ / k+"""
        return self.kappa_plus / self.k_plus

    @property
    def ratio_minus(self) -> complex:
        """kappa- / k-"""
        return self.kappa_minus / self.k_minus

    def with_kappa_star(self, value: complex) -> "CouplingSet":
        return self.model_copy(update={"kappa_star": complex(value)})


@dataclass(frozen=True)
class I1FunctionalOp:
    """I1 written as a q-difference operator A eta + Abar eta^-1 + B."""

    fam: TridiagFamily
    couplings: CouplingSet

    def _parts(self):
        q = self.fam.q
        return q.q_half, q.t, self.couplings.ratio_plus, self.couplings.ratio_minus

    def A(self, z):
        c, t, kp, km = self._parts()
        return (self.couplings.kappa + t * (kp / c / z + km * c * z)) * self.fam.phi(z)

    def Abar(self, z):
        c, t, kp, km = self._parts()
        return (self.couplings.kappa + t * (kp / c * z + km * c / z)) * self.fam.phibar(z)

    def B(self, z):
        c, _, kp, km = self._parts()
        x = z + 1 / z
        mu = self.fam.mu(z)
        return self.couplings.kappa * mu + self.couplings.kappa_star * x + (c - 1 / c) * x * (kp + km) * mu

    def apply(self, f: Callable, z):
        qv = self.fam.q.q
        return self.A(z) * f(qv * z) + self.Abar(z) * f(z / qv) + self.B(z) * f(z)

    def act(self, f: Callable) -> Callable:
        return lambda z: self.apply(f, z)


def _check_supported(fam: TridiagFamily) -> None:
    if fam.N not in (1, 2):
        raise UnsupportedFamilyError(f"families with N={fam.N} are not supported", N=fam.N)


def _ladder_factor(fam: TridiagFamily, couplings: CouplingSet, lam_n: complex, lam_other: complex) -> complex:
    c = fam.q.q_half
    kp, km = couplings.ratio_plus, couplings.ratio_minus
    return couplings.kappa_star + (kp * c - km / c) * lam_n + (km * c - kp / c) * lam_other


def coeffs_ABC(
    fam: TridiagFamily,
    couplings: CouplingSet,
    n: int,
    normalization: str = "monic",
    recurrence: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Tuple[complex, complex, complex]:
    """(B_n, C_n, A_n).

    ``normalization="monic"`` matches the monic psi_n; "askey_wilson" (N=1 only) uses
    the b_n, c_n, a_n of the unnormalized recurrence x p_n = b_n p_{n+1} + a_n p_n + c_n p_{n-1}.
    """
    _check_supported(fam)
    if n < 0:
        raise RejectedInputError("n must be nonnegative", n=n)
    c = fam.q.q_half
    kp, km = couplings.ratio_plus, couplings.ratio_minus
    if normalization == "askey_wilson":
        aw = aw_coeffs(fam, n)
        b_hat, c_hat, a_hat = aw.b, aw.c, aw.a
    elif normalization == "monic":
        a, chat = recurrence if recurrence is not None else recurrence_coefficients(fam, n)
        b_hat, c_hat, a_hat = 1.0, chat[n], a[n]
    else:
        raise RejectedInputError(f"unknown normalization {normalization!r}")

    lam_n = eigenvalue_ladder(fam, n)
    B = _ladder_factor(fam, couplings, lam_n, eigenvalue_ladder(fam, n + 1)) * b_hat
    C = _ladder_factor(fam, couplings, lam_n, eigenvalue_ladder(fam, n - 1)) * c_hat if n else 0j
    A = (couplings.kappa_star + (c - 1 / c) * (kp + km) * lam_n) * a_hat
    return complex(B), complex(C), complex(A)


@dataclass(frozen=True)
class RecurrenceSystem:
    cutoff: int
    lambdas: np.ndarray
    kappa: complex
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Columns are sources: M[n, n] = kappa lambda_n + A_n, M[n+1, n] = B_n, M[n-1, n] = C_n."""
        size = self.cutoff + 1
        M = np.diag(self.kappa * self.lambdas + self.A).astype(complex)
        M[np.arange(1, size), np.arange(size - 1)] = self.B[: size - 1]
        M[np.arange(size - 1), np.arange(1, size)] = self.C[1:size]
        return M


def assemble_recurrence(
    fam: TridiagFamily,
    couplings: CouplingSet,
    n_max: int,
    recurrence: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> RecurrenceSystem:
    if n_max < 0:
        raise RejectedInputError("cutoff must be nonnegative", n_max=n_max)
    recurrence = recurrence if recurrence is not None else recurrence_coefficients(fam, n_max)
    triples = [coeffs_ABC(fam, couplings, n, recurrence=recurrence) for n in range(n_max + 1)]
    return RecurrenceSystem(
        cutoff=n_max,
        lambdas=np.array([eigenvalue_ladder(fam, n) for n in range(n_max + 1)]),
        kappa=couplings.kappa,
        B=np.array([t[0] for t in triples]),
        C=np.array([t[1] for t in triples]),
        A=np.array([t[2] for t in triples]),
    )


class SpectralPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: Complex
    coefficients: Tuple[Complex, ...]
    stable: bool = True
    drift: float = 0.0

    def expansion(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)


def solve_nonalgebraic(fam: TridiagFamily, couplings: CouplingSet, n_max: int) -> List[SpectralPair]:
    """Eigenpairs of the recurrence truncated at n_max.

    A value is stable when the spectrum truncated STABILITY_EXTENSION degrees higher
    holds a value within STABILITY_TOLERANCE * max(1, |Lambda|). Stable pairs come first.
    """
    _check_supported(fam)
    if n_max < 4 or n_max > settings.CUTOFF_CAP:
        raise RejectedInputError(f"cutoff must lie in 4..{settings.CUTOFF_CAP}", n_max=n_max)
    wide = n_max + settings.STABILITY_EXTENSION
    recurrence = recurrence_coefficients(fam, wide)
    M = assemble_recurrence(fam, couplings, n_max, recurrence).matrix
    M_wide = assemble_recurrence(fam, couplings, wide, recurrence).matrix
    try:
        w, V = sla.eig(M)
        w_wide = sla.eigvals(M_wide)
    except (sla.LinAlgError, ValueError) as exc:
        raise ConvergenceError("truncated recurrence did not diagonalize", reason=str(exc)) from exc

    V = phase_fix(V / np.linalg.norm(V, axis=0))
    pairs = []
    for k, value in enumerate(w):
        drift = float(np.min(np.abs(w_wide - value)))
        pairs.append(
            SpectralPair(
                value=complex(value),
                coefficients=tuple(complex(v) for v in V[:, k]),
                stable=drift < settings.STABILITY_TOLERANCE * max(1.0, abs(value)),
                drift=drift,
            )
        )
    pairs.sort(key=lambda p: (not p.stable, abs(p.value)))
    unstable = sum(not p.stable for p in pairs)
    if unstable:
        logger.warning("%d of %d truncated eigenvalues drift under a wider cutoff", unstable, len(pairs))
    return pairs


def expansion_value(
    fam: TridiagFamily,
    coefficients,
    z,
    recurrence: Optional[Tuple[np.ndarray, np.ndarray]] = None,
):
    """Psi(z) = sum_n f_n psi_n(z)."""
    f = np.asarray(coefficients, dtype=complex)
    n_max = f.size - 1
    a, chat = recurrence if recurrence is not None else recurrence_coefficients(fam, n_max)
    return (f @ psi_values(a, chat, n_max, z))


def qdiff_residual(
    fam: TridiagFamily,
    couplings: CouplingSet,
    value: complex,
    coefficients,
    z,
    tolerance: float = 1e-6,
) -> ResidualReport:
    """Pointwise |I1 Psi - Lambda Psi| relative to the size of the terms."""
    f = np.asarray(coefficients, dtype=complex)
    recurrence = recurrence_coefficients(fam, f.size - 1)
    op = I1FunctionalOp(fam, couplings)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    psi = lambda w: expansion_value(fam, f, w, recurrence)
    qv = fam.q.q
    terms = np.abs(op.A(z) * psi(qv * z)) + np.abs(op.Abar(z) * psi(z / qv)) + np.abs(op.B(z) * psi(z))
    residual = op.apply(psi, z) - value * psi(z)
    scale = max(1.0, float(np.max(terms)), abs(value) * float(np.max(np.abs(psi(z)))))
    return ResidualReport.of(residual, tolerance, scale)


# Algebraic sector

def sector_kappa_star(fam: TridiagFamily, couplings: CouplingSet, n: int) -> complex:
    """kappa* for which B_n vanishes: -(q - q^-1)(kp q^{-1/2} q^-n + km q^{1/2} C q^n)."""
    q = fam.q
    c = q.q_half
    return -q.t * (couplings.ratio_plus / c * q.power(-n) + couplings.ratio_minus * c * fam.ladder_constant * q.power(n))


def algebraic_sector_n(fam: TridiagFamily, couplings: CouplingSet, tol: float = 1e-8, n_max: Optional[int] = None) -> Optional[int]:
    n_max = settings.CUTOFF_CAP if n_max is None else n_max
    scale = max(1.0, abs(couplings.kappa_star))
    hits = [n for n in range(n_max + 1) if abs(couplings.kappa_star - sector_kappa_star(fam, couplings, n)) <= tol * scale]
    if len(hits) > 1:
        logger.warning("kappa* satisfies the sector condition at several degrees %s", hits)
    return hits[0] if hits else None


class AlgebraicState(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    eigenvalue: Complex
    coefficients: Tuple[Complex, ...]
    state: BetheState


def _check_sector(fam: TridiagFamily, couplings: CouplingSet, n: int) -> None:
    gap = abs(couplings.kappa_star - sector_kappa_star(fam, couplings, n))
    if gap > 1e-8 * max(1.0, abs(couplings.kappa_star)):
        raise PreconditionError("kappa* does not close the degree <= n sector", n=n, gap=gap)


def solve_algebraic(fam: TridiagFamily, couplings: CouplingSet, n: int) -> List[AlgebraicState]:
    """All n+1 eigenstates of I1 on polynomials of degree <= n, each with degree exactly n."""
    _check_supported(fam)
    if n < 0 or n > settings.DEGREE_CAP:
        raise RejectedInputError(f"n must lie in 0..{settings.DEGREE_CAP}", n=n)
    require_admissible(fam)
    _check_sector(fam, couplings, n)

    recurrence = recurrence_coefficients(fam, n)
    block = assemble_recurrence(fam, couplings, n, recurrence=recurrence).matrix
    try:
        w, V = sla.eig(block)
    except (sla.LinAlgError, ValueError) as exc:
        raise ConvergenceError("sector block did not diagonalize", reason=str(exc)) from exc
    Psi = psi_matrix(fam, n) if n else np.ones((1, 1), dtype=complex)
    op = I1FunctionalOp(fam, couplings)
    a, chat = recurrence

    states = []
    for k in np.argsort(np.abs(w)):
        f = V[:, k] / V[n, k]
        poly = SymLaurentPoly(Psi @ f)
        roots = z_from_x(recurrence_roots(a, chat, f))
        ratios = root_ratios(roots, fam.q.q)
        residuals = [float(abs(r + op.Abar(z) / op.A(z))) for r, z in zip(ratios, roots)]
        states.append(
            AlgebraicState(
                n=n,
                eigenvalue=complex(w[k]),
                coefficients=tuple(complex(v) for v in f),
                state=BetheState(
                    n=n,
                    m=len(states),
                    roots=tuple(complex(r) for r in roots),
                    residuals=tuple(residuals),
                    eigenvalue=complex(w[k]),
                    coeffs=tuple(complex(v) for v in poly.coeffs),
                ),
            )
        )
    check_nondegeneracy([s.eigenvalue for s in states])
    return states


def spectrum_coefficients(fam: TridiagFamily) -> Dict[str, complex]:
    """F+, F-, G+, G- of the closed-form spectrum.

    At N=1 G+ carries a factor 1/q (e_3(chi)/q, not the bare e_3); only that
    reading reproduces the eigenvalues of solve_algebraic.
    """
    _check_supported(fam)
    q = fam.q.q
    if fam.N == 1:
        e = elementary_symmetric(fam.chi)
        return {"F_plus": e[4] / q, "F_minus": 1.0 + 0j, "G_plus": e[3] / q, "G_minus": e[1]}
    e = elementary_symmetric(fam.chi)
    x1, x2 = fam.xi
    f_plus = e[6] / (x1 * x2 * q)
    return {
        "F_plus": f_plus,
        "F_minus": 1.0 + 0j,
        "G_plus": e[5] / (x1 * x2 * q) - f_plus * (1 / x1 + 1 / x2),
        "G_minus": e[1] - x1 - x2,
    }


def spectrum_formula(fam: TridiagFamily, couplings: CouplingSet, n: int, roots) -> complex:
    """Lambda_1 from the Bethe roots z_i of a degree-n sector state."""
    co = spectrum_coefficients(fam)
    q = fam.q
    c, t = q.q_half, q.t
    kp, km = couplings.ratio_plus, couplings.ratio_minus
    qn, qmn = q.power(n), q.power(-n)
    s = sum(complex(z) + 1 / complex(z) for z in roots)
    return complex(
        couplings.kappa * (co["F_plus"] * qn + co["F_minus"] * qmn)
        - t * km * c * co["G_plus"] * qn
        - t * kp / c * co["G_minus"] * qmn
        + (c - 1 / c) * (kp + km) * (co["G_plus"] + co["G_minus"])
        + t * (c - 1 / c) * (km * co["F_plus"] * qn - kp * co["F_minus"] * qmn) * s
    )


def raising_component(fam: TridiagFamily, couplings: CouplingSet, n: int) -> complex:
    """psi_{n+1} coefficient of I1 psi_n, read from an interpolated fit."""
    Psi = psi_matrix(fam, n) if n else np.ones((1, 1), dtype=complex)
    psi_n = SymLaurentPoly(Psi[:, n])
    nodes = interpolation_nodes(fam, n + 1)
    values = np.asarray(I1FunctionalOp(fam, couplings).apply(psi_n, nodes))
    coeffs, residual = fit_symmetric(values, nodes, n + 1)
    if residual > settings.FUNCTIONAL_TOLERANCE:
        raise DomainError("I1 psi_n is not a polynomial of degree n+1", residual=residual)
    return complex(coeffs[n + 1, 0])


def check_nondegeneracy(values, tol: Optional[float] = None) -> float:
    """Smallest pairwise separation; logs a warning below ``tol``."""
    tol = settings.GROUP_TOLERANCE if tol is None else tol
    v = np.asarray(values, dtype=complex)
    if v.size < 2:
        return float("inf")
    gaps = np.abs(v[:, None] - v[None, :]) + np.diag(np.full(v.size, np.inf))
    smallest = float(np.min(gaps))
    if smallest < tol * max(1.0, float(np.max(np.abs(v)))):
        logger.warning("I1 spectrum is degenerate to %.2e; the eigenbasis is not unique", smallest)
    return smallest
