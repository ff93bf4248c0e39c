"""Open XXZ chain: the tridiagonal pair (W0, W1) on (C^2)^N, the charge I1, the
Hamiltonian it commutes with, and the discrete q-difference picture of I1 on the
W1 eigenbasis.

Site 1 is the leftmost tensor factor. W0 is built by

    W0^(1) = S + cosh(alpha) Q+,   W0^(N) = S (x) I + Q+ (x) W0^(N-1)

with S = k+ sigma+ + k- sigma-, Q+ = diag(q^1/2, q^-1/2); W1 uses Q- and alpha*.
"""

import cmath
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict

from config import settings
from exceptions import (
    ConvergenceError,
    DefectiveMatrixError,
    DegenerateParameterError,
    PreconditionError,
    RejectedInputError,
    SpectralMismatchError,
)
from hierarchy_spectral import CouplingSet
from numerics_core import (
    PauliOp,
    QParams,
    ResidualReport,
    block_norms,
    eig_dense,
    linalg_guard,
    match_spectra,
    one_site,
    pauli_chain_op,
    phase_fix,
    q_commutator,
)
from schemas import Complex, RawBoundarySpec

logger = logging.getLogger(__name__)

ScanParameter = Literal["alpha", "alpha_star", "theta", "kappa", "kappa_star", "kappa_plus", "kappa_minus"]


# Boundary parameters

class BoundaryParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: Complex
    alpha_star: Complex
    theta: Complex
    couplings: CouplingSet
    raw: Optional[RawBoundarySpec] = None

    @staticmethod
    def k_pair(theta: complex, q: QParams) -> Tuple[complex, complex]:
        """k+ = -(q^1/2 - q^-1/2) e^{i theta}/2, k- = (q^1/2 - q^-1/2) e^{-i theta}/2."""
        g = q.half_gap
        return -g * cmath.exp(1j * theta) / 2, g * cmath.exp(-1j * theta) / 2

    @classmethod
    def create(
        cls,
        alpha: complex,
        alpha_star: complex,
        theta: complex,
        q: QParams,
        kappa: complex = 0j,
        kappa_star: complex = 0j,
        kappa_plus: complex = 0j,
        kappa_minus: complex = 0j,
    ) -> "BoundaryParams":
        k_plus, k_minus = cls.k_pair(complex(theta), q)
        couplings = CouplingSet.create(
            kappa=kappa,
            kappa_star=kappa_star,
            kappa_plus=kappa_plus,
            kappa_minus=kappa_minus,
            k_plus=k_plus,
            k_minus=k_minus,
        )
        return cls(alpha=alpha, alpha_star=alpha_star, theta=theta, couplings=couplings)

    @classmethod
    def from_raw(cls, raw: RawBoundarySpec, q: QParams) -> "BoundaryParams":
        """Boundary fields of the Hamiltonian: left (c00, c01, theta), right (c00~, c01~, theta~)."""
        eps_plus = (raw.c00 + 1j * raw.c01) / 2
        kappa = (-raw.c00_tilde + 1j * raw.c01_tilde) / 2
        h = 2 * q.half_sum
        bp = cls.create(
            alpha=cmath.acosh(eps_plus),
            alpha_star=cmath.acosh(eps_plus.conjugate()),
            theta=raw.theta,
            q=q,
            kappa=kappa,
            kappa_star=kappa.conjugate(),
            kappa_plus=-cmath.exp(1j * raw.theta_tilde) / h,
            kappa_minus=cmath.exp(-1j * raw.theta_tilde) / h,
        )
        return bp.model_copy(update={"raw": raw})

    @property
    def epsilon_plus(self) -> complex:
        return cmath.cosh(self.alpha)

    @property
    def epsilon_minus(self) -> complex:
        return cmath.cosh(self.alpha_star)

    def with_parameter(self, name: ScanParameter, value: complex, q: QParams) -> "BoundaryParams":
        value = complex(value)
        if name in ("alpha", "alpha_star"):
            return self.model_copy(update={name: value, "raw": None})
        if name == "theta":
            k_plus, k_minus = self.k_pair(value, q)
            couplings = self.couplings.model_copy(update={"k_plus": k_plus, "k_minus": k_minus})
            return self.model_copy(update={"theta": value, "couplings": couplings, "raw": None})
        if name in ("kappa", "kappa_star", "kappa_plus", "kappa_minus"):
            couplings = self.couplings.model_copy(update={name: value})
            return self.model_copy(update={"couplings": couplings, "raw": None})
        raise RejectedInputError(f"unknown scan parameter {name!r}")


# Operators

@dataclass(frozen=True)
class ChainOperators:
    N: int
    W0: np.ndarray
    W1: np.ndarray
    rho: complex
    params: BoundaryParams
    q: QParams

    @property
    def dimension(self) -> int:
        return 2 ** self.N


def build_generators(N: int, bp: BoundaryParams, q: QParams) -> ChainOperators:
    if not 1 <= N <= settings.CHAIN_SITE_CAP:
        raise RejectedInputError(f"N must lie in 1..{settings.CHAIN_SITE_CAP}", N=N)
    k_plus, k_minus = bp.couplings.k_plus, bp.couplings.k_minus
    S = k_plus * one_site(PauliOp.plus, q) + k_minus * one_site(PauliOp.minus, q)
    Qp, Qm = one_site(PauliOp.q_exp_plus, q), one_site(PauliOp.q_exp_minus, q)
    W0 = S + bp.epsilon_plus * Qp
    W1 = S + bp.epsilon_minus * Qm
    for k in range(1, N):
        eye = np.eye(2 ** k, dtype=complex)
        W0 = np.kron(S, eye) + np.kron(Qp, W0)
        W1 = np.kron(S, eye) + np.kron(Qm, W1)
    return ChainOperators(N=N, W0=W0, W1=W1, rho=-(q.t ** 2) / 4, params=bp, q=q)


def build_I1_chain(ops: ChainOperators, couplings: Optional[CouplingSet] = None) -> np.ndarray:
    couplings = ops.params.couplings if couplings is None else couplings
    if couplings.k_plus == 0 or couplings.k_minus == 0:
        raise PreconditionError("I1 needs nonzero k+ and k-")
    q = ops.q
    return (
        couplings.kappa * ops.W0
        + couplings.kappa_star * ops.W1
        + couplings.ratio_plus * q_commutator(ops.W1, ops.W0, q)
        + couplings.ratio_minus * q_commutator(ops.W0, ops.W1, q)
    )


def bulk_hamiltonian(N: int, q: QParams) -> np.ndarray:
    delta = q.anisotropy
    H = np.zeros((2 ** N, 2 ** N), dtype=complex)
    for k in range(1, N):
        for which, weight in ((PauliOp.x, 1.0), (PauliOp.y, 1.0), (PauliOp.z, delta)):
            H += weight * pauli_chain_op(k, which, N, q) @ pauli_chain_op(k + 1, which, N, q)
    return H


def build_hamiltonian(N: int, bp: BoundaryParams, q: QParams) -> np.ndarray:
    """Bulk XXZ plus the two non-diagonal boundary fields; the left field sits on site N."""
    cp = bp.couplings
    g, h = q.half_gap, q.half_sum
    eps_sum = bp.epsilon_plus + bp.epsilon_minus
    kappa_sum = cp.kappa + cp.kappa_star
    if abs(eps_sum) < settings.POLE_GUARD or abs(kappa_sum) < settings.POLE_GUARD:
        raise PreconditionError("boundary normalizations vanish", eps_sum=eps_sum, kappa_sum=kappa_sum)

    def op(site, which):
        return pauli_chain_op(site, which, N, q)

    left = (g / eps_sum) * (
        (bp.epsilon_plus - bp.epsilon_minus) / 2 * op(N, PauliOp.z)
        + (2 / g) * (cp.k_plus * op(N, PauliOp.plus) + cp.k_minus * op(N, PauliOp.minus))
    )
    h_plus = cp.k_plus * cp.kappa_minus / cp.k_minus
    h_minus = cp.k_minus * cp.kappa_plus / cp.k_plus
    right = (g / kappa_sum) * (
        (cp.kappa - cp.kappa_star) / 2 * op(1, PauliOp.z)
        + 2 * h * (h_plus * op(1, PauliOp.plus) + h_minus * op(1, PauliOp.minus))
    )
    return bulk_hamiltonian(N, q) + left + right


def hamiltonian_commutator(H: np.ndarray, I1: np.ndarray) -> float:
    """||[H, I1]||_F relative to ||H|| ||I1||."""
    scale = max(float(np.linalg.norm(H)) * float(np.linalg.norm(I1)), 1e-300)
    return float(np.linalg.norm(H @ I1 - I1 @ H)) / scale


# Ladders and the two eigenbases

def ladder_exponents(alpha: complex, N: int, q: QParams) -> np.ndarray:
    """alpha + (N - 2n) phi / 2 for n = 0..N"""
    return np.array([alpha + (N - 2 * n) * q.phi / 2 for n in range(N + 1)], dtype=complex)


def ladder(alpha: complex, N: int, q: QParams) -> np.ndarray:
    return np.cosh(ladder_exponents(alpha, N, q))


def _distance_to_i_pi(w: complex) -> float:
    k = round(w.imag / np.pi)
    return abs(w - 1j * np.pi * k)


@dataclass(frozen=True)
class Collision:
    ladder: str
    pair_sum: int
    distance: float


def ladder_collisions(bp: BoundaryParams, N: int, q: QParams, tol: Optional[float] = None) -> List[Collision]:
    """Pairs p != p' with equal ladder values: alpha + (N - p - p') phi/2 in i pi Z."""
    tol = settings.GROUP_TOLERANCE if tol is None else tol
    out = []
    for name, alpha in (("W0", bp.alpha), ("W1", bp.alpha_star)):
        for m in range(1, 2 * N):
            d = _distance_to_i_pi(complex(alpha + (N - m) * q.phi / 2))
            if d < tol:
                out.append(Collision(ladder=name, pair_sum=m, distance=d))
    return out


def _ladder_blocks(M: np.ndarray, targets: np.ndarray, N: int, name: str) -> np.ndarray:
    """Columns: orthonormal eigenvectors of M ordered by ladder index."""
    decomposition = eig_dense(M)
    if len(decomposition.blocks) != N + 1:
        raise DegenerateParameterError(
            f"{name} has {len(decomposition.blocks)} distinct eigenvalues, expected {N + 1}"
        )
    dev, order = match_spectra(targets, decomposition.values)
    scale = max(1.0, float(np.max(np.abs(targets))))
    if dev > settings.SPECTRUM_MATCH_TOLERANCE * scale:
        raise SpectralMismatchError(f"{name} spectrum differs from its ladder", deviation=dev)
    columns = []
    for n, k in enumerate(order):
        block = decomposition.blocks[k]
        if block.size != comb(N, n):
            raise DegenerateParameterError(
                f"{name} eigenspace {n} has dimension {block.size}, expected {comb(N, n)}"
            )
        with linalg_guard(f"{name} eigenspace {n} basis"):
            span = sla.orth(block.vectors)
        if span.shape[1] != block.size:
            raise DefectiveMatrixError(f"{name} eigenspace {n} is rank deficient", rank=span.shape[1])
        columns.append(phase_fix(span))
    return np.hstack(columns)


@dataclass(frozen=True)
class DiscreteBasis:
    N: int
    grid: np.ndarray
    lambdas: np.ndarray
    lambdas_star: np.ndarray
    V: np.ndarray
    V_star: np.ndarray

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(comb(self.N, n) for n in range(self.N + 1))

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def span(self, n: int) -> slice:
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))

    @cached_property
    def overlaps(self) -> np.ndarray:
        """Entry ((s, k), (n, m)): component k of psi_{n[m]} at grid point z_s."""
        with linalg_guard("overlap solve"):
            return sla.solve(self.V_star, self.V)

    def in_w0_basis(self, M: np.ndarray) -> np.ndarray:
        with linalg_guard("change to the W0 eigenbasis"):
            return sla.solve(self.V, M @ self.V)

    def in_w1_basis(self, M: np.ndarray) -> np.ndarray:
        with linalg_guard("change to the W1 eigenbasis"):
            return sla.solve(self.V_star, M @ self.V_star)

    def values_on_grid(self, vector: np.ndarray) -> np.ndarray:
        with linalg_guard("grid values"):
            return sla.solve(self.V_star, np.asarray(vector, dtype=complex))


def discrete_basis(ops: ChainOperators) -> DiscreteBasis:
    bp, N, q = ops.params, ops.N, ops.q
    collisions = ladder_collisions(bp, N, q)
    if collisions:
        raise DegenerateParameterError(
            "ladder values coincide",
            collisions=[(c.ladder, c.pair_sum, c.distance) for c in collisions],
        )
    lambdas = ladder(bp.alpha, N, q)
    lambdas_star = ladder(bp.alpha_star, N, q)
    return DiscreteBasis(
        N=N,
        grid=np.exp(ladder_exponents(bp.alpha_star, N, q)),
        lambdas=lambdas,
        lambdas_star=lambdas_star,
        V=_ladder_blocks(ops.W0, lambdas, N, "W0"),
        V_star=_ladder_blocks(ops.W1, lambdas_star, N, "W1"),
    )


def far_block_norm(M_hat: np.ndarray, sizes: Sequence[int]) -> float:
    """Largest block with |i - j| >= 2, relative to ||M_hat||."""
    norms = block_norms(M_hat, sizes)
    k = len(sizes)
    far = [norms[i, j] for i in range(k) for j in range(k) if abs(i - j) >= 2]
    return max(far, default=0.0) / max(float(np.linalg.norm(M_hat)), 1e-300)


def tridiagonality(ops: ChainOperators, basis: DiscreteBasis) -> Tuple[float, float]:
    """Far-block norms of W1 on the W0 eigenbasis and of W0 on the W1 eigenbasis."""
    return (
        far_block_norm(basis.in_w0_basis(ops.W1), basis.sizes),
        far_block_norm(basis.in_w1_basis(ops.W0), basis.sizes),
    )


# I1 on the W0 eigenbasis

@dataclass(frozen=True)
class ChainRecurrence:
    M: np.ndarray
    sizes: Tuple[int, ...]
    lambdas: np.ndarray
    kappa: complex

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def block(self, i: int, j: int) -> np.ndarray:
        o = self.offsets
        return self.M[o[i]:o[i + 1], o[j]:o[j + 1]]

    def A(self, n: int) -> np.ndarray:
        return self.block(n, n) - self.kappa * self.lambdas[n] * np.eye(self.sizes[n])

    def B(self, n: int) -> np.ndarray:
        """V_n -> V_{n+1}"""
        return self.block(n + 1, n)

    def C(self, n: int) -> np.ndarray:
        """V_n -> V_{n-1}"""
        return self.block(n - 1, n)

    @property
    def scale(self) -> float:
        return max(float(np.linalg.norm(self.M)), 1e-300)

    def b_norms(self) -> List[float]:
        """||B_n|| / ||M|| for n = 0..N-1"""
        return [float(np.linalg.norm(self.B(n))) / self.scale for n in range(len(self.sizes) - 1)]

    def c_norms(self) -> List[float]:
        """||C_n|| / ||M|| for n = 1..N"""
        return [float(np.linalg.norm(self.C(n))) / self.scale for n in range(1, len(self.sizes))]


def recurrence_blocks(basis: DiscreteBasis, I1: np.ndarray, couplings: CouplingSet) -> ChainRecurrence:
    rec = ChainRecurrence(M=basis.in_w0_basis(I1), sizes=basis.sizes, lambdas=basis.lambdas, kappa=couplings.kappa)
    far = far_block_norm(rec.M, rec.sizes)
    if far > settings.BLOCK_TOLERANCE:
        logger.warning("I1 is not block tridiagonal on the W0 eigenbasis (far blocks %.2e)", far)
    return rec


@dataclass(frozen=True)
class ChainEigenpair:
    value: complex
    coefficients: np.ndarray
    vector: np.ndarray
    block_weights: Tuple[float, ...]


def expand_eigenstates(
    ops: ChainOperators,
    basis: DiscreteBasis,
    couplings: Optional[CouplingSet] = None,
    I1: Optional[np.ndarray] = None,
) -> List[ChainEigenpair]:
    """Eigenpairs of I1 from its block-tridiagonal form, certified against a direct solve."""
    couplings = ops.params.couplings if couplings is None else couplings
    I1 = build_I1_chain(ops, couplings) if I1 is None else I1
    rec = recurrence_blocks(basis, I1, couplings)
    try:
        w, F = sla.eig(rec.M)
        direct = sla.eigvals(I1)
    except (sla.LinAlgError, ValueError) as exc:
        raise ConvergenceError("I1 did not diagonalize", reason=str(exc)) from exc
    dev, _ = match_spectra(w, direct)
    scale = max(1.0, float(np.max(np.abs(direct))))
    if dev > settings.SPECTRUM_MATCH_TOLERANCE * scale:
        raise SpectralMismatchError("recurrence spectrum differs from the direct spectrum", deviation=dev / scale)

    F = phase_fix(F / np.linalg.norm(F, axis=0))
    pairs = []
    for k in np.lexsort((w.imag, w.real)):
        f = F[:, k]
        weights = tuple(float(np.linalg.norm(f[basis.span(n)])) for n in range(ops.N + 1))
        pairs.append(ChainEigenpair(value=complex(w[k]), coefficients=f, vector=basis.V @ f, block_weights=weights))
    return pairs


# Discrete q-difference realization on the W1 eigenbasis

@dataclass(frozen=True)
class QDiscRealization:
    """W0 on the W1 eigenbasis split into shift blocks.

    ``down[s]`` maps U(s-1) into block s (the q z_s neighbour), ``up[s]`` maps U(s+1),
    ``diag[s]`` is the mu block. Endpoint blocks are empty.
    """

    down: Tuple[Optional[np.ndarray], ...]
    up: Tuple[Optional[np.ndarray], ...]
    diag: Tuple[np.ndarray, ...]
    far: float


def qdisc_realization(ops: ChainOperators, basis: DiscreteBasis) -> QDiscRealization:
    W = basis.in_w1_basis(ops.W0)
    N = ops.N

    def blk(i, j):
        return W[basis.span(i), basis.span(j)]

    return QDiscRealization(
        down=tuple(blk(s, s - 1) if s > 0 else None for s in range(N + 1)),
        up=tuple(blk(s, s + 1) if s < N else None for s in range(N + 1)),
        diag=tuple(blk(s, s) for s in range(N + 1)),
        far=far_block_norm(W, basis.sizes),
    )


def qdisc_residual(
    ops: ChainOperators,
    basis: DiscreteBasis,
    value: complex,
    vector: np.ndarray,
    couplings: Optional[CouplingSet] = None,
    tolerance: float = 1e-7,
) -> ResidualReport:
    """I1 Psi = Lambda Psi written as a q-difference equation on the grid z_s.

    The shift towards q z_s carries kappa + t w (kp c^-1/z + km c z), the shift
    towards z_s/q carries kappa + t w (kp c^-1 z + km c/z), with w = W1_SCALE.
    """
    couplings = ops.params.couplings if couplings is None else couplings
    q = ops.q
    c, t, w = q.q_half, q.t, settings.W1_SCALE
    kp, km = couplings.ratio_plus, couplings.ratio_minus
    real = qdisc_realization(ops, basis)
    U = basis.values_on_grid(vector)
    out = []
    for s in range(ops.N + 1):
        z, lam = basis.grid[s], basis.lambdas_star[s]
        Us = U[basis.span(s)]
        mu_part = real.diag[s] @ Us
        r = couplings.kappa * mu_part + couplings.kappa_star * lam * Us
        r = r + (c - 1 / c) * (kp + km) * lam * mu_part - value * Us
        if s > 0:
            r = r + (couplings.kappa + t * w * (kp / c / z + km * c * z)) * (real.down[s] @ U[basis.span(s - 1)])
        if s < ops.N:
            r = r + (couplings.kappa + t * w * (kp / c * z + km * c / z)) * (real.up[s] @ U[basis.span(s + 1)])
        out.append(r)
    scale = max(float(np.max(np.abs(U))), 1e-300) * max(1.0, abs(value))
    return ResidualReport.of(np.concatenate(out), tolerance, scale)


# Algebraic sectors

SectorKind = Literal["B_vanish", "C_vanish", "degenerate", "none"]


class SectorReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: SectorKind
    n: Optional[int] = None
    residual: float
    invariant_dim: Optional[int] = None
    analytic_residual: Optional[float] = None
    literal_residual: Optional[float] = None
    pair_sum: Optional[int] = None
    ladder: Optional[str] = None


def chain_sector_kappa_star(bp: BoundaryParams, N: int, q: QParams, kind: str, n: int) -> complex:
    """kappa* at which B_n (kind "B_vanish") or C_n ("C_vanish") vanishes, u = e^{alpha + (N-2n) phi/2}."""
    cp = bp.couplings
    c, t = q.q_half, q.t
    u = cmath.exp(bp.alpha + (N - 2 * n) * q.phi / 2)
    kp, km = cp.ratio_plus, cp.ratio_minus
    if kind == "B_vanish":
        return -t / 2 * (kp / c * u + km * c / u)
    if kind == "C_vanish":
        return -t / 2 * (kp / c / u + km * c * u)
    raise RejectedInputError(f"unknown sector kind {kind!r}")


def _literal_residual(bp: BoundaryParams, N: int, q: QParams, n: int) -> Optional[float]:
    """Distance of alpha +- alpha~ - i(theta~ - theta) + (N - 2n + 1) phi/2 to 2 pi i Z."""
    if bp.raw is None:
        return None
    alpha_tilde = cmath.acosh(bp.couplings.kappa)
    best = np.inf
    for sign in (1, -1):
        w = bp.alpha + sign * alpha_tilde - 1j * (bp.raw.theta_tilde - bp.raw.theta) + (N - 2 * n + 1) * q.phi / 2
        k = round(w.imag / (2 * np.pi))
        best = min(best, abs(w - 2j * np.pi * k))
    return float(best)


def detect_sectors(ops: ChainOperators, rec: ChainRecurrence) -> List[SectorReport]:
    """Every vanishing raising or lowering block; a single "none" report otherwise."""
    bp, N, q = ops.params, ops.N, ops.q
    kappa_star = bp.couplings.kappa_star
    scale = max(1.0, abs(kappa_star))
    reports = []
    for n, norm in enumerate(rec.b_norms()):
        if norm < settings.BLOCK_TOLERANCE:
            reports.append(SectorReport(
                kind="B_vanish",
                n=n,
                residual=norm,
                invariant_dim=sum(comb(N, p) for p in range(n + 1)),
                analytic_residual=abs(kappa_star - chain_sector_kappa_star(bp, N, q, "B_vanish", n)) / scale,
                literal_residual=_literal_residual(bp, N, q, n),
            ))
    for n, norm in enumerate(rec.c_norms(), start=1):
        if norm < settings.BLOCK_TOLERANCE:
            reports.append(SectorReport(
                kind="C_vanish",
                n=n,
                residual=norm,
                invariant_dim=sum(comb(N, p) for p in range(n, N + 1)),
                analytic_residual=abs(kappa_star - chain_sector_kappa_star(bp, N, q, "C_vanish", n)) / scale,
            ))
    if not reports:
        smallest = min(rec.b_norms() + rec.c_norms(), default=0.0)
        reports.append(SectorReport(kind="none", residual=smallest))
    return reports


class SectorPoint(BaseModel):
    index: int
    value: Complex
    reports: List[SectorReport]
    b_norms: List[float] = []
    c_norms: List[float] = []


def sector_point(index: int, value: complex, N: int, bp: BoundaryParams, q: QParams) -> SectorPoint:
    collisions = ladder_collisions(bp, N, q)
    if collisions:
        reports = [
            SectorReport(kind="degenerate", residual=c.distance, pair_sum=c.pair_sum, ladder=c.ladder)
            for c in collisions
        ]
        return SectorPoint(index=index, value=value, reports=reports)
    ops = build_generators(N, bp, q)
    try:
        basis = discrete_basis(ops)
    except (DegenerateParameterError, DefectiveMatrixError, SpectralMismatchError) as exc:
        logger.info("scan point %d is degenerate: %s", index, exc.detail)
        return SectorPoint(index=index, value=value, reports=[SectorReport(kind="degenerate", residual=0.0)])
    rec = recurrence_blocks(basis, build_I1_chain(ops), bp.couplings)
    return SectorPoint(
        index=index,
        value=value,
        reports=detect_sectors(ops, rec),
        b_norms=rec.b_norms(),
        c_norms=rec.c_norms(),
    )


def sector_scan(
    N: int,
    base: BoundaryParams,
    q: QParams,
    parameter: ScanParameter,
    values: Sequence[complex],
    workers: Optional[int] = None,
    factory: Optional[Callable[[complex], BoundaryParams]] = None,
) -> List[SectorPoint]:
    """One SectorPoint per grid value, in grid order whatever the worker count."""
    factory = factory or (lambda v: base.with_parameter(parameter, v, q))
    workers = workers or settings.SCAN_WORKERS

    def run(item):
        index, value = item
        return sector_point(index, complex(value), N, factory(value), q)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        points = list(pool.map(run, enumerate(values)))
    hits = sum(any(r.kind in ("B_vanish", "C_vanish") for r in p.reports) for p in points)
    logger.info("sector scan over %s: %d points, %d with a vanishing block", parameter, len(points), hits)
    return points


# States of an algebraic sector

class SectorState(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: Complex
    coefficients: Tuple[Complex, ...]
    recursion_residual: float
    full_residual: float
    collinearity: float


def reconstruct_sector_states(
    ops: ChainOperators,
    basis: DiscreteBasis,
    sector: SectorReport,
    couplings: Optional[CouplingSet] = None,
    I1: Optional[np.ndarray] = None,
    tolerance: float = 1e-9,
) -> List[SectorState]:
    """Eigenstates of I1 inside the invariant sum W_n = V_0 + ... + V_n (B_n = 0)
    or W~_n = V_n + ... + V_N (C_n = 0), from the reduced recursion on f'.
    """
    if sector.kind not in ("B_vanish", "C_vanish") or sector.n is None:
        raise PreconditionError("sector states need a B_vanish or C_vanish sector", kind=sector.kind)
    couplings = ops.params.couplings if couplings is None else couplings
    I1 = build_I1_chain(ops, couplings) if I1 is None else I1
    rec = recurrence_blocks(basis, I1, couplings)
    n, N = sector.n, ops.N
    closing = rec.B(n) if sector.kind == "B_vanish" else rec.C(n)
    if float(np.linalg.norm(closing)) / rec.scale > settings.BLOCK_TOLERANCE:
        raise PreconditionError("the sector block does not vanish", kind=sector.kind, n=n)
    levels = list(range(0, n + 1)) if sector.kind == "B_vanish" else list(range(n, N + 1))
    o = rec.offsets
    lo, hi = int(o[levels[0]]), int(o[levels[-1] + 1])
    reduced = rec.M[lo:hi, lo:hi]
    try:
        w, F = sla.eig(reduced)
        w_direct, E = sla.eig(I1)
    except (sla.LinAlgError, ValueError) as exc:
        raise ConvergenceError("sector block did not diagonalize", reason=str(exc)) from exc
    F = phase_fix(F / np.linalg.norm(F, axis=0))

    states = []
    for k in np.lexsort((w.imag, w.real)):
        value, f = complex(w[k]), F[:, k]
        parts = {p: f[int(o[p]) - lo:int(o[p + 1]) - lo] for p in levels}
        worst = 0.0
        for p in levels:
            row = (rec.kappa * rec.lambdas[p] - value) * parts[p] + rec.A(p) @ parts[p]
            if p - 1 in parts:
                row = row + rec.B(p - 1) @ parts[p - 1]
            if p + 1 in parts:
                row = row + rec.C(p + 1) @ parts[p + 1]
            worst = max(worst, float(np.linalg.norm(row)))
        recursion = worst / (rec.scale * float(np.linalg.norm(f)))

        full = np.zeros(rec.M.shape[0], dtype=complex)
        full[lo:hi] = f
        full_res = float(np.linalg.norm(rec.M @ full - value * full)) / rec.scale

        psi = basis.V @ full
        near = np.abs(w_direct - value) <= 1e-6 * max(1.0, abs(value))
        if near.any():
            with linalg_guard("collinearity fit"):
                coef, *_ = sla.lstsq(E[:, near], psi)
            collinear = float(np.linalg.norm(E[:, near] @ coef - psi) / np.linalg.norm(psi))
        else:
            collinear = 1.0
        if recursion > tolerance or full_res > tolerance:
            raise SpectralMismatchError(
                "sector recursion is not satisfied; the sector detection is inconsistent",
                recursion=recursion,
                full=full_res,
            )
        states.append(SectorState(
            value=value,
            coefficients=tuple(complex(v) for v in f),
            recursion_residual=recursion,
            full_residual=full_res,
            collinearity=collinear,
        ))
    return states
