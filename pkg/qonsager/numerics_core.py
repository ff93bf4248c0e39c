"""Dense complex linear algebra shared by every other module.

q-brackets, the tridiagonal-relation residuals, Pauli-chain builders and an
eigen-decomposition that groups degenerate eigenvalues into blocks.
"""

import cmath
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import linear_sum_assignment

from config import settings
from exceptions import (
    ConvergenceError,
    DefectiveMatrixError,
    RejectedInputError,
)
from schemas import Complex

logger = logging.getLogger(__name__)


@contextmanager
def linalg_guard(what: str):
    """Re-raise LAPACK failures inside the block as ConvergenceError."""
    try:
        yield
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"{what} failed", reason=str(exc)) from exc


# complex128 ndarray; square wherever an operation needs it
DenseMatrix = np.ndarray


def root_of_unity_order(phi: complex, order: Optional[int] = None, tol: Optional[float] = None) -> Optional[int]:
    """Smallest m <= order with |q^m - 1| <= tol, or None."""
    order = settings.ROOT_OF_UNITY_ORDER if order is None else order
    tol = settings.ROOT_OF_UNITY_TOLERANCE if tol is None else tol
    for m in range(1, order + 1):
        if abs(cmath.exp(m * phi) - 1) <= tol:
            return m
    return None


class QParams(BaseModel):
    """q = e^phi with every fractional power taken as exp(a*phi)."""

    model_config = ConfigDict(frozen=True)

    phi: Complex
    q: Complex
    q_half: Complex

    @model_validator(mode="after")
    def check_consistency(self):
        if abs(self.q - cmath.exp(self.phi)) > 1e-12 * max(1.0, abs(self.q)):
            raise ValueError("q must equal exp(phi)")
        if abs(self.q_half - cmath.exp(self.phi / 2)) > 1e-12 * max(1.0, abs(self.q_half)):
            raise ValueError("q_half must equal exp(phi/2)")
        order = root_of_unity_order(self.phi)
        if order is not None:
            raise ValueError(f"q is a root of unity of order {order}")
        return self

    @classmethod
    def from_phi(cls, phi: complex) -> "QParams":
        phi = complex(phi)
        try:
            return cls(phi=phi, q=cmath.exp(phi), q_half=cmath.exp(phi / 2))
        except ValidationError as exc:
            raise RejectedInputError(exc.errors()[0]["msg"], phi=phi) from exc

    def power(self, a: float) -> complex:
        return cmath.exp(a * self.phi)

    def inverse(self) -> "QParams":
        return QParams.from_phi(-self.phi)

    @property
    def t(self) -> complex:
        """q - q^-1"""
        return self.q - 1 / self.q

    @property
    def half_gap(self) -> complex:
        """q^{1/2} - q^{-1/2}"""
        return self.q_half - 1 / self.q_half

    @property
    def half_sum(self) -> complex:
        """q^{1/2} + q^{-1/2}"""
        return self.q_half + 1 / self.q_half

    @property
    def anisotropy(self) -> complex:
        return self.half_sum / 2


class ResidualReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_abs: float
    frobenius: float
    passed: bool
    tolerance: float

    @classmethod
    def of(cls, residual, tolerance: float, scale: float = 1.0) -> "ResidualReport":
        """Build a report from a residual array; ``scale`` divides both norms."""
        r = np.atleast_1d(np.asarray(residual, dtype=complex))
        scale = float(scale) if scale > 0 else 1.0
        max_abs = float(np.max(np.abs(r))) / scale if r.size else 0.0
        frob = float(np.linalg.norm(r)) / scale
        if not np.isfinite(max_abs):
            max_abs = float("inf")
        return cls(max_abs=max_abs, frobenius=frob, passed=max_abs <= tolerance, tolerance=tolerance)


def _square(M, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise RejectedInputError(f"{name} must be square", shape=list(M.shape))
    return M


def _same_shape(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape != Y.shape:
        raise RejectedInputError("dimension mismatch", left=list(X.shape), right=list(Y.shape))


def q_commutator(X: DenseMatrix, Y: DenseMatrix, q: QParams) -> DenseMatrix:
    """[X,Y]_q = q^{1/2} XY - q^{-1/2} YX"""
    X, Y = _square(X, "X"), _square(Y, "Y")
    _same_shape(X, Y)
    return q.q_half * (X @ Y) - (Y @ X) / q.q_half


def commutator(X: DenseMatrix, Y: DenseMatrix) -> DenseMatrix:
    return X @ Y - Y @ X


def tridiag_residual(
    W0: DenseMatrix,
    W1: DenseMatrix,
    rho: complex,
    rho_star: complex,
    q: QParams,
    tolerance: Optional[float] = None,
    normalize: bool = False,
    columns: Optional[int] = None,
) -> Tuple[ResidualReport, ResidualReport]:
    """Residuals of both q-Dolan-Grady relations.

    With ``normalize`` each residual is divided by max(1, |rho| ||[W0, W1]||_F).
    ``columns`` restricts the check to the first columns (truncated workspaces).
    """
    W0, W1 = _square(W0, "W0"), _square(W1, "W1")
    _same_shape(W0, W1)
    tolerance = settings.MATRIX_TOLERANCE if tolerance is None else tolerance
    qi = q.inverse()

    def relation(A, B, r):
        lhs = commutator(A, q_commutator(A, q_commutator(A, B, q), qi))
        rhs = r * commutator(A, B)
        diff = lhs - rhs
        rhs_cols = rhs
        if columns is not None:
            diff = diff[:, :columns]
            rhs_cols = rhs[:, :columns]
        scale = max(1.0, float(np.linalg.norm(rhs_cols))) if normalize else 1.0
        return ResidualReport.of(diff, tolerance, scale)

    return relation(W0, W1, rho), relation(W1, W0, rho_star)


class PauliOp(str, Enum):
    x = "x"
    y = "y"
    z = "z"
    plus = "plus"
    minus = "minus"
    q_exp_plus = "q_exp_plus"
    q_exp_minus = "q_exp_minus"


def one_site(which: PauliOp, q: QParams) -> np.ndarray:
    which = PauliOp(which)
    if which is PauliOp.x:
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if which is PauliOp.y:
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if which is PauliOp.z:
        return np.diag([1.0, -1.0]).astype(complex)
    if which is PauliOp.plus:
        return np.array([[0, 1], [0, 0]], dtype=complex)
    if which is PauliOp.minus:
        return np.array([[0, 0], [1, 0]], dtype=complex)
    if which is PauliOp.q_exp_plus:
        return np.diag([q.q_half, 1 / q.q_half])
    return np.diag([1 / q.q_half, q.q_half])


def pauli_chain_op(site: int, which: PauliOp, N: int, q: QParams) -> DenseMatrix:
    """I ⊗ ... ⊗ M ⊗ ... ⊗ I with M at ``site`` (1-based, site 1 is the leftmost factor)."""
    if N < 1 or not 1 <= site <= N:
        raise RejectedInputError("site out of range", site=site, N=N)
    eye = np.eye(2, dtype=complex)
    local = one_site(which, q)
    factors = [local if k == site else eye for k in range(1, N + 1)]
    return reduce(np.kron, factors)


def block_norms(M: DenseMatrix, sizes: Sequence[int]) -> np.ndarray:
    """Frobenius norm of every (i, j) block of M for the given block partition."""
    M = np.asarray(M, dtype=complex)
    if sum(sizes) != M.shape[0] or M.shape[0] != M.shape[1]:
        raise RejectedInputError("block sizes do not partition the matrix", sizes=list(sizes))
    edges = np.concatenate([[0], np.cumsum(sizes)])
    k = len(sizes)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            out[i, j] = np.linalg.norm(M[edges[i]:edges[i + 1], edges[j]:edges[j + 1]])
    return out


def match_spectra(a: Sequence[complex], b: Sequence[complex]) -> Tuple[float, np.ndarray]:
    """Optimal multiset matching; returns the worst matched distance and, for each a_i, its partner index in b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise RejectedInputError("spectra have different sizes", left=a.size, right=b.size)
    if a.size == 0:
        return 0.0, np.zeros(0, dtype=int)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()), cols


def phase_fix(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    out = np.array(vectors, dtype=complex, copy=True)
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        if abs(out[k, j]) > 0:
            out[:, j] *= abs(out[k, j]) / out[k, j]
    return out


def null_space_basis(M: DenseMatrix, dim: int) -> Tuple[np.ndarray, float, float]:
    """Orthonormal basis of the dim-dimensional approximate null space of M.

    Returns (basis, residual, gap): the largest discarded singular value and the
    next one up, both relative to the largest singular value.
    """
    M = _square(M)
    n = M.shape[0]
    if not 1 <= dim <= n:
        raise RejectedInputError("null space dimension out of range", dim=dim, n=n)
    with linalg_guard("singular value decomposition"):
        _, s, Vh = sla.svd(M)
    top = max(float(s[0]), 1e-300)
    basis = phase_fix(Vh[n - dim:].conj().T)
    residual = float(s[n - dim]) / top
    gap = float(s[n - dim - 1]) / top if dim < n else float("inf")
    return basis, residual, gap


@dataclass(frozen=True)
class EigenBlock:
    value: complex
    values: np.ndarray
    vectors: np.ndarray
    residual: float

    @property
    def size(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class EigenLadder:
    blocks: Tuple[EigenBlock, ...]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    reconstruction: float
    condition: float

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(b.size for b in self.blocks)

    @property
    def values(self) -> np.ndarray:
        return np.array([b.value for b in self.blocks])

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.size)


def group_eigenvalues(values: np.ndarray, tol_group: Optional[float] = None) -> list:
    """Index groups of eigenvalues closer than tol_group * max(1, spectral radius)."""
    values = np.asarray(values, dtype=complex)
    tol_group = settings.GROUP_TOLERANCE if tol_group is None else tol_group
    if values.size == 0:
        return []
    if values.size == 1:
        return [np.array([0])]
    radius = max(1.0, float(np.max(np.abs(values))))
    points = np.column_stack([values.real, values.imag])
    labels = fcluster(linkage(points, method="single"), t=tol_group * radius, criterion="distance")
    groups = [np.flatnonzero(labels == lab) for lab in np.unique(labels)]
    groups.sort(key=lambda idx: (values[idx].mean().real, values[idx].mean().imag))
    return groups


def eig_dense(M: DenseMatrix, tol_group: Optional[float] = None) -> EigenLadder:
    M = _square(M)
    try:
        w, V = sla.eig(M)
    except (sla.LinAlgError, ValueError) as exc:
        raise ConvergenceError("eigenvalue iteration did not converge", reason=str(exc)) from exc

    condition = float(np.linalg.cond(V))
    if not np.isfinite(condition) or condition > settings.MAX_EIGVEC_CONDITION:
        raise DefectiveMatrixError(
            "eigenvector matrix is too ill-conditioned; the matrix looks defective",
            condition=condition,
        )
    norm = float(np.linalg.norm(M)) or 1.0
    with linalg_guard("eigenvector inversion"):
        reconstruction = float(np.linalg.norm(M - (V * w) @ sla.inv(V))) / norm
    if reconstruction > settings.RECONSTRUCTION_TOLERANCE:
        raise DefectiveMatrixError(
            "eigen-decomposition does not reconstruct the matrix", reconstruction=reconstruction
        )

    blocks = []
    for idx in group_eigenvalues(w, tol_group):
        vecs = V[:, idx]
        res = 0.0
        for j, k in enumerate(idx):
            v = vecs[:, j]
            res = max(res, float(np.linalg.norm(M @ v - w[k] * v) / np.linalg.norm(v)))
        blocks.append(EigenBlock(value=complex(w[idx].mean()), values=w[idx], vectors=vecs, residual=res))
    logger.debug("eig_dense: n=%d blocks=%s cond=%.2e", M.shape[0], [b.size for b in blocks], condition)
    return EigenLadder(
        blocks=tuple(blocks),
        eigenvalues=w,
        eigenvectors=V,
        reconstruction=reconstruction,
        condition=condition,
    )
