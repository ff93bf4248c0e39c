import cmath

import numpy as np
import pytest

from exceptions import ConvergenceError, DefectiveMatrixError, RejectedInputError
from numerics_core import (
    PauliOp,
    QParams,
    ResidualReport,
    block_norms,
    commutator,
    eig_dense,
    group_eigenvalues,
    linalg_guard,
    match_spectra,
    null_space_basis,
    pauli_chain_op,
    phase_fix,
    q_commutator,
    root_of_unity_order,
    tridiag_residual,
)


class TestQParams:
    def test_fractional_powers_follow_phi(self):
        q = QParams.from_phi(0.3 + 0.2j)
        assert np.isclose(q.q, cmath.exp(0.3 + 0.2j))
        assert np.isclose(q.q_half ** 2, q.q)
        assert np.isclose(q.power(1.5), cmath.exp(1.5 * (0.3 + 0.2j)))
        assert np.isclose(q.t, q.q - 1 / q.q)

    def test_inverse_flips_phi(self):
        q = QParams.from_phi(0.4)
        assert np.isclose(q.inverse().q, 1 / q.q)

    def test_root_of_unity_rejected(self):
        with pytest.raises(RejectedInputError):
            QParams.from_phi(2j * np.pi / 3)

    def test_root_of_unity_order(self):
        assert root_of_unity_order(2j * np.pi / 5) == 5
        assert root_of_unity_order(0.7j) is None


class TestBrackets:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        self.Y = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        self.q = QParams.from_phi(0.3 + 0.1j)

    def test_q_commutator(self):
        c = self.q.q_half
        expected = c * self.X @ self.Y - self.Y @ self.X / c
        assert np.allclose(q_commutator(self.X, self.Y, self.q), expected)

    def test_q_commutator_antisymmetry(self):
        qi = self.q.inverse()
        assert np.allclose(q_commutator(self.X, self.Y, self.q), -q_commutator(self.Y, self.X, qi))

    def test_commutator(self):
        assert np.allclose(commutator(self.X, self.X), 0)

    def test_shape_mismatch(self):
        with pytest.raises(RejectedInputError):
            q_commutator(self.X, np.eye(3), self.q)


class TestPauliChain:
    def test_site_one_is_leftmost(self):
        q = QParams.from_phi(0.2)
        X = np.array([[0, 1], [1, 0]])
        assert np.allclose(pauli_chain_op(1, PauliOp.x, 2, q), np.kron(X, np.eye(2)))
        assert np.allclose(pauli_chain_op(2, PauliOp.x, 2, q), np.kron(np.eye(2), X))

    def test_q_exponentials(self):
        q = QParams.from_phi(0.2)
        Qp = pauli_chain_op(1, PauliOp.q_exp_plus, 1, q)
        Qm = pauli_chain_op(1, PauliOp.q_exp_minus, 1, q)
        assert np.allclose(Qp @ Qm, np.eye(2))
        assert np.isclose(Qp[0, 0], q.q_half)

    def test_site_out_of_range(self):
        with pytest.raises(RejectedInputError):
            pauli_chain_op(3, PauliOp.z, 2, QParams.from_phi(0.2))


class TestSpectralHelpers:
    def test_match_spectra_finds_permutation(self):
        a = np.array([1.0, 2.0 + 1j, -3.0])
        b = a[[2, 0, 1]] + 1e-12
        dev, partner = match_spectra(a, b)
        assert dev < 1e-11
        assert np.allclose(b[partner], a, atol=1e-11)

    def test_group_eigenvalues(self):
        groups = group_eigenvalues(np.array([2.0, 1.0, 1.0 + 1e-12, 1.0 - 1e-12]))
        assert [len(g) for g in groups] == [3, 1]

    def test_eig_dense_blocks(self):
        rng = np.random.default_rng(3)
        P = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        M = P @ np.diag([1.0, 1.0, 2.0, 2.0, 2.0]) @ np.linalg.inv(P)
        ladder = eig_dense(M)
        assert ladder.sizes == (2, 3)
        assert np.allclose(ladder.values, [1.0, 2.0])
        for block in ladder.blocks:
            assert block.residual < 1e-9

    def test_eig_dense_rejects_jordan_block(self):
        with pytest.raises(DefectiveMatrixError):
            eig_dense(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_null_space_basis(self):
        M = np.diag([0.0, 0.0, 1.0, 2.0])
        basis, residual, gap = null_space_basis(M, 2)
        assert basis.shape == (4, 2)
        assert np.allclose(M @ basis, 0)
        assert residual == 0.0
        assert np.isclose(gap, 0.5)

    def test_block_norms(self):
        M = np.arange(9.0).reshape(3, 3)
        norms = block_norms(M, [1, 2])
        assert np.isclose(norms[0, 0], 0.0)
        assert np.isclose(norms[1, 1], np.linalg.norm(M[1:, 1:]))

    def test_phase_fix(self):
        v = np.array([[1j], [0.5]])
        fixed = phase_fix(v)
        assert np.isclose(fixed[0, 0], 1.0)


def test_residual_report_scale():
    report = ResidualReport.of([2e-10, -4e-10], tolerance=1e-9, scale=2.0)
    assert np.isclose(report.max_abs, 2e-10, rtol=1e-12, atol=0)
    assert report.passed


class TestTridiagResidual:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        self.B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        self.q = QParams.from_phi(0.3 + 0.1j)

    def test_outer_bracket_is_plain_commutator(self):
        qi = self.q.inverse()
        inner = q_commutator(self.A, q_commutator(self.A, self.B, self.q), qi)
        expected = self.A @ inner - inner @ self.A
        first, _ = tridiag_residual(self.A, self.B, 0.0, 0.0, self.q, tolerance=1e-9)
        assert np.isclose(first.max_abs, np.max(np.abs(expected)), rtol=1e-12)

    def test_identity_pair_passes(self):
        first, second = tridiag_residual(np.eye(3), np.eye(3), 1.0, 1.0, self.q)
        assert first.max_abs == 0.0 and second.max_abs == 0.0

    def test_random_pair_fails(self):
        first, second = tridiag_residual(self.A, self.B, 1.0, 1.0, self.q)
        assert not first.passed and not second.passed


def test_linalg_guard_wraps_lapack_failures():
    with pytest.raises(ConvergenceError) as info:
        with linalg_guard("solve"):
            np.linalg.solve(np.zeros((2, 2)), np.ones(2))
    assert info.value.detail == "solve failed"
    assert isinstance(info.value.__cause__, np.linalg.LinAlgError)
