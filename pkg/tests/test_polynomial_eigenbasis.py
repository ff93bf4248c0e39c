import numpy as np
import pytest

from config import settings
from conftest import CHI
from exceptions import DegenerateParameterError, FamilyConstraintError, RejectedInputError, UnsupportedFamilyError
from functional_rep import apply_w0, basis_values, make_family, sample_points
from polynomial_eigenbasis import (
    aw_coeffs,
    bethe_residual_hyperbolic,
    build_psi,
    comrade_matrix,
    eigenvalue_ladder,
    hyperbolic_roots,
    psi_matrix,
    psi_values,
    recurrence_coefficients,
    recurrence_eval,
    recurrence_roots,
    root_ratios,
    z_from_x,
)


class TestEigenfunctions:
    def test_ladder(self, family, q_real):
        C = np.prod(CHI) / q_real.q
        for n in range(4):
            assert np.isclose(eigenvalue_ladder(family, n), C * q_real.q ** n + q_real.q ** -n)

    def test_degree_zero_is_constant(self, family):
        (state,) = build_psi(family, 0)
        assert state.roots == ()
        assert np.isclose(state.eigenvalue, eigenvalue_ladder(family, 0))

    @pytest.mark.parametrize("n", range(1, 9))
    def test_psi_is_w0_eigenfunction(self, family, rng, n):
        states = build_psi(family, n)
        assert len(states) == 1
        st = states[0]
        assert st.n == n
        assert len(st.roots) == n
        poly = st.polynomial()
        assert np.isclose(poly.leading, 1.0)
        zs = sample_points(rng, 6, family)
        assert np.allclose(apply_w0(family, poly, zs), st.eigenvalue * poly(zs), rtol=1e-7, atol=1e-7)

    @pytest.mark.parametrize("n", range(9))
    def test_roots_solve_bethe_equations(self, family, n):
        st = build_psi(family, n)[0]
        assert len(st.roots) == n
        assert st.max_residual < 1e-8

    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_roots_solve_hyperbolic_equations(self, family, n):
        st = build_psi(family, n)[0]
        hyper = bethe_residual_hyperbolic(family, hyperbolic_roots(st.roots))
        assert max(abs(r) for r in hyper) < 1e-6

    def test_perturbed_root_breaks_hyperbolic_equations(self, family):
        lams = hyperbolic_roots(build_psi(family, 3)[0].roots)
        lams[0] += 0.05
        assert max(abs(r) for r in bethe_residual_hyperbolic(family, lams)) > 1e-3

    def test_n2_reducible_family(self, family_n2, rng):
        st = build_psi(family_n2, 3)[0]
        zs = sample_points(rng, 6, family_n2)
        poly = st.polynomial()
        assert np.allclose(apply_w0(family_n2, poly, zs), st.eigenvalue * poly(zs), rtol=1e-7, atol=1e-7)
        assert st.max_residual < 1e-6

    def test_relations_only_family_rejected(self, prest_family):
        with pytest.raises(FamilyConstraintError):
            build_psi(prest_family, 2)

    def test_degree_cap(self, family):
        with pytest.raises(RejectedInputError):
            build_psi(family, settings.DEGREE_CAP + 1)

    def test_z_from_x_picks_outer_root(self):
        z = z_from_x([2.5])[0]
        assert np.isclose(z, 2.0)


class TestRecurrence:
    def test_closed_form_matches_w0_matrix(self, family):
        a, chat = recurrence_coefficients(family, 5)
        a_num, chat_num = recurrence_coefficients(family, 5, numeric=True)
        assert np.allclose(a, a_num, rtol=1e-6, atol=1e-8)
        assert np.allclose(chat, chat_num, rtol=1e-6, atol=1e-8)
        assert chat[0] == 0

    def test_forward_recurrence_matches_matrix(self, family, rng):
        n_max = 5
        a, chat = recurrence_coefficients(family, n_max)
        zs = sample_points(rng, 4, family)
        by_matrix = basis_values(zs, n_max) @ psi_matrix(family, n_max)
        assert np.allclose(psi_values(a, chat, n_max, zs).T, by_matrix, rtol=1e-7, atol=1e-7)

    def test_n2_numeric_recurrence(self, family_n2, rng):
        a, chat = recurrence_coefficients(family_n2, 4)
        zs = sample_points(rng, 4, family_n2)
        by_matrix = basis_values(zs, 4) @ psi_matrix(family_n2, 4)
        assert np.allclose(psi_values(a, chat, 4, zs).T, by_matrix, rtol=1e-7, atol=1e-7)

    def test_closed_form_is_n1_only(self, family_n2):
        with pytest.raises(UnsupportedFamilyError):
            aw_coeffs(family_n2, 1)

    def test_degenerate_denominator(self, q_real):
        # chi product equal to 1/q makes 1 - A q vanish at n=1
        chi = (0.5, 0.8, -1.0, 1.0 / (q_real.q * 0.5 * 0.8 * -1.0))
        fam = make_family(1, chi, (), q_real)
        aw_coeffs(fam, 0)
        with pytest.raises(DegenerateParameterError):
            aw_coeffs(fam, 1)

    def test_numeric_cap(self, family):
        with pytest.raises(RejectedInputError):
            recurrence_coefficients(family, settings.NUMERIC_DEGREE_CAP, numeric=True)


class TestRecurrenceRoots:
    def test_jacobi_roots_match_coefficient_roots(self, family):
        n = 4
        a, chat = recurrence_coefficients(family, n - 1)
        f = np.zeros(n + 1)
        f[n] = 1.0
        xs = recurrence_roots(a, chat, f)
        direct = build_psi(family, n)[0].polynomial().roots_x()
        assert np.allclose(np.sort_complex(xs), np.sort_complex(direct), rtol=1e-7)

    def test_comrade_roots_of_a_combination(self, family):
        a, chat = recurrence_coefficients(family, 3)
        f = np.array([0.4 - 0.2j, -1.1, 0.3j, 2.0])
        xs = recurrence_roots(a, chat, f)
        value, _ = recurrence_eval(a, chat, f, xs)
        assert np.allclose(value, 0, atol=1e-9)
        assert np.allclose(comrade_matrix(a, chat, f)[:2], comrade_matrix(a, chat, [0, 0, 0, 1])[:2])

    def test_derivative_matches_difference(self, family):
        a, chat = recurrence_coefficients(family, 4)
        f = [0.2, 0.0, -0.5, 1.0, 0.7]
        x, h = 0.9 + 0.3j, 1e-6
        _, slope = recurrence_eval(a, chat, f, x)
        plus, _ = recurrence_eval(a, chat, f, x + h)
        minus, _ = recurrence_eval(a, chat, f, x - h)
        assert np.isclose(slope, (plus - minus) / (2 * h), rtol=1e-6)

    def test_root_ratios_match_polynomial(self, family, q_real):
        st = build_psi(family, 3)[0]
        poly = st.polynomial()
        zs = np.array(st.roots)
        direct = poly(q_real.q * zs) / poly(zs / q_real.q)
        assert np.allclose(root_ratios(st.roots, q_real.q), direct, rtol=1e-8)

    def test_zero_top_coefficient_rejected(self, family):
        a, chat = recurrence_coefficients(family, 2)
        with pytest.raises(RejectedInputError):
            recurrence_roots(a, chat, [1.0, 2.0, 0.0])
