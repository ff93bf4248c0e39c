import numpy as np
import pytest

import hierarchy_spectral
from conftest import CHI, CHI6
from exceptions import FamilyConstraintError, PreconditionError, RejectedInputError
from functional_rep import elementary_symmetric, sample_points
from hierarchy_spectral import (
    CouplingSet,
    I1FunctionalOp,
    algebraic_sector_n,
    assemble_recurrence,
    check_nondegeneracy,
    coeffs_ABC,
    qdiff_residual,
    raising_component,
    sector_kappa_star,
    solve_algebraic,
    solve_nonalgebraic,
    spectrum_coefficients,
    spectrum_formula,
)
from polynomial_eigenbasis import aw_coeffs, eigenvalue_ladder


def in_sector(fam, couplings, n):
    return couplings.with_kappa_star(sector_kappa_star(fam, couplings, n))


class TestCouplings:
    def test_zero_k_rejected(self):
        with pytest.raises(PreconditionError):
            CouplingSet.create(kappa=1, kappa_star=0, kappa_plus=0, kappa_minus=0, k_plus=0, k_minus=1)

    def test_ratios(self, couplings):
        assert np.isclose(couplings.ratio_plus, 0.002)
        assert np.isclose(couplings.ratio_minus, 0.003)


class TestRecurrenceCoefficients:
    def test_askey_wilson_without_q_brackets(self, family):
        plain = CouplingSet.create(kappa=1.0, kappa_star=0.7, kappa_plus=0, kappa_minus=0, k_plus=1, k_minus=1)
        for n in range(1, 4):
            B, C, A = coeffs_ABC(family, plain, n, normalization="askey_wilson")
            aw = aw_coeffs(family, n)
            assert np.allclose([B, C, A], [0.7 * aw.b, 0.7 * aw.c, 0.7 * aw.a])

    @pytest.mark.parametrize("n", [0, 2, 4])
    def test_sector_condition_kills_raising_term(self, family, couplings, n):
        B, _, _ = coeffs_ABC(family, in_sector(family, couplings, n), n)
        assert abs(B) < 1e-12

    @pytest.mark.parametrize("n", [1, 3])
    def test_raising_term_matches_operator(self, family, couplings, n):
        B, _, _ = coeffs_ABC(family, couplings, n)
        assert np.isclose(raising_component(family, couplings, n), B, rtol=1e-6, atol=1e-9)

    def test_matrix_layout(self, family, couplings):
        system = assemble_recurrence(family, couplings, 4)
        M = system.matrix
        assert np.allclose(np.triu(M, 2), 0) and np.allclose(np.tril(M, -2), 0)
        assert np.isclose(M[2, 1], system.B[1])
        assert np.isclose(M[1, 2], system.C[2])

    def test_unknown_normalization(self, family, couplings):
        with pytest.raises(RejectedInputError):
            coeffs_ABC(family, couplings, 1, normalization="orthonormal")


class TestAlgebraicSector:
    def test_sector_detection(self, family, couplings):
        assert algebraic_sector_n(family, in_sector(family, couplings, 3)) == 3
        assert algebraic_sector_n(family, couplings.with_kappa_star(123.0)) is None

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_states(self, family, couplings, rng, n):
        closed = in_sector(family, couplings, n)
        states = solve_algebraic(family, closed, n)
        assert len(states) == n + 1
        zs = sample_points(rng, 6, family)
        op = I1FunctionalOp(family, closed)
        for st in states:
            assert len(st.state.roots) == n
            assert st.state.max_residual < 1e-8
            poly = st.state.polynomial()
            assert np.allclose(op.apply(poly, zs), st.eigenvalue * poly(zs), rtol=1e-7, atol=1e-9)
            assert np.isclose(spectrum_formula(family, closed, n, st.state.roots), st.eigenvalue, rtol=1e-8, atol=1e-10)

    def test_states_n2_family(self, family_n2, couplings):
        closed = in_sector(family_n2, couplings, 2)
        for st in solve_algebraic(family_n2, closed, 2):
            assert np.isclose(spectrum_formula(family_n2, closed, 2, st.state.roots), st.eigenvalue, rtol=1e-6)

    def test_wrong_kappa_star(self, family, couplings):
        with pytest.raises(PreconditionError):
            solve_algebraic(family, couplings.with_kappa_star(1.0), 2)

    def test_relations_only_family_rejected(self, prest_family, couplings):
        with pytest.raises(FamilyConstraintError):
            solve_algebraic(prest_family, couplings, 2)

    def test_n1_coefficient_table(self, family, q_real):
        co = spectrum_coefficients(family)
        e = elementary_symmetric(CHI)
        assert np.isclose(co["F_plus"], e[4] / q_real.q)
        assert co["F_minus"] == 1.0
        assert np.isclose(co["G_plus"], e[3] / q_real.q)
        assert np.isclose(co["G_minus"], e[1])

    def test_bare_g_plus_misses_sector_eigenvalue(self, family, couplings, monkeypatch):
        closed = in_sector(family, couplings, 2)
        st = solve_algebraic(family, closed, 2)[0]
        co = spectrum_coefficients(family)
        bare = dict(co, G_plus=elementary_symmetric(CHI)[3])
        monkeypatch.setattr(hierarchy_spectral, "spectrum_coefficients", lambda fam: bare)
        assert not np.isclose(spectrum_formula(family, closed, 2, st.state.roots), st.eigenvalue, rtol=1e-8, atol=1e-10)

    def test_n2_coefficient_table(self, prest_family, q_real):
        co = spectrum_coefficients(prest_family)
        e = elementary_symmetric(CHI6)
        x1, x2 = prest_family.xi
        f_plus = e[6] / (x1 * x2 * q_real.q)
        assert np.isclose(co["F_plus"], f_plus)
        assert co["F_minus"] == 1.0
        assert np.isclose(co["G_plus"], e[5] / (x1 * x2 * q_real.q) - f_plus * (1 / x1 + 1 / x2))
        assert np.isclose(co["G_minus"], e[1] - x1 - x2)

    def test_formula_without_q_brackets(self, family):
        plain = CouplingSet.create(kappa=1.5, kappa_star=0, kappa_plus=0, kappa_minus=0, k_plus=1, k_minus=1)
        for n in range(4):
            value = spectrum_formula(family, plain, n, [1.7] * n)
            assert np.isclose(value, 1.5 * eigenvalue_ladder(family, n))


class TestNonAlgebraic:
    def test_pairs_sorted_and_complete(self, family, couplings):
        pairs = solve_nonalgebraic(family, couplings, 10)
        assert len(pairs) == 11
        flags = [p.stable for p in pairs]
        assert flags == sorted(flags, reverse=True)

    def test_closed_sector_values_are_stable(self, family, couplings, rng):
        closed = in_sector(family, couplings, 2)
        exact = [st.eigenvalue for st in solve_algebraic(family, closed, 2)]
        pairs = solve_nonalgebraic(family, closed, 16)
        zs = sample_points(rng, 6, family)
        for value in exact:
            pair = min(pairs, key=lambda p: abs(p.value - value))
            assert abs(pair.value - value) < 1e-8 * max(1.0, abs(value))
            assert pair.stable
            assert qdiff_residual(family, closed, pair.value, pair.coefficients, zs).passed

    def test_stable_values_survive_wider_cutoff(self, family, couplings):
        closed = in_sector(family, couplings, 2)
        narrow = solve_nonalgebraic(family, closed, 24)
        wide = np.array([p.value for p in solve_nonalgebraic(family, closed, 32)])
        settled = [p for p in narrow if p.stable and p.drift < 1e-9 * max(1.0, abs(p.value))]
        assert len(settled) >= 3
        for p in settled:
            assert np.min(np.abs(wide - p.value)) < 1e-8 * max(1.0, abs(p.value))

    def test_cutoff_range(self, family, couplings):
        with pytest.raises(RejectedInputError):
            solve_nonalgebraic(family, couplings, 3)


def test_nondegeneracy_gap():
    assert np.isclose(check_nondegeneracy([1.0, 1.5, 3.0]), 0.5)
    assert check_nondegeneracy([2.0]) == float("inf")
