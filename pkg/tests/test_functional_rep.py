import numpy as np
import pytest

from conftest import CHI, CHI6
from exceptions import DomainError, FamilyConstraintError, RejectedInputError, UnsupportedFamilyError
from functional_rep import (
    LaurentPoly,
    RationalFunc,
    SymLaurentPoly,
    apply_w0,
    apply_w0_poly,
    basis_values,
    beta_functional,
    beta_terms,
    constraint_residual,
    elementary_symmetric,
    functional_tridiag_residual,
    gamma_functional,
    gamma_terms,
    make_family,
    prest_residuals,
    sample_points,
    solve_prest,
    w0_matrix,
    x_matrix,
)


class TestLaurentArithmetic:
    def test_product_and_inversion(self):
        f = LaurentPoly({-1: 2.0, 1: 1.0})
        g = LaurentPoly({0: 1.0, 2: -3.0})
        z = 0.7 + 0.2j
        assert np.isclose((f * g)(z), f(z) * g(z))
        assert np.isclose(f.inverted()(z), f(1 / z))
        assert np.isclose(f.shifted(1.3)(z), f(1.3 * z))

    def test_rational_pole_guard(self):
        r = RationalFunc(LaurentPoly.constant(1.0), LaurentPoly({0: 1.0, 1: -1.0}))
        with pytest.raises(DomainError):
            r(1.0)

    def test_x_squared(self):
        x2 = SymLaurentPoly.x().mul_x()
        assert np.allclose(x2.coeffs, [2.0, 0.0, 1.0])

    def test_from_x_roots(self):
        p = SymLaurentPoly.from_x_roots([1.0, 2.5 + 0.5j])
        z = np.roots([1, -1, 1])[0]  # z + 1/z = 1
        assert abs(p(z)) < 1e-12
        assert np.isclose(p.leading, 1.0)

    def test_roots_x_recovers_roots(self):
        xs = np.array([0.3, -1.2 + 0.4j, 2.0])
        p = SymLaurentPoly.from_x_roots(xs)
        found = np.sort_complex(p.roots_x())
        assert np.allclose(found, np.sort_complex(xs))

    def test_x_matrix_matches_mul_x(self):
        c = np.array([0.5, -1.0, 2.0, 0.0])
        X = x_matrix(3)
        expected = SymLaurentPoly(c).mul_x().padded(4)
        assert np.allclose(X @ c, expected)

    def test_basis_values(self):
        B = basis_values([2.0], 2)
        assert np.allclose(B, [[1.0, 2.5, 4.25]])

    def test_elementary_symmetric(self):
        assert np.allclose(elementary_symmetric([1.0, 2.0, 3.0]), [1, 6, 11, 6])


class TestFamily:
    def test_constants(self, family, q_real):
        C = np.prod(CHI) / q_real.q
        assert np.isclose(family.ladder_constant, C)
        assert np.isclose(family.d_const, 1 + C)
        assert np.isclose(family.rho, -(q_real.t ** 2) * C)
        assert np.isclose(family.rho_star, -(q_real.t ** 2))

    def test_phibar_is_phi_at_inverse(self, family):
        z = 0.6 - 0.9j
        assert np.isclose(family.phibar(z), family.phi(1 / z))
        assert np.isclose(family.mu(z), family.d_const - family.phi(z) - family.phibar(z))

    def test_operator_matches_pointwise_definition(self, family, rng):
        f = SymLaurentPoly(np.array([0.3, -1.0, 0.5]))
        zs = sample_points(rng, 5, family)
        assert np.allclose(family.operator().apply(f, zs), apply_w0(family, f, zs))

    def test_n3_unsupported(self, q_real):
        with pytest.raises(UnsupportedFamilyError):
            make_family(3, [0.1] * 8, [0.2] * 4, q_real)

    def test_wrong_parameter_count(self, q_real):
        with pytest.raises(RejectedInputError):
            make_family(1, CHI[:3], (), q_real)

    def test_pole_guard(self, family):
        with pytest.raises(DomainError):
            family.phi(1.0)


class TestConstraints:
    def test_n1_constraints_hold(self, family, rng):
        for z in sample_points(rng, 8, family):
            bt = beta_terms(family, z)
            assert abs(sum(bt)) <= 1e-10 * max(1.0, sum(abs(t) for t in bt))
            gt = gamma_terms(family, z)
            assert abs(sum(gt) - family.rho) <= 1e-10 * max(1.0, sum(abs(t) for t in gt))

    def test_functionals(self, family, rng):
        for z in sample_points(rng, 4, family):
            scale = max(1.0, sum(abs(t) for t in gamma_terms(family, z)))
            assert abs(beta_functional(family, z)) < 1e-9 * scale
            assert abs(gamma_functional(family, z) - family.rho) < 1e-9 * scale

    def test_reducible_n2_family_accepted(self, family_n2):
        assert constraint_residual(family_n2) < 1e-10

    def test_generic_n2_family_rejected(self, q_real):
        with pytest.raises(FamilyConstraintError):
            make_family(2, CHI + (0.8, -1.5), (0.45, 1.7), q_real, check="constraints")


class TestW0OnPolynomials:
    def test_triangular_with_ladder_diagonal(self, family, q_real):
        W = w0_matrix(family, 6)
        assert np.allclose(np.tril(W, -1), 0)
        ladder = [family.ladder_constant * q_real.q ** n + q_real.q ** -n for n in range(7)]
        assert np.allclose(np.diag(W), ladder, rtol=1e-9, atol=1e-9)

    def test_apply_w0_poly(self, family, rng):
        f = SymLaurentPoly(np.array([1.0, 0.5, -0.2, 0.1]))
        g, residual = apply_w0_poly(family, f, with_residual=True)
        assert residual < 1e-10
        zs = sample_points(rng, 6, family)
        assert np.allclose(g(zs), apply_w0(family, f, zs))
        assert g.degree <= 3

    def test_tridiagonal_relations(self, family):
        rel0, rel1 = functional_tridiag_residual(family, 6)
        assert rel0.passed, rel0.max_abs
        assert rel1.passed, rel1.max_abs

    def test_tridiagonal_relations_n2(self, family_n2):
        rel0, rel1 = functional_tridiag_residual(family_n2, 5)
        assert rel0.passed and rel1.passed

    @pytest.mark.parametrize("seed", range(5))
    def test_tridiagonal_relations_random_chi(self, q_real, seed):
        rng = np.random.default_rng(100 + seed)
        chi = rng.uniform(0.4, 1.4, 4) * rng.choice([-1.0, 1.0], 4)
        fam = make_family(1, chi, (), q_real)
        rel0, rel1 = functional_tridiag_residual(fam, 12)
        assert rel0.passed, rel0.max_abs
        assert rel1.passed, rel1.max_abs
        t = q_real.q - 1 / q_real.q
        assert np.isclose(fam.rho_star, -(t ** 2), rtol=1e-14)
        assert np.isclose(fam.rho, -(t ** 2) * np.prod(chi) / q_real.q, rtol=1e-14)

    def test_gauge_transformation(self, family, rng):
        op = family.operator()
        gauge = lambda z: z + 3.0
        psi = SymLaurentPoly(np.array([0.2, 1.0, -0.4]))
        zs = sample_points(rng, 5, family)
        transformed = op.gauge(gauge)
        lhs = transformed.apply(lambda z: gauge(z) * psi(z), zs)
        assert np.allclose(lhs, gauge(zs) * op.apply(psi, zs))


class TestParameterRelations:
    def test_solutions_satisfy_both_relations(self, q_real):
        solutions = solve_prest(CHI6)
        assert solutions
        for x1, x2 in solutions:
            r1, r2 = prest_residuals(CHI6, (x1, x2))
            assert max(r1, r2) < 1e-10
            # symmetric in the two xi
            assert prest_residuals(CHI6, (x2, x1)) == pytest.approx((r1, r2), abs=1e-12)
            make_family(2, CHI6, (x1, x2), q_real, check="prest")

    def test_pairs_reported_once(self):
        solutions = solve_prest(CHI6)
        for i, (a, b) in enumerate(solutions):
            for c, d in solutions[i + 1:]:
                assert min(abs(a - c) + abs(b - d), abs(a - d) + abs(b - c)) > 1e-6

    def test_wrong_arity(self):
        with pytest.raises(RejectedInputError):
            prest_residuals(CHI6[:4], (1.0, 2.0))

    def test_solved_pairs_fail_the_constraints(self, q_real):
        for xi in solve_prest(CHI6):
            with pytest.raises(FamilyConstraintError):
                make_family(2, CHI6, xi, q_real, check="constraints")

    def test_reducible_family_constraints_at_sixteen_points(self, family_n2, rng):
        for z in sample_points(rng, 16, family_n2):
            scale = max(1.0, sum(abs(t) for t in gamma_terms(family_n2, z)))
            assert abs(beta_functional(family_n2, z)) < 1e-8 * scale
            assert abs(gamma_functional(family_n2, z) - family_n2.rho) < 1e-8 * scale
