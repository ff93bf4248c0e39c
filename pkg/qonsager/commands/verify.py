import argparse
import logging
from math import comb

import numpy as np

import schemas
from config import settings
from exceptions import PreconditionError
from dependencies import add_common_arguments, get_chain, get_family, get_tolerance
from functional_rep import (
    beta_terms,
    functional_tridiag_residual,
    gamma_terms,
    prest_residuals,
    sample_points,
)
from numerics_core import match_spectra, tridiag_residual
from results import build_result, check
from xxz_chain import (
    build_hamiltonian,
    build_I1_chain,
    discrete_basis,
    hamiltonian_commutator,
    ladder,
    tridiagonality,
)

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="check the tridiagonal relations and family constraints")
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: schemas.RunConfig, args: argparse.Namespace) -> schemas.ResultFile:
    """Verify the representation named in the configuration"""
    if config.representation == "functional":
        checks, payload = verify_functional(config)
    else:
        checks, payload = verify_chain(config)
    return build_result("verify", config, checks, payload)


def verify_functional(config: schemas.RunConfig):
    fam = get_family(config)
    tol = get_tolerance(config, settings.FUNCTIONAL_TOLERANCE)
    degree = config.options.degree
    checks = []

    # Both relations on polynomials up to the configured degree
    rel0, rel1 = functional_tridiag_residual(fam, degree, tolerance=tol)
    checks.append(check("q_dolan_grady_w0", rel0))
    checks.append(check("q_dolan_grady_w1", rel1))

    # Constraint functionals at seeded sample points
    zs = sample_points(np.random.default_rng(config.options.seed), config.options.samples, fam)
    beta = max(abs(sum(beta_terms(fam, z))) / max(sum(abs(t) for t in beta_terms(fam, z)), 1e-300) for z in zs)
    gamma = 0.0
    for z in zs:
        terms = gamma_terms(fam, z)
        gamma = max(gamma, abs(sum(terms) - fam.rho) / max(sum(abs(t) for t in terms) + abs(fam.rho), 1e-300))
    checks.append(check("beta_vanishes", beta, tol))
    checks.append(check("gamma_equals_rho", gamma, tol))

    mirror = max(abs(fam.phibar(z) - fam.phi(1 / z)) for z in zs)
    checks.append(check("phibar_is_phi_at_inverse", mirror, tol))

    payload = {
        "N": fam.N,
        "ladder_constant": fam.ladder_constant,
        "d": fam.d_const,
        "rho": fam.rho,
        "rho_star": fam.rho_star,
        "samples": zs,
    }
    if fam.N == 2:
        r1, r2 = prest_residuals(fam.chi, fam.xi)
        checks.append(check("parameter_relations", max(r1, r2), settings.PREST_TOLERANCE, soft=True,
                            note="informational; the sampled constraints decide"))
        payload["parameter_relations"] = [r1, r2]
    return checks, payload


def verify_chain(config: schemas.RunConfig):
    ops = get_chain(config)
    q, bp, N = ops.q, ops.params, ops.N
    tol = get_tolerance(config, settings.MATRIX_TOLERANCE)
    checks = []

    rel0, rel1 = tridiag_residual(ops.W0, ops.W1, ops.rho, ops.rho, q, tolerance=tol, normalize=True)
    checks.append(check("q_dolan_grady_w0", rel0))
    checks.append(check("q_dolan_grady_w1", rel1))

    # Spectra against the analytic ladders, with multiplicities
    mult = [comb(N, n) for n in range(N + 1)]
    lam = np.repeat(ladder(bp.alpha, N, q), mult)
    lam_star = np.repeat(ladder(bp.alpha_star, N, q), mult)
    dev0, _ = match_spectra(np.linalg.eigvals(ops.W0), lam)
    dev1, _ = match_spectra(np.linalg.eigvals(ops.W1), lam_star)
    scale = max(1.0, float(np.max(np.abs(lam))), float(np.max(np.abs(lam_star))))
    checks.append(check("w0_ladder", dev0 / scale, settings.SPECTRUM_MATCH_TOLERANCE))
    checks.append(check("w1_ladder", dev1 / scale, settings.SPECTRUM_MATCH_TOLERANCE))

    basis = discrete_basis(ops)
    far_w1, far_w0 = tridiagonality(ops, basis)
    checks.append(check("w1_block_tridiagonal", far_w1, settings.BLOCK_TOLERANCE))
    checks.append(check("w0_block_tridiagonal", far_w0, settings.BLOCK_TOLERANCE))

    I1 = build_I1_chain(ops)
    payload = {"N": N, "rho": ops.rho, "lambda": ladder(bp.alpha, N, q), "lambda_star": ladder(bp.alpha_star, N, q)}
    try:
        H = build_hamiltonian(N, bp, q)
    except PreconditionError as exc:
        logger.info("Hamiltonian skipped: %s", exc)
    else:
        comm = hamiltonian_commutator(H, I1)
        checks.append(check("hamiltonian_commutes_with_i1", comm, tol, soft=bp.raw is None))
        payload["hamiltonian_hermitian_defect"] = float(np.linalg.norm(H - H.conj().T))
    return checks, payload
