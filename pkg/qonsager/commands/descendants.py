import argparse
import logging

import numpy as np

import schemas
from config import settings
from dependencies import add_common_arguments, get_chain, get_family, get_tolerance
from descendants import (
    FunctionalDescendants,
    build_descendants_matrix,
    direct_w_minus1,
    direct_w2,
    ratio_identity_check,
    w_minus1_eigen_check,
)
from functional_rep import sample_points
from polynomial_eigenbasis import build_psi
from results import build_result, check
from xxz_chain import discrete_basis

logger = logging.getLogger(__name__)

MAX_EIGEN_DEGREE = 6


def register(subparsers) -> None:
    parser = subparsers.add_parser("descendants", help="build W_-1 and W_2 and check their properties")
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: schemas.RunConfig, args: argparse.Namespace) -> schemas.ResultFile:
    """Descendant generators of the configured representation"""
    if config.representation == "functional":
        checks, payload = functional_descendants(config)
    else:
        checks, payload = chain_descendants(config)
    return build_result("descendants", config, checks, payload)


def chain_descendants(config: schemas.RunConfig):
    ops = get_chain(config)
    tol = get_tolerance(config, settings.MATRIX_TOLERANCE)
    desc = build_descendants_matrix(ops)
    c0, c1 = desc.commutation()
    checks = [check("w0_commutes_with_w_minus1", c0, tol), check("w1_commutes_with_w2", c1, tol)]
    basis = discrete_basis(ops)
    checks.append(check("w_minus1_block_diagonal", desc.off_diagonal(basis.V, basis.sizes), settings.BLOCK_TOLERANCE))
    return checks, {"N": ops.N, "commutators": [c0, c1]}


def functional_descendants(config: schemas.RunConfig):
    fam = get_family(config)
    tol = get_tolerance(config, 1e-8)
    zs = sample_points(np.random.default_rng(config.options.seed), config.options.samples, fam)
    desc = FunctionalDescendants(fam)
    checks = [check("coefficient_ratio", ratio_identity_check(fam, zs, tolerance=tol))]

    # Closed forms against the nested brackets on a few eigenfunctions
    top = min(config.options.degree, MAX_EIGEN_DEGREE)
    worst_m1, worst_2 = 0.0, 0.0
    for n in range(min(top, 3) + 1):
        psi = build_psi(fam, n)[0].polynomial()
        closed = np.asarray(desc.apply_w_minus1(psi, zs))
        direct = np.asarray(direct_w_minus1(fam, psi, zs))
        worst_m1 = max(worst_m1, float(np.max(np.abs(closed - direct)) / max(1.0, np.max(np.abs(direct)))))
        closed2 = np.asarray(desc.apply_w2(psi, zs))
        direct2 = np.asarray(direct_w2(fam, psi, zs))
        worst_2 = max(worst_2, float(np.max(np.abs(closed2 - direct2)) / max(1.0, np.max(np.abs(direct2)))))
    checks.append(check("w_minus1_closed_form", worst_m1, tol))
    checks.append(check("w2_closed_form", worst_2, tol))

    eigen = w_minus1_eigen_check(fam, top, zs)
    checks.append(check("psi_eigenfunctions_of_w_minus1", max(r for _, _, r in eigen), 1e-7))
    payload = {"eigenvalues": [{"n": n, "value": v, "residual": r} for n, v, r in eigen]}
    return checks, payload
