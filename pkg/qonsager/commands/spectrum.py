import argparse
import logging

import numpy as np

import schemas
from config import settings
from exceptions import PreconditionError
from dependencies import add_common_arguments, get_chain, get_family, get_functional_couplings, get_tolerance
from functional_rep import sample_points
from hierarchy_spectral import (
    algebraic_sector_n,
    qdiff_residual,
    solve_algebraic,
    solve_nonalgebraic,
    spectrum_formula,
)
from polynomial_eigenbasis import bethe_residual_hyperbolic, build_psi, hyperbolic_roots
from results import build_result, check
from xxz_chain import (
    build_hamiltonian,
    build_I1_chain,
    discrete_basis,
    expand_eigenstates,
    hamiltonian_commutator,
    qdisc_residual,
)

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("spectrum", help="eigenvalues and eigenstates of the charge I1")
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: schemas.RunConfig, args: argparse.Namespace) -> schemas.ResultFile:
    """Spectrum of I1 in the configured representation"""
    if config.representation == "functional":
        checks, payload = functional_spectrum(config)
    else:
        checks, payload = chain_spectrum(config)
    return build_result("spectrum", config, checks, payload)


def functional_spectrum(config: schemas.RunConfig):
    fam = get_family(config)
    couplings = get_functional_couplings(config, fam)
    tol = get_tolerance(config, 1e-6)
    checks, payload = [], {"kappa_star": couplings.kappa_star}
    zs = sample_points(np.random.default_rng(config.options.seed), config.options.samples, fam)

    # Algebraic sector, when kappa* closes one
    n = algebraic_sector_n(fam, couplings)
    payload["sector_n"] = n
    if n is not None:
        states = solve_algebraic(fam, couplings, n)
        formula_gap, bethe_worst = 0.0, 0.0
        sector = []
        for st in states:
            roots = st.state.roots
            predicted = spectrum_formula(fam, couplings, n, roots)
            formula_gap = max(formula_gap, abs(predicted - st.eigenvalue) / max(1.0, abs(st.eigenvalue)))
            bethe_worst = max(bethe_worst, st.state.max_residual)
            sector.append({
                "eigenvalue": st.eigenvalue,
                "formula": predicted,
                "roots": roots,
                "bethe_residuals": st.state.residuals,
            })
        checks.append(check("spectrum_formula", formula_gap, tol))
        checks.append(check("bethe_equations_i1", bethe_worst, tol))
        payload["algebraic"] = sector
        # the W0 Bethe roots of psi_n in hyperbolic form
        if fam.N == 1 and n > 0:
            psi = build_psi(fam, n)[0]
            hyper = bethe_residual_hyperbolic(fam, hyperbolic_roots(psi.roots))
            hyper_worst = max(abs(r) for r in hyper)
            checks.append(check("bethe_equations_hyperbolic", hyper_worst, tol))

    # Truncated recurrence for everything else
    pairs = solve_nonalgebraic(fam, couplings, config.options.cutoff)
    stable = [p for p in pairs if p.stable]
    worst = 0.0
    for p in stable[:8]:
        worst = max(worst, qdiff_residual(fam, couplings, p.value, p.expansion(), zs, tolerance=tol).max_abs)
    if stable:
        checks.append(check("qdiff_residual", worst, tol))
    payload["nonalgebraic"] = [{"eigenvalue": p.value, "stable": p.stable, "drift": p.drift} for p in pairs]
    logger.info("%d of %d truncated eigenvalues are stable", len(stable), len(pairs))
    return checks, payload


def chain_spectrum(config: schemas.RunConfig):
    ops = get_chain(config)
    tol = get_tolerance(config, 1e-7)
    basis = discrete_basis(ops)
    I1 = build_I1_chain(ops)
    pairs = expand_eigenstates(ops, basis, I1=I1)
    checks = []

    worst = max(qdisc_residual(ops, basis, p.value, p.vector, tolerance=tol).max_abs for p in pairs)
    checks.append(check("qdisc_residual", worst, tol))

    payload = {
        "eigenvalues": [p.value for p in pairs],
        "block_weights": [p.block_weights for p in pairs],
    }
    try:
        H = build_hamiltonian(ops.N, ops.params, ops.q)
    except PreconditionError as exc:
        logger.info("Hamiltonian skipped: %s", exc)
    else:
        checks.append(check("hamiltonian_commutes_with_i1", hamiltonian_commutator(H, I1),
                            settings.MATRIX_TOLERANCE, soft=ops.params.raw is None))
    return checks, payload
