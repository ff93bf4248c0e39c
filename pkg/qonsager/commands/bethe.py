import argparse
import cmath
import logging

import schemas
from dependencies import add_common_arguments, get_family, get_tolerance
from exceptions import ConfigError
from polynomial_eigenbasis import bethe_residual_hyperbolic, bethe_residuals, build_psi, hyperbolic_roots
from results import build_result, check

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("bethe", help="evaluate the Bethe equations for given or computed roots")
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: schemas.RunConfig, args: argparse.Namespace) -> schemas.ResultFile:
    """Bethe equation residuals of a functional family"""
    if config.representation != "functional":
        raise ConfigError("bethe runs on the functional representation")
    fam = get_family(config)
    tol = get_tolerance(config, 1e-8)
    checks, payload = [], {}

    if config.bethe is not None:
        # User-supplied roots
        if config.bethe.variable == "z":
            z_roots = list(config.bethe.roots)
            lambdas = hyperbolic_roots(z_roots)
        else:
            lambdas = list(config.bethe.roots)
            z_roots = [cmath.exp(2 * lam) for lam in lambdas]
        hyper = bethe_residual_hyperbolic(fam, lambdas)
        direct = bethe_residuals(fam, z_roots)
        checks.append(check("bethe_equations_hyperbolic", max(abs(r) for r in hyper), tol))
        checks.append(check("bethe_equations", max(direct, default=0.0), tol))
        payload.update({"lambda_roots": lambdas, "z_roots": z_roots, "hyperbolic_residuals": hyper,
                        "residuals": direct})
    else:
        # Roots of psi_n for n up to options.degree
        states = []
        for n in range(1, config.options.degree + 1):
            for st in build_psi(fam, n):
                hyper = bethe_residual_hyperbolic(fam, hyperbolic_roots(st.roots))
                states.append({"n": st.n, "eigenvalue": st.eigenvalue, "roots": st.roots,
                               "residuals": st.residuals, "hyperbolic_residuals": hyper})
                checks.append(check(f"bethe_equations_{st.n}_{st.m}", st.max_residual, tol))
        payload["states"] = states
    return build_result("bethe", config, checks, payload)
