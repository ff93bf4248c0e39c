import argparse
import logging

import schemas
from config import settings
from dependencies import (
    add_common_arguments,
    get_boundary,
    get_family,
    get_functional_couplings,
    get_q,
    get_tolerance,
    get_workers,
)
from exceptions import ConfigError
from hierarchy_spectral import algebraic_sector_n, coeffs_ABC, sector_kappa_star
from polynomial_eigenbasis import recurrence_coefficients
from results import build_result, check, write_csv
from xxz_chain import build_generators, build_I1_chain, discrete_basis, reconstruct_sector_states, sector_scan

logger = logging.getLogger(__name__)

# sector states are reconstructed for the first few hits only
SECTOR_STATE_HITS = 5


def register(subparsers) -> None:
    parser = subparsers.add_parser("sector-scan", help="locate algebraic sectors along a parameter line")
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: schemas.RunConfig, args: argparse.Namespace) -> schemas.ResultFile:
    """Scan one parameter and report where I1 leaves a subspace invariant"""
    if config.scan is None:
        raise ConfigError("sector-scan needs a [scan] table")
    if config.representation == "functional":
        checks, payload, rows = functional_scan(config)
    else:
        checks, payload, rows = chain_scan(config)
    out = getattr(args, "out", None)
    if out is not None:
        write_csv(rows, out.with_suffix(".csv"))
    return build_result("sector-scan", config, checks, payload)


def functional_scan(config: schemas.RunConfig):
    if config.scan.parameter != "kappa_star":
        raise ConfigError("functional scans run over kappa_star only")
    fam = get_family(config)
    base = get_functional_couplings(config)
    cutoff = config.options.cutoff
    recurrence = recurrence_coefficients(fam, cutoff)
    points, rows = [], []
    for index, value in enumerate(config.scan.grid()):
        couplings = base.with_kappa_star(value)
        n = algebraic_sector_n(fam, couplings, n_max=cutoff)
        raising = [abs(coeffs_ABC(fam, couplings, k, recurrence=recurrence)[0]) for k in range(cutoff + 1)]
        closest = min(range(cutoff + 1), key=lambda k: raising[k])
        points.append({"index": index, "value": value, "sector_n": n, "closest_n": closest,
                       "min_raising": raising[closest]})
        rows.append({"index": index, "re": value.real, "im": value.imag, "kind": "B_vanish" if n is not None else "none",
                     "n": "" if n is None else n, "min_b_norm": raising[closest], "min_c_norm": ""})
    sector_values = {k: sector_kappa_star(fam, base, k) for k in range(min(cutoff, 8) + 1)}
    return [], {"points": points, "sector_kappa_star": sector_values}, rows


def chain_scan(config: schemas.RunConfig):
    q = get_q(config)
    base = get_boundary(config)
    N = config.chain.N
    tol = get_tolerance(config, settings.BLOCK_TOLERANCE)
    points = sector_scan(N, base, q, config.scan.parameter, config.scan.grid(), workers=get_workers(config))

    rows, hits = [], []
    for p in points:
        for r in p.reports:
            rows.append({
                "index": p.index,
                "re": p.value.real,
                "im": p.value.imag,
                "kind": r.kind,
                "n": "" if r.n is None else r.n,
                "min_b_norm": min(p.b_norms, default=""),
                "min_c_norm": min(p.c_norms, default=""),
            })
            if r.kind in ("B_vanish", "C_vanish"):
                hits.append((p, r))

    # Reduced recursion at the first hits
    checks, reconstructed = [], []
    for p, r in hits[:SECTOR_STATE_HITS]:
        bp = base.with_parameter(config.scan.parameter, p.value, q)
        ops = build_generators(N, bp, q)
        states = reconstruct_sector_states(ops, discrete_basis(ops), r, I1=build_I1_chain(ops))
        worst = max(s.recursion_residual for s in states)
        reconstructed.append({"index": p.index, "kind": r.kind, "n": r.n, "values": [s.value for s in states],
                              "recursion_residual": worst,
                              "collinearity": max(s.collinearity for s in states)})
        checks.append(check(f"reduced_recursion_{p.index}", worst, tol))

    payload = {
        "points": [pt.model_dump(mode="json") for pt in points],
        "hits": len(hits),
        "degenerate": sum(any(r.kind == "degenerate" for r in pt.reports) for pt in points),
        "sector_states": reconstructed,
    }
    return checks, payload, rows
