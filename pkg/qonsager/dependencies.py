import argparse
import logging
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from config import settings
from exceptions import ConfigError, QOnsagerError
from functional_rep import TridiagFamily, make_family
from hierarchy_spectral import CouplingSet, sector_kappa_star
from numerics_core import QParams
from schemas import RunConfig
from xxz_chain import BoundaryParams, ChainOperators, build_generators

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every subcommand"""
    parser.add_argument("--config", required=True, type=Path, help="TOML run configuration")
    parser.add_argument("--out", type=Path, default=None, help="result file (stdout when omitted)")
    parser.add_argument("--tol", type=float, default=None, help="override options.tolerance")
    parser.add_argument("--seed", type=int, default=None, help="override options.seed")
    parser.add_argument("--workers", type=int, default=None, help="worker threads for scans")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")


def load_config(path: Path, args: Optional[argparse.Namespace] = None) -> RunConfig:
    """Read and validate a run configuration; command-line flags win over the file"""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file {path} not found")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"configuration file {path} is not valid TOML: {exc}")

    options = raw.setdefault("options", {})
    if args is not None:
        for flag, key in (("tol", "tolerance"), ("seed", "seed"), ("workers", "workers")):
            value = getattr(args, flag, None)
            if value is not None:
                options[key] = value

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"invalid configuration at {where or 'top level'}: {first['msg']}")
    except QOnsagerError as exc:
        raise ConfigError(exc.detail, **exc.context)


def get_q(config: RunConfig) -> QParams:
    return QParams.from_phi(config.q.phi)


def get_tolerance(config: RunConfig, default: float) -> float:
    return config.options.tolerance if config.options.tolerance is not None else default


def get_family(config: RunConfig) -> TridiagFamily:
    if config.family is None:
        raise ConfigError("this command needs a [family] table")
    spec = config.family
    return make_family(spec.N, spec.chi, spec.xi, get_q(config))


def get_functional_couplings(config: RunConfig, fam: Optional[TridiagFamily] = None) -> CouplingSet:
    """Couplings of a functional run; options.sector_n retunes kappa* onto that sector"""
    cp = config.couplings
    if cp.k_plus is None or cp.k_minus is None:
        raise ConfigError("functional runs must give couplings.k_plus and couplings.k_minus")
    couplings = CouplingSet.create(
        kappa=cp.kappa,
        kappa_star=cp.kappa_star,
        kappa_plus=cp.kappa_plus,
        kappa_minus=cp.kappa_minus,
        k_plus=cp.k_plus,
        k_minus=cp.k_minus,
    )
    n = config.options.sector_n
    if n is not None and fam is not None:
        couplings = couplings.with_kappa_star(sector_kappa_star(fam, couplings, n))
        logger.info("kappa* tuned to the degree-%d sector: %s", n, couplings.kappa_star)
    return couplings


def get_boundary(config: RunConfig) -> BoundaryParams:
    if config.chain is None:
        raise ConfigError("this command needs a [chain] table")
    q = get_q(config)
    spec = config.chain
    if spec.raw is not None:
        return BoundaryParams.from_raw(spec.raw, q)
    cp = config.couplings
    return BoundaryParams.create(
        alpha=spec.alpha,
        alpha_star=spec.alpha_star,
        theta=spec.theta,
        q=q,
        kappa=cp.kappa,
        kappa_star=cp.kappa_star,
        kappa_plus=cp.kappa_plus,
        kappa_minus=cp.kappa_minus,
    )


def get_chain(config: RunConfig) -> ChainOperators:
    return build_generators(config.chain.N, get_boundary(config), get_q(config))


def get_workers(config: RunConfig) -> Optional[int]:
    return config.options.workers or settings.SCAN_WORKERS
