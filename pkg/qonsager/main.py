import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from config import settings
from commands import bethe, descendants, sector_scan, spectrum, verify
from dependencies import load_config
from exceptions import ConfigError, ConvergenceError, QOnsagerError
from results import build_result, write_result

logger = logging.getLogger("qonsager")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qonsager",
        description="Tridiagonal algebra and q-Onsager toolkit: functional and XXZ chain representations",
    )
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Register commands
    for command in (verify, spectrum, sector_scan, bethe, descendants):
        command.register(subparsers)
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; 0 when every check passes, 1 on failure, 2 on a bad configuration"""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        config = load_config(args.config, args)
    except ConfigError as exc:
        logger.error("%s", exc.detail)
        return exc.exit_code

    try:
        result = args.handler(config, args)
    except ConfigError as exc:
        logger.error("%s", exc.detail)
        return exc.exit_code
    except QOnsagerError as exc:
        logger.error("%s failed: %s", args.command, exc.detail)
        result = build_result(args.command, config, [], {}, error=exc.to_dict())
    except np.linalg.LinAlgError as exc:
        error = ConvergenceError(f"{args.command} linear algebra failed", reason=str(exc))
        logger.error("%s", error.detail)
        result = build_result(args.command, config, [], {}, error=error.to_dict())

    write_result(result, args.out)
    return 0 if result.status == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
