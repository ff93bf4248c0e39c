"""Result files: one JSON document per run, plus an optional CSV sidecar for scans."""

import csv
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from config import settings
from numerics_core import ResidualReport
from schemas import CheckRecord, Provenance, ResultFile, RunConfig, format_complex

logger = logging.getLogger(__name__)


def check(name: str, report_or_value, tolerance: Optional[float] = None, soft: bool = False,
          note: Optional[str] = None) -> CheckRecord:
    """CheckRecord from a ResidualReport or from a bare nonnegative number"""
    if isinstance(report_or_value, ResidualReport):
        value, tol = report_or_value.max_abs, report_or_value.tolerance
    else:
        value, tol = float(report_or_value), float(tolerance)
    return CheckRecord(name=name, max_abs=value, tolerance=tol, passed=bool(value <= tol), soft=soft, note=note)


def jsonable(value: Any) -> Any:
    """Complex numbers become "a+bi" strings, arrays become lists."""
    if isinstance(value, (complex, np.complexfloating)):
        return format_complex(complex(value))
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json", by_alias=True)
    return value


def build_result(command: str, config: RunConfig, checks: List[CheckRecord], payload: Dict[str, Any],
                 error: Optional[Dict[str, Any]] = None) -> ResultFile:
    if error is not None:
        status = "error"
        payload = {**payload, "error": error}
    else:
        status = "pass" if all(c.passed or c.soft for c in checks) else "fail"
    return ResultFile(
        command=command,
        status=status,
        config=config,
        checks=checks,
        payload=jsonable(payload),
        provenance=Provenance(
            timestamp=datetime.now(timezone.utc),
            seed=config.options.seed,
            tool_version=settings.APP_VERSION,
        ),
    )


def write_result(result: ResultFile, out: Optional[Path]) -> None:
    text = result.model_dump_json(indent=2, by_alias=True)
    if out is None:
        sys.stdout.write(text + "\n")
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text + "\n", encoding="utf-8")
    logger.info("wrote %s (%s)", out, result.status)


def write_csv(rows: Iterable[Dict[str, Any]], path: Path) -> None:
    rows = list(rows)
    if not rows:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote %d rows to %s", len(rows), path)
