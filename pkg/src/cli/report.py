"""
Report emission: JSON document, CSV tables and whitespace-delimited plot data
"""

import json
import logging
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np
import pandas as pd

try:
    from ..config import Config
    from ..dynamics.flow import Trajectory
except ImportError:
    from config import Config
    from dynamics.flow import Trajectory

from .runner import ReportDocument

logger = logging.getLogger(__name__)

ORBIT_COLUMNS = ["id", "period", "action", "residual", "multiplicity", "family", "contractible"]


class ReportWriteError(OSError):
    """A report artefact could not be written"""


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def report_json(report: ReportDocument, normalize: bool = False) -> str:
    """Stable JSON text (sorted keys, fixed indentation)"""
    return json.dumps(report.to_dict(normalize), indent=2, sort_keys=True, default=_json_default) + "\n"


def orbit_frame(report: ReportDocument) -> pd.DataFrame:
    """Orbit table with columns id, period, action, residual and the family flags"""
    rows = [
        {"id": i, "period": o.period, "action": o.action, "residual": o.residual,
         "multiplicity": o.multiplicity, "family": o.family, "contractible": o.contractible}
        for i, o in enumerate(report.orbits)
    ]
    return pd.DataFrame(rows, columns=ORBIT_COLUMNS)


def currents_frame(report: ReportDocument) -> pd.DataFrame:
    rows = [
        {"measure": row["measure"]["kind"], "action": row["value"], "error": row["error"],
         "shifted_action": row["shifted_value"], "mass": row["mass"],
         "boundary_residual": row["boundary_residual"], "boundary_error": row.get("boundary_error")}
        for row in report.currents
    ]
    return pd.DataFrame(rows)


def write_trajectory(trajectory: Trajectory, path: Path,
                     coordinates: Optional[Sequence[str]] = None) -> Path:
    """Trajectory CSV with columns t, coordinates, drift"""
    try:
        trajectory.to_frame(coordinates).to_csv(path, index=False, float_format="%.12g")
    except OSError as e:
        raise ReportWriteError(f"cannot write trajectory to {path}: {e}") from e
    return path


def write_ue_curve(report: ReportDocument, path: Path) -> Path:
    """ue_curve.dat: (horizon, max_deviation) rows under a one-line header comment"""
    diagnostic = report.diagnostic
    data = np.column_stack([diagnostic.horizons, diagnostic.curve])
    try:
        np.savetxt(path, data, fmt="%.12e", header="horizon max_deviation", comments="# ")
    except OSError as e:
        raise ReportWriteError(f"cannot write plot data to {path}: {e}") from e
    return path


def emit_report(report: ReportDocument, path: str, formats: Sequence[str] = ("json",),
                normalize: bool = False) -> List[Path]:
    """
    Write the report artefacts into a directory.

    Args:
        report: ReportDocument from run_scenario
        path: Output directory (created when missing)
        formats: Subset of json, csv, plotdata
        normalize: Drop timings from the JSON document

    Returns:
        Paths written, in a fixed order

    Raises:
        ReportWriteError: filesystem errors, with the offending path
    """
    unknown = [f for f in formats if f not in Config.SUPPORTED_FORMATS]
    if unknown:
        raise ValueError(f"unsupported report formats {unknown}; expected {Config.SUPPORTED_FORMATS}")

    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportWriteError(f"cannot create report directory {out}: {e}") from e

    written: List[Path] = []
    if "json" in formats:
        target = out / "report.json"
        try:
            target.write_text(report_json(report, normalize), encoding="utf-8")
        except OSError as e:
            raise ReportWriteError(f"cannot write report to {target}: {e}") from e
        written.append(target)

    if "csv" in formats:
        tables = []
        if report.orbits:
            tables.append(("orbits.csv", orbit_frame(report)))
        if report.currents:
            tables.append(("currents.csv", currents_frame(report)))
        for name, frame in tables:
            target = out / name
            try:
                frame.to_csv(target, index=False, float_format="%.12g")
            except OSError as e:
                raise ReportWriteError(f"cannot write table to {target}: {e}") from e
            written.append(target)
        if report.trajectory is not None:
            written.append(write_trajectory(report.trajectory, out / "trajectory.csv", report.coordinates))

    if "plotdata" in formats and report.diagnostic is not None:
        written.append(write_ue_curve(report, out / "ue_curve.dat"))

    logger.info(f"Wrote {len(written)} report files to {out}")
    return written
