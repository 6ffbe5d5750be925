"""
Service layer for reporting module.

Renders count and bound reports as CSV and JSON. Output is byte-stable:
fixed column and key order, floats formatted with %.12e, LF line endings.
"""

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

from pydantic import BaseModel

from src.core.exceptions import ReportGenerationError, ValidationError
from src.core.logging import get_logger
from src.modules.counting.schemas import CountReport

from . import metrics

logger = get_logger("reporting.service")

FLOAT_FORMAT = "%.12e"
COUNT_REPORT_COLUMNS = ("N", "ell", "delta", "L", "heart", "g", "count", "rhs", "ratio", "flag")


def format_cell(value: Any) -> str:
    """CSV cell: empty for None, 0/1 for flags, %.12e for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _stable_floats(value: Any) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(FLOAT_FORMAT % value)
    if isinstance(value, dict):
        return {k: _stable_floats(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_stable_floats(v) for v in value]
    return value


def report_columns(report: BaseModel) -> Sequence[str]:
    return getattr(report, "CSV_COLUMNS", COUNT_REPORT_COLUMNS)


def render_csv(report: BaseModel) -> str:
    """One row per grid point, header from the report's column list."""
    columns = report_columns(report)
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(columns)
    for row in report.rows:
        data = row.model_dump()
        writer.writerow([format_cell(data.get(col)) for col in columns])
    return output.getvalue()


def render_json(report: BaseModel) -> str:
    """Full report (rows plus metadata) with stable float formatting."""
    payload = _stable_floats(report.model_dump(mode="json"))
    return json.dumps(payload, indent=2, ensure_ascii=True) + "\n"


def report_emit(report: BaseModel, report_format: str, path: Path) -> Path:
    """
    Write a report to disk.

    Args:
        report: CountReport or BoundReport
        report_format: "csv" or "json"
        path: Destination file

    Returns:
        The written path

    Raises:
        ValidationError: for an unknown format
        ReportGenerationError: if the file cannot be written
    """
    if report_format == "csv":
        content = render_csv(report)
    elif report_format == "json":
        content = render_json(report)
    else:
        raise ValidationError(f"Unknown report format '{report_format}'", field="format", value=report_format)

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
    except OSError as e:
        logger.error(
            "Failed to write report",
            event="report_write_failed",
            path=str(path),
            report_format=report_format,
            error_message=str(e),
        )
        raise ReportGenerationError(
            f"Cannot write report to {path}: {e}", report_format=report_format, path=str(path)
        ) from e

    metrics.record_report_written(report_format)
    logger.info(
        "Report written",
        event="report_written",
        path=str(path),
        report_format=report_format,
        rows=len(report.rows),
    )
    return path


def emit_all(report: BaseModel, stem: Path, formats: Iterable[str] = ("csv", "json")) -> list[Path]:
    """Write <stem>.csv and <stem>.json."""
    stem = Path(stem)
    return [report_emit(report, fmt, stem.parent / f"{stem.name}.{fmt}") for fmt in formats]


def count_report_schema() -> str:
    """Published JSON schema of CountReport, rendered deterministically."""
    return json.dumps(CountReport.model_json_schema(), indent=2, sort_keys=True) + "\n"


def write_schema(path: Path) -> Path:
    """Write the CountReport schema to `path`."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(count_report_schema(), encoding="utf-8", newline="\n")
    except OSError as e:
        raise ReportGenerationError(f"Cannot write schema to {path}: {e}", report_format="schema", path=str(path)) from e
    logger.info("Schema written", event="schema_written", path=str(path))
    return path
