import json
from pathlib import Path

import pytest

from src.core.exceptions import ValidationError
from src.modules.counting.enums import Proposition
from src.modules.counting.schemas import CountReport, CountRow, ReportMetadata, SkippedPoint
from src.modules.reporting import metrics
from src.modules.reporting.service import (
    count_report_schema,
    emit_all,
    format_cell,
    render_csv,
    render_json,
    report_emit,
    write_schema,
)

SCHEMA_FILE = Path(__file__).resolve().parents[1] / "schemas" / "count_report.schema.json"


@pytest.fixture
def report() -> CountReport:
    rows = [
        CountRow(N=1, ell=1, delta=1.0, L=1.0, g="I", count=608, rhs=16.0, ratio=38.0, flag=False),
        CountRow(N=1, ell=1, delta=0.5, L=1.0, heart=0.5, g="I", count=352, rhs=3.0, ratio=117.0, flag=True),
    ]
    metadata = ReportMetadata(
        timestamp="2026-01-01T00:00:00+00:00",
        config_hash="abc123",
        runtime_s=0.25,
        constants_version="1",
        skipped=[SkippedPoint(N=6, ell=1, delta=1.0, L=8.0, g="I", reason="budget")],
    )
    return CountReport(proposition=Proposition.OMEGA, constant=64.0, rows=rows, metadata=metadata)


@pytest.mark.parametrize(
    "value, expected",
    [(None, ""), (True, "1"), (False, "0"), (0.25, "2.500000000000e-01"), (608, "608"), (Proposition.PSI, "psi")],
)
def test_format_cell(value, expected):
    assert format_cell(value) == expected


def test_csv_layout(report):
    text = render_csv(report)
    lines = text.split("\n")
    assert lines[0] == "N,ell,delta,L,heart,g,count,rhs,ratio,flag"
    assert lines[1] == "1,1,1.000000000000e+00,1.000000000000e+00,,I,608,1.600000000000e+01,3.800000000000e+01,0"
    assert lines[2].endswith(",1")
    assert "\r" not in text
    assert text.endswith("\n")


def test_json_is_deterministic(report):
    first = render_json(report)
    assert first == render_json(report)
    payload = json.loads(first)
    assert payload["proposition"] == "omega"
    assert payload["metadata"]["skipped"][0]["reason"] == "budget"
    assert [row["count"] for row in payload["rows"]] == [608, 352]


def test_unknown_format_rejected(report, tmp_path):
    with pytest.raises(ValidationError):
        report_emit(report, "xml", tmp_path / "report.xml")


def test_emit_all_keeps_dotted_stem(report, tmp_path):
    paths = emit_all(report, tmp_path / "bound-N1-T3.5")
    assert [p.name for p in paths] == ["bound-N1-T3.5.csv", "bound-N1-T3.5.json"]
    assert all(p.exists() for p in paths)
    assert paths[0].read_text(encoding="utf-8") == render_csv(report)


def test_published_schema_structure():
    schema = json.loads(SCHEMA_FILE.read_text(encoding="utf-8"))
    assert schema["title"] == "CountReport"
    assert set(schema["required"]) == {"proposition", "constant", "rows", "metadata"}
    assert {"CountRow", "Proposition", "ReportMetadata", "SkippedPoint"} <= set(schema["$defs"])
    generated = json.loads(count_report_schema())
    assert set(generated["$defs"]["CountRow"]["properties"]) == set(schema["$defs"]["CountRow"]["properties"])
    assert generated["$defs"]["Proposition"]["enum"] == schema["$defs"]["Proposition"]["enum"]


def test_write_schema(tmp_path):
    path = write_schema(tmp_path / "out" / "schema.json")
    assert path.read_text(encoding="utf-8") == count_report_schema()


def test_write_metrics(tmp_path):
    metrics.record_check("golden-counts", True)
    path = metrics.write_metrics(tmp_path / "metrics.prom")
    assert "thetalab_checks_total" in path.read_text(encoding="utf-8")
