import json

import pytest

from src.cli.app import cli_dispatch
from src.core import constants
from src.core.exceptions import ConfigurationError, ValidationError
from src.core.logging import configure_logging
from src.modules.harness.checks import CHECKS, run_check
from src.modules.harness.config_file import dump_run_config, load_run_config, parse_run_config
from src.modules.harness.runner import run_grid
from src.modules.harness.schemas import RunConfig, parse_number
from src.modules.reporting.service import count_report_schema
from src.modules.testfn.enums import WindowType


@pytest.fixture(autouse=True)
def restore_logging():
    yield
    configure_logging(log_level="ERROR", force=True)


RUN_FILE = """
[run]
command = verify-bound
workers = 2

[lattice]
N = 1, 2, 3, 5
deltas = 1, 1/4, 1/16
Ls = 1, 2, 4
hearts = none, 1/2
g = I; diag:4

[window]
kind = cosine-sum
alpha = 0.3
coefficients = 1, -1/2
frequencies = 0, 0.4
"""


# ---------- run files ----------


@pytest.mark.parametrize("text, expected", [("0.25", 0.25), ("1/4", 0.25), ("1e-3", 1e-3), (" 2 ", 2.0)])
def test_parse_number(text, expected):
    assert parse_number(text) == expected


def test_parse_run_file():
    config = parse_run_config(RUN_FILE)
    assert config.run.workers == 2
    assert config.lattice.N == [1, 2, 3, 5]
    assert config.lattice.deltas == [1.0, 0.25, 0.0625]
    assert config.lattice.hearts == [None, 0.5]
    assert config.lattice.g == ["I", "diag:4"]
    assert config.window.kind is WindowType.COSINE_SUM
    window = config.window.to_window()
    assert window.point_masses() == [(1.0, 0.0), (-0.5, 0.4)]
    grid = config.lattice.to_grid()
    assert grid.g_values == ["I", "diag:4"]


@pytest.mark.parametrize(
    "text",
    [
        "[output]\npath = x\n",
        "[run]\nworkers = 0\n",
        "[lattice]\nLs = 1, -2\n",
        "[lattice]\ncolour = red\n",
        "[run\n",
    ],
)
def test_bad_run_files(text):
    with pytest.raises(ConfigurationError):
        parse_run_config(text)


def test_dump_then_load(tmp_path):
    config = parse_run_config(RUN_FILE)
    path = tmp_path / "run.ini"
    dump_run_config(config, path)
    assert load_run_config(path) == config


def test_missing_run_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_run_config(tmp_path / "absent.ini")


def test_default_run_config_renders():
    text = dump_run_config(RunConfig())
    assert text.startswith("[run]\ncommand = verify-bound\n")
    assert parse_run_config(text) == RunConfig()


# ---------- worker pool ----------


@pytest.mark.parametrize("workers", [1, 2])
def test_run_grid_keeps_order(workers):
    items = [-3, 1, -4, 1, -5, 9, -2, 6]
    assert run_grid(abs, items, max_workers=workers) == [3, 1, 4, 1, 5, 9, 2, 6]


def test_run_grid_empty():
    assert run_grid(abs, [], max_workers=4) == []


# ---------- checks ----------


def test_check_registry():
    assert list(CHECKS) == [
        "closed-form",
        "route-agreement",
        "selberg-round-trip",
        "fourier-identity",
        "pde-residual",
        "golden-counts",
        "proposition-sweeps",
        "emptiness-thresholds",
        "spacing-lemma",
        "theta-golden",
        "conjecture-scan",
        "appendix-bounds",
    ]


def test_unknown_check():
    with pytest.raises(ValidationError):
        run_check("no-such-check")


def test_golden_counts_check():
    result = run_check("golden-counts", max_workers=1)
    assert result.passed
    assert result.details["observed"]["upper_triangular_pairs"] == 204


@pytest.mark.slow
def test_emptiness_check_enforces_scale_constant(monkeypatch):
    assert run_check("emptiness-thresholds", fast=True).passed
    monkeypatch.setattr(constants, "EMPTINESS_THRESHOLD_CONSTANT", 1.0e6)
    result = run_check("emptiness-thresholds", fast=True)
    assert not result.passed
    assert all("constant" in failure for failure in result.details["failures"])


# ---------- command line ----------


def test_help(capsys):
    assert cli_dispatch(["--help"]) == 0
    assert "verify-bound" in capsys.readouterr().out


def test_unknown_flag():
    assert cli_dispatch(["count", "--bogus"]) == 2


def test_count_command(capsys):
    assert cli_dispatch(["count", "--N", "1", "--log-level", "ERROR"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "N,ell,g,region,delta,L,members,heart,pairs"
    assert lines[1] == "1,1,I,omega,1.0,1.0,32,,608"


def test_verify_bound_command(tmp_path, capsys):
    argv = ["verify-bound", "--prop", "omega", "--N", "1", "--workers", "1", "--output-dir", str(tmp_path)]
    assert cli_dispatch(argv + ["--log-level", "ERROR"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["rows"] == 1
    assert summary["max_ratio"] == pytest.approx(38.0)
    assert (tmp_path / "verify-bound-omega.csv").exists()
    assert (tmp_path / "verify-bound-omega.json").exists()


def test_verify_bound_flags_exit_nonzero(tmp_path):
    argv = ["verify-bound", "--prop", "omega", "--N", "1", "--constant", "1", "--workers", "1"]
    assert cli_dispatch(argv + ["--output-dir", str(tmp_path), "--log-level", "ERROR"]) == 1


def test_heart_scan_is_report_only(tmp_path):
    argv = ["verify-bound", "--prop", "heart", "--N", "1", "--constant", "1e-9", "--hearts", "1", "--workers", "1"]
    assert cli_dispatch(argv + ["--output-dir", str(tmp_path), "--log-level", "ERROR"]) == 0


def test_invalid_level_is_usage_error(capsys):
    assert cli_dispatch(["theta", "--N", "4", "--log-level", "ERROR"]) == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "VALIDATION_ERROR"


def test_schema_command(tmp_path):
    path = tmp_path / "schema.json"
    assert cli_dispatch(["schema", "--path", str(path), "--log-level", "ERROR"]) == 0
    assert path.read_text(encoding="utf-8") == count_report_schema()


def test_selftest_single_check(tmp_path):
    argv = ["selftest", "--only", "golden-counts", "--output-dir", str(tmp_path), "--log-level", "ERROR"]
    assert cli_dispatch(argv + ["--metrics"]) == 0
    summary = json.loads((tmp_path / "selftest.json").read_text(encoding="utf-8"))
    assert summary["checks"][0]["passed"] is True
    assert "thetalab_checks_total" in (tmp_path / "metrics.prom").read_text(encoding="utf-8")


def test_bad_run_file_is_usage_error(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[lattice]\nN = x\n", encoding="utf-8")
    assert cli_dispatch(["count", "--config", str(path), "--log-level", "ERROR"]) == 2
