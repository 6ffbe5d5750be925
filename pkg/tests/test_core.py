import math

import numpy as np
import pytest

from src.config import PROJECT_ROOT, EnumerationSettings, LoggingSettings, NumericsSettings
from src.core.exceptions import (
    AppBaseException,
    ConvergenceError,
    EnumerationBudgetExceeded,
    InvariantViolation,
    ValidationError,
    get_exception_by_code,
)
from src.core.logging import clear_context, get_logger, get_run_id, log_performance, set_run_id
from src.core.quadrature import integrate_refined, panel_rule

# ---------- settings ----------


def test_env_example_documents_settings():
    lines = (PROJECT_ROOT / ".env.example").read_text(encoding="utf-8").splitlines()
    keys = {line.split("=", 1)[0] for line in lines if line and not line.startswith("#")}
    sections = [
        ("THETALAB_LOG_", LoggingSettings),
        ("THETALAB_ENUM_", EnumerationSettings),
        ("THETALAB_NUM_", NumericsSettings),
    ]
    for prefix, section in sections:
        assert {key.removeprefix(prefix).lower() for key in keys if key.startswith(prefix)} == set(section.model_fields)
    assert {"THETALAB_OUTPUT_DIR", "THETALAB_MAX_WORKERS"} <= keys


# ---------- exceptions ----------


def test_error_codes_follow_class_names():
    assert ValidationError("bad").error_code == "VALIDATION_ERROR"
    assert EnumerationBudgetExceeded("too many").error_code == "ENUMERATION_BUDGET_EXCEEDED"
    assert get_exception_by_code("CONVERGENCE_ERROR") is ConvergenceError
    assert get_exception_by_code("NOPE") is AppBaseException


def test_to_dict_carries_details():
    error = ValidationError("N=4 is not squarefree", field="N", value=4)
    payload = error.to_dict()
    assert payload["error"] == "VALIDATION_ERROR"
    assert payload["details"] == {"field": "N", "invalid_value": "4"}
    budget = EnumerationBudgetExceeded("over budget", budget=10, candidates=11).to_dict()
    assert budget["details"] == {"budget": 10, "candidates": 11}
    assert InvariantViolation("flagged", check="golden-counts").details["check"] == "golden-counts"


# ---------- quadrature ----------


def test_panel_rule_integrates_polynomials_exactly():
    nodes, weights = panel_rule(0.0, 2.0, panels=3, order=8)
    assert len(nodes) == 24
    assert weights @ nodes**5 == pytest.approx(2.0**6 / 6, rel=1e-13)


def test_refined_integral():
    result = integrate_refined(np.exp, 0.0, 1.0, rel_tol=1e-13)
    assert result.value == pytest.approx(math.e - 1, rel=1e-13)
    assert result.refinements >= 1


def test_refined_integral_batched():
    result = integrate_refined(lambda x: np.stack([np.sin(x), np.cos(x)]), 0.0, math.pi, rel_tol=1e-12, abs_tol=1e-14)
    assert result.value == pytest.approx([2.0, 0.0], abs=1e-12)


def test_refined_integral_empty_interval():
    assert integrate_refined(np.exp, 1.0, 1.0, rel_tol=1e-10).value == 0


def test_refinement_gives_up():
    with pytest.raises(ConvergenceError):
        integrate_refined(lambda x: np.sin(1e4 * x), 0.0, 1.0, rel_tol=1e-14, panels=1, order=4, max_refinements=2)


# ---------- logging ----------


def test_run_id_context():
    set_run_id("abc")
    assert get_run_id() == "abc"
    clear_context()
    assert get_run_id() is None


def test_log_performance_passes_through():
    @log_performance("tests.core")
    def double(x):
        return 2 * x

    assert double(21) == 42
    get_logger("tests.core").info("structured record", event="test", value=1)


def test_log_performance_reraises():
    @log_performance("tests.core")
    def fail():
        raise ValidationError("nope")

    with pytest.raises(ValidationError):
        fail()
