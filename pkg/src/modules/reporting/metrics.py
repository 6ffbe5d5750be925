"""
Prometheus metrics for enumeration, test-function evaluation and sweeps.

Provides counters and histograms plus helper functions; the CLI writes the
default registry to a text file when run with --metrics.
"""

from pathlib import Path

from prometheus_client import REGISTRY, Counter, Histogram, write_to_textfile

# Enumeration
enumerated_points = Counter(
    "thetalab_enumerated_points_total",
    "Lattice points returned by region enumerations",
    ["sublattice"],  # Labels: full, trace-free
)

enumeration_budget_failures = Counter(
    "thetalab_enumeration_budget_failures_total",
    "Enumerations aborted because the candidate budget was exceeded",
)

enumeration_duration = Histogram(
    "thetalab_enumeration_duration_seconds",
    "Time spent in one region enumeration",
    buckets=(0.001, 0.01, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0),  # seconds
)

# Test function
phi_evaluations = Counter(
    "thetalab_phi_evaluations_total",
    "Evaluations of the archimedean test function",
    ["route"],  # Labels: abel, spectral
)

quadrature_refinements = Counter(
    "thetalab_quadrature_refinements_total",
    "Panel or truncation doublings performed",
    ["operation"],
)

# Sweeps and reports
grid_points = Counter(
    "thetalab_grid_points_total",
    "Grid points processed by sweeps",
    ["command", "status"],  # Labels: ok, skipped
)

grid_point_duration = Histogram(
    "thetalab_grid_point_duration_seconds",
    "Time spent on one grid point",
    ["command"],
    buckets=(0.01, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0, 600.0),  # seconds
)

reports_written = Counter(
    "thetalab_reports_written_total",
    "Reports written to disk",
    ["format"],  # Labels: csv, json
)

checks_run = Counter(
    "thetalab_checks_total",
    "Acceptance checks executed",
    ["check", "result"],  # Labels: passed, failed
)


def record_enumeration(sublattice: str, points: int, duration: float) -> None:
    enumerated_points.labels(sublattice=sublattice).inc(points)
    enumeration_duration.observe(duration)


def record_budget_exceeded() -> None:
    enumeration_budget_failures.inc()


def record_phi_evaluation(route: str, count: int = 1) -> None:
    phi_evaluations.labels(route=route).inc(count)


def record_refinements(operation: str, count: int) -> None:
    if count > 0:
        quadrature_refinements.labels(operation=operation).inc(count)


def record_grid_point(command: str, status: str, duration: float) -> None:
    grid_points.labels(command=command, status=status).inc()
    grid_point_duration.labels(command=command).observe(duration)


def record_report_written(report_format: str) -> None:
    reports_written.labels(format=report_format).inc()


def record_check(check: str, passed: bool) -> None:
    checks_run.labels(check=check, result="passed" if passed else "failed").inc()


def write_metrics(path: Path) -> Path:
    """Write the default registry in the text exposition format."""
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
    return path
