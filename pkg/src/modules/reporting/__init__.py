"""
Reporting module: CSV/JSON report persistence and Prometheus metrics.

Key Components:
    - metrics: counters and histograms with record_* helpers
    - service: byte-stable CSV and JSON rendering, report_emit

Usage:
    from src.modules.reporting.service import report_emit
    report_emit(report, "csv", Path("reports/omega.csv"))
"""
