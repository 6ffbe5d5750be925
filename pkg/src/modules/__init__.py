"""
Domain modules.

algebra, counting, specfun, testfn and theta hold the mathematics;
reporting and harness hold persistence, orchestration and checks.
"""

__all__ = []
