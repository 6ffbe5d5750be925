"""
Core infrastructure module.

Contains logging, exceptions, quadrature helpers and frozen constants.
"""

__all__ = []
