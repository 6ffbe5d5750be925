"""
thetalab - lattice counting, archimedean test functions and theta kernels

Main source package containing all application modules.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
