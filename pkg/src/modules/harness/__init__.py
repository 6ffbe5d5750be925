"""
Harness module: run configuration files, the worker pool and the named
acceptance checks behind `thetalab selftest`.
"""
