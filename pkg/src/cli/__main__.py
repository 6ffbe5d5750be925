"""
CLI entry point.

Usage:
    uv run -m src.cli selftest --fast
    thetalab verify-bound --prop heart --N-max 15
"""

import sys

from src.cli.app import cli_dispatch


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
