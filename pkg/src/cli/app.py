"""
Argument parser and dispatch of the thetalab subcommands.

Exit codes: 0 on success, 1 when an asserted invariant failed or a
computation raised a domain error, 2 on usage or configuration errors.
Command output goes to stdout, logs and error records to stderr.
"""

import argparse
import csv
import json
import sys
import uuid
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Optional, Sequence

from pydantic import ValidationError as PydanticValidationError

from src.config import settings
from src.core import constants
from src.core.exceptions import AppBaseException, ConfigurationError, InvariantViolation, ValidationError
from src.core.logging import clear_context, configure_logging, get_logger, set_run_id
from src.modules.algebra.schemas import GroupElement, HalfPlanePoint, LatticeSpec, is_squarefree
from src.modules.algebra.service import group_height
from src.modules.counting.enums import Proposition, RegionKind, Sublattice
from src.modules.counting.schemas import CountGrid, Region
from src.modules.counting.service import (
    ell_values,
    emptiness_threshold,
    enumerate_region,
    fit_constant,
    lattice_point_count,
    pair_counts,
    successive_minima,
    verify_bound,
)
from src.modules.harness.checks import CHECKS, run_checks
from src.modules.harness.config_file import load_run_config
from src.modules.harness.schemas import RunConfig, parse_number
from src.modules.reporting.metrics import write_metrics
from src.modules.reporting.service import emit_all, write_schema
from src.modules.testfn.enums import WindowType
from src.modules.testfn.schemas import SpectralWindow
from src.modules.testfn.service import phi_abel, phi_spectral, routes_agree
from src.modules.theta.schemas import BoundGrid, ThetaConfig
from src.modules.theta.service import geometric_fourth_moment_bound, theta_det_profile, theta_eval

logger = get_logger("cli.app")

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2

DEFAULT_HEARTS = [1.0, 0.25, 0.0625, 0.015625]
PHI_SUITES = {
    "closed-form": ["closed-form"],
    "agreement": ["route-agreement"],
    "selberg": ["selberg-round-trip"],
    "fourier": ["fourier-identity"],
    "pde": ["pde-residual"],
    "all": ["closed-form", "route-agreement", "selberg-round-trip", "fourier-identity", "pde-residual"],
}


# ==================== argument types ====================


def _number(text: str) -> float:
    try:
        return parse_number(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from e


def _heart(text: str) -> Optional[float]:
    return None if text.strip().lower() == "none" else _number(text)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from e
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


# ==================== parser ====================


def _common_flags() -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="INI run file")
    common.add_argument("--output-dir", default=argparse.SUPPRESS, help="Report directory (env THETALAB_OUTPUT_DIR)")
    common.add_argument("--workers", type=_positive_int, default=argparse.SUPPRESS, help="Worker processes")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=argparse.SUPPRESS,
        help="Minimum log level on stderr",
    )
    common.add_argument(
        "--metrics", action="store_true", default=argparse.SUPPRESS, help="Write Prometheus metrics to the output dir"
    )
    return common


def _lattice_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--N", nargs="+", type=_positive_int, help="Levels (squarefree)")
    parser.add_argument("--ell-mode", choices=["one", "N", "one-and-N", "all"], help="Divisors l of N to use")
    parser.add_argument("--g", nargs="+", help="Conjugators: I, diag:<y>, upper:<x>:<y>, matrix:<p>:<q>:<r>:<s>")
    parser.add_argument("--deltas", nargs="+", type=_number, help="delta values in (0, 1]")
    parser.add_argument("--Ls", nargs="+", type=_number, help="Region radii L")


def _window_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", choices=[w.value for w in WindowType], help="Spectral window type")
    parser.add_argument("--alpha", type=_number, help="Window angle alpha < pi/2")
    parser.add_argument("--T", type=_number, help="Long window length (unit window, alpha = pi/2 - 1/T)")
    parser.add_argument("--sigma", type=_number, help="Gaussian window width")


def _spec_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--N", type=_positive_int, default=1, help="Squarefree level")
    parser.add_argument("--ell", type=_positive_int, default=1, help="Divisor l of N")
    parser.add_argument("--g", default="I", help="Conjugator descriptor")


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="thetalab",
        description="Lattice counts, archimedean test functions and theta kernels for split Eichler orders",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    count = sub.add_parser("count", parents=[common], help="Region members and pair counts over a grid")
    _lattice_flags(count)
    count.add_argument("--region", choices=[k.value for k in RegionKind], default=RegionKind.OMEGA.value)
    count.add_argument("--hearts", nargs="+", type=_heart, help="Diamond windows; 'none' for no window")
    count.add_argument("--trace-free", action="store_true", help="Enumerate the trace-free sublattice only")
    count.set_defaults(handler=cmd_count)

    verify = sub.add_parser("verify-bound", parents=[common], help="Counts against a proposition's right-hand side")
    _lattice_flags(verify)
    verify.add_argument("--prop", choices=[p.value for p in Proposition], default=Proposition.HEART.value)
    verify.add_argument("--N-max", type=_positive_int, help="All squarefree N up to this level")
    verify.add_argument("--L-max", type=_positive_int, help="L = 1, ..., L-max")
    verify.add_argument("--hearts", nargs="+", type=_heart, help="Diamond windows for --prop heart")
    verify.add_argument("--constant", type=_number, help="Override the frozen constant")
    verify.set_defaults(handler=cmd_verify_bound)

    minima = sub.add_parser("minima", parents=[common], help="Successive minima and emptiness thresholds")
    _lattice_flags(minima)
    minima.add_argument("--N-max", type=_positive_int, help="All squarefree N up to this level")
    minima.add_argument("--region", choices=[RegionKind.OMEGA.value, RegionKind.PSI.value], default="omega")
    minima.add_argument("--trace-free", action="store_true", help="Trace-free sublattice with the Psi body")
    minima.add_argument("--count-points", action="store_true", help="Compare |K cap R| with prod(1 + 1/lambda_i)")
    minima.set_defaults(handler=cmd_minima)

    phi = sub.add_parser("phi", parents=[common], help="Test function evaluation and its check suites")
    _window_flags(phi)
    phi.add_argument("--P", type=_number, help="Evaluate both routes at this P")
    phi.add_argument("--tau", type=_number, default=1.0, help="Determinant tau")
    phi.add_argument("--suite", choices=sorted(PHI_SUITES), default="all")
    phi.add_argument("--fast", action="store_true", help="Restricted grids")
    phi.set_defaults(handler=cmd_phi)

    theta = sub.add_parser("theta", parents=[common], help="Truncated theta kernel at z = x + iy")
    _spec_flags(theta)
    _window_flags(theta)
    theta.add_argument("--x", type=_number, default=0.0)
    theta.add_argument("--y", type=_number, default=1.0)
    theta.add_argument("--tol", type=_number, default=1e-10)
    theta.set_defaults(handler=cmd_theta)

    l2 = sub.add_parser("l2", parents=[common], help="L2 integrand from determinant class sums")
    _spec_flags(l2)
    _window_flags(l2)
    l2.add_argument("--y", nargs="+", type=_number, default=[1.0])
    l2.add_argument("--tol", type=_number, default=1e-10)
    l2.add_argument("--profile", action="store_true", help="Print the class sums per determinant")
    l2.set_defaults(handler=cmd_l2)

    bound = sub.add_parser("bound", parents=[common], help="Countable fourth-moment bound")
    bound.add_argument("--N", type=_positive_int, required=True)
    bound.add_argument("--T", type=_number, default=3.0)
    bound.add_argument("--g1", default="I")
    bound.add_argument("--g2", default="I")
    bound.add_argument("--ell", nargs="+", type=_positive_int, help="Divisors l (default: all)")
    bound.add_argument("--L-max", type=_number)
    bound.add_argument("--delta-min", type=_number)
    bound.set_defaults(handler=cmd_bound)

    selftest = sub.add_parser("selftest", parents=[common], help="Run the acceptance checks")
    selftest.add_argument("--fast", action="store_true", help="Restricted grids")
    selftest.add_argument("--only", nargs="+", choices=list(CHECKS), help="Run only these checks")
    selftest.set_defaults(handler=cmd_selftest)

    schema = sub.add_parser("schema", parents=[common], help="Write the published CountReport JSON schema")
    schema.add_argument("--path", type=Path, default=Path("schemas/count_report.schema.json"))
    schema.set_defaults(handler=cmd_schema)

    fit = sub.add_parser("fit", parents=[common], help="Maximum ratio of a sweep, for refitting constants")
    fit.add_argument("--prop", choices=[p.value for p in Proposition], required=True)
    fit.add_argument("--N-max", type=_positive_int, default=6)
    fit.add_argument("--L-max", type=_positive_int, default=16)
    fit.set_defaults(handler=cmd_fit)

    return parser


# ==================== configuration ====================


def load_config(args: argparse.Namespace) -> RunConfig:
    """Run file (if any) with the global flags applied on top."""
    config = load_run_config(args.config) if "config" in args else RunConfig()
    updates = {"command": args.command}
    if "output_dir" in args:
        updates["output_dir"] = args.output_dir
    if "workers" in args:
        updates["workers"] = args.workers
    if "log_level" in args:
        updates["log_level"] = args.log_level
    return config.model_copy(update={"run": config.run.model_copy(update=updates)})


def _squarefree_upto(n: int) -> list[int]:
    return [N for N in range(1, n + 1) if is_squarefree(N)]


def _count_grid(args: argparse.Namespace, config: RunConfig, hearts: Optional[list] = None) -> CountGrid:
    lattice = config.lattice
    N_values = lattice.N
    if getattr(args, "N_max", None):
        N_values = _squarefree_upto(args.N_max)
    elif args.N:
        N_values = args.N
    Ls = lattice.Ls
    if getattr(args, "L_max", None):
        Ls = [float(L) for L in range(1, args.L_max + 1)]
    elif args.Ls:
        Ls = args.Ls
    return CountGrid(
        N_values=N_values,
        ell_mode=args.ell_mode or lattice.ell_mode,
        deltas=args.deltas or lattice.deltas,
        Ls=Ls,
        hearts=hearts if hearts is not None else lattice.hearts,
        g_values=args.g or lattice.g,
    )


def _window(args: argparse.Namespace, config: RunConfig) -> SpectralWindow:
    """Window section of the run file with the command-line flags applied."""
    updates: dict = {}
    if args.window is not None:
        updates["kind"] = WindowType(args.window)
    if args.alpha is not None:
        updates["alpha"] = args.alpha
        updates["T"] = None
    if args.T is not None:
        updates["T"] = args.T
    if args.sigma is not None:
        updates["sigma"] = args.sigma
    return config.window.model_copy(update=updates).to_window()


def _spec(args: argparse.Namespace) -> LatticeSpec:
    return LatticeSpec(N=args.N, ell=args.ell, g=GroupElement.parse(args.g))


def _writer():
    return csv.writer(sys.stdout, lineterminator="\n")


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, default=str))


# ==================== commands ====================


def cmd_count(args: argparse.Namespace, config: RunConfig) -> int:
    grid = _count_grid(args, config, hearts=args.hearts)
    kind = RegionKind(args.region)
    sublattice = Sublattice.TRACE_FREE if args.trace_free else Sublattice.FULL
    writer = _writer()
    writer.writerow(["N", "ell", "g", "region", "delta", "L", "members", "heart", "pairs"])
    for N in grid.N_values:
        if not is_squarefree(N):
            logger.warning("Skipping non-squarefree level", event="level_skipped", N=N)
            continue
        for ell in ell_values(N, grid.ell_mode):
            for g in grid.g_values:
                spec = LatticeSpec(N=N, ell=ell, g=GroupElement.parse(g))
                for delta in grid.deltas:
                    for L in grid.Ls:
                        region = Region(kind, delta, L)
                        cells = [N, ell, g, kind.value, repr(delta), repr(L)]
                        if sublattice is Sublattice.TRACE_FREE:
                            members = len(enumerate_region(spec, region, sublattice, budget=config.run.budget))
                            writer.writerow(cells + [members, "", ""])
                            continue
                        results = pair_counts(spec, region, grid.hearts, budget=config.run.budget)
                        for heart, result in zip(grid.hearts, results):
                            heart_cell = "" if heart is None else repr(heart)
                            writer.writerow(cells + [result.members, heart_cell, result.count])
    return EXIT_OK


def cmd_verify_bound(args: argparse.Namespace, config: RunConfig) -> int:
    proposition = Proposition(args.prop)
    hearts = args.hearts
    if proposition is Proposition.HEART and hearts is None and config.lattice.hearts == [None]:
        hearts = DEFAULT_HEARTS
    grid = _count_grid(args, config, hearts=hearts)
    report = verify_bound(
        proposition, grid, constant=args.constant, budget=config.run.budget, max_workers=config.run.workers
    )
    paths = emit_all(report, config.run.output_path / f"verify-bound-{proposition.value}")
    _print_json(
        {
            "proposition": proposition.value,
            "rows": len(report.rows),
            "max_ratio": report.max_ratio,
            "constant": report.constant,
            "flagged": [row.model_dump() for row in report.flagged],
            "skipped": len(report.metadata.skipped),
            "reports": [str(p) for p in paths],
        }
    )
    # the heart scan is report-only
    if report.flagged and proposition is not Proposition.HEART:
        raise InvariantViolation(
            f"{len(report.flagged)} grid points exceed the {proposition.value} constant {report.constant:g}",
            check=f"verify-bound:{proposition.value}",
        )
    return EXIT_OK


def cmd_minima(args: argparse.Namespace, config: RunConfig) -> int:
    grid = _count_grid(args, config)
    kind = RegionKind.PSI if args.trace_free else RegionKind(args.region)
    sublattice = Sublattice.TRACE_FREE if args.trace_free else Sublattice.FULL
    writer = _writer()
    writer.writerow(["N", "ell", "g", "region", "delta", "minima", "threshold_constant", "point_ratios"])
    violations: list[str] = []
    for N in grid.N_values:
        if not is_squarefree(N):
            continue
        for ell in ell_values(N, grid.ell_mode):
            for g in grid.g_values:
                spec = LatticeSpec(N=N, ell=ell, g=GroupElement.parse(g))
                for delta in grid.deltas:
                    body = Region(kind, delta, 1)
                    minima = successive_minima(spec, body, sublattice, budget=config.run.budget).minima
                    if sublattice is Sublattice.FULL:
                        constant = emptiness_threshold(spec, kind, delta).constant
                        if constant < constants.EMPTINESS_THRESHOLD_CONSTANT:
                            violations.append(f"{spec.descriptor} {kind.value} delta={delta:g}: {constant:.3e}")
                    else:
                        H = group_height(spec.g, N)
                        constant = minima[0] / min(ell**-0.5, 1.0 / (ell * H * delta**0.5))
                        if constant < constants.TRACE_FREE_MINIMUM_CONSTANT:
                            violations.append(f"{spec.descriptor} delta={delta:g}: {constant:.3e}")
                    ratios = []
                    if args.count_points:
                        for L in grid.Ls:
                            body_L = Region(kind, delta, L, exclude_zero=False)
                            ratio = lattice_point_count(spec, body_L, sublattice).ratio
                            ratios.append(ratio)
                            factor = constants.LATTICE_POINT_FACTOR
                            if not 1.0 / factor <= ratio <= factor:
                                violations.append(f"{spec.descriptor} delta={delta:g} L={L:g}: ratio {ratio:.3e}")
                    writer.writerow(
                        [
                            N,
                            ell,
                            g,
                            kind.value,
                            repr(delta),
                            ";".join(f"{m:.12e}" for m in minima),
                            f"{constant:.12e}",
                            ";".join(f"{r:.12e}" for r in ratios),
                        ]
                    )
    if violations:
        raise InvariantViolation("; ".join(violations), check="minima")
    return EXIT_OK


def cmd_phi(args: argparse.Namespace, config: RunConfig) -> int:
    if args.P is None:
        return _run_suite(PHI_SUITES[args.suite], args.fast, config, "phi")
    window = _window(args, config)
    prec = config.precision.to_precision()
    abel = phi_abel(args.P, args.tau, window, prec)
    spectral = phi_spectral(args.P, args.tau, window, prec)
    agree = routes_agree(abel, spectral)
    _print_json(
        {
            "P": args.P,
            "tau": args.tau,
            "window": window.descriptor(),
            "abel": abel.value,
            "abel_error": abel.error_estimate,
            "spectral": spectral.value,
            "spectral_error": spectral.error_estimate,
            "null_locus": abel.null_locus,
            "routes_agree": agree,
        }
    )
    if not agree:
        raise InvariantViolation(
            f"Abel and spectral routes disagree at P={args.P:g}, tau={args.tau:g}", check="route-agreement"
        )
    return EXIT_OK


def cmd_theta(args: argparse.Namespace, config: RunConfig) -> int:
    cfg = ThetaConfig(spec=_spec(args), window=_window(args, config), tol=args.tol, budget=config.run.budget)
    result = theta_eval(cfg, HalfPlanePoint(args.x, args.y))
    _print_json(
        {
            "spec": cfg.spec.descriptor,
            "window": cfg.window.descriptor(),
            "z": [args.x, args.y],
            "value": [result.value.real, result.value.imag],
            "null_contribution": [result.null_contribution.real, result.null_contribution.imag],
            "p_cut": result.p_cut,
            "terms": result.terms,
            "certificate": result.certificate,
            "doublings": result.doublings,
        }
    )
    return EXIT_OK


def cmd_l2(args: argparse.Namespace, config: RunConfig) -> int:
    cfg = ThetaConfig(spec=_spec(args), window=_window(args, config), tol=args.tol, budget=config.run.budget)
    writer = _writer()
    if args.profile:
        writer.writerow(["y", "det", "class_sum"])
    else:
        writer.writerow(["y", "l2"])
    for y in args.y:
        profile = theta_det_profile(cfg, y)
        if args.profile:
            for n, value in profile.sums.items():
                writer.writerow([repr(y), str(n), f"{value:.12e}"])
        else:
            writer.writerow([repr(y), f"{profile.l2:.12e}"])
    return EXIT_OK


def cmd_bound(args: argparse.Namespace, config: RunConfig) -> int:
    grid = BoundGrid(ell_values=args.ell, L_max=args.L_max, delta_min=args.delta_min)
    report = geometric_fourth_moment_bound(
        GroupElement.parse(args.g1),
        GroupElement.parse(args.g2),
        args.N,
        args.T,
        grid=grid,
        budget=config.run.budget,
        max_workers=config.run.workers,
    )
    paths = emit_all(report, config.run.output_path / f"bound-N{args.N}-T{args.T:g}")
    _print_json(
        {
            "N": report.N,
            "T": report.T,
            "rows": len(report.rows),
            "maximum": report.maximum,
            "skipped": len(report.metadata.skipped),
            "reports": [str(p) for p in paths],
        }
    )
    return EXIT_OK


def _run_suite(names: Sequence[str], fast: bool, config: RunConfig, stem: str) -> int:
    results = run_checks(names, fast=fast, max_workers=config.run.workers)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status}  {result.name:22} {result.runtime_s:9.3f}s")
    path = config.run.output_path / f"{stem}.json"
    payload = {"fast": fast, "checks": [asdict(r) for r in results]}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, default=str) + "\n", encoding="utf-8", newline="\n")
    except OSError as e:
        logger.error("Cannot write check summary", event="check_summary_failed", path=str(path), error_message=str(e))
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise InvariantViolation(f"Checks failed: {', '.join(failed)}", check=",".join(failed))
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace, config: RunConfig) -> int:
    return _run_suite(args.only or list(CHECKS), args.fast, config, "selftest")


def cmd_schema(args: argparse.Namespace, config: RunConfig) -> int:
    print(write_schema(args.path))
    return EXIT_OK


def cmd_fit(args: argparse.Namespace, config: RunConfig) -> int:
    proposition = Proposition(args.prop)
    grid = CountGrid(
        N_values=_squarefree_upto(args.N_max),
        deltas=[1.0, 0.25, 0.0625],
        Ls=[float(L) for L in range(1, args.L_max + 1)],
        hearts=DEFAULT_HEARTS if proposition is Proposition.HEART else [None],
        g_values=["I", "diag:4"],
    )
    report = verify_bound(
        proposition, grid, constant=sys.float_info.max, budget=config.run.budget, max_workers=config.run.workers
    )
    emit_all(report, config.run.output_path / f"fit-{proposition.value}")
    _print_json(
        {
            "proposition": proposition.value,
            "N_max": args.N_max,
            "L_max": args.L_max,
            "max_ratio": fit_constant(report),
        }
    )
    return EXIT_OK


# ==================== dispatch ====================


def _report_error(e: AppBaseException, run_id: str) -> None:
    e.run_id = e.run_id or run_id
    print(json.dumps(e.to_dict(), default=str), file=sys.stderr)


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run the subcommand and map the outcome to an exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    run_id = uuid.uuid4().hex[:12]
    set_run_id(run_id)
    handler: Callable[[argparse.Namespace, RunConfig], int] = args.handler
    config: Optional[RunConfig] = None
    try:
        config = load_config(args)
        configure_logging(
            log_level=config.run.log_level or settings.logging.level,
            json_format=settings.logging.json_format,
            enable_console=settings.logging.enable_console,
            enable_file=settings.logging.enable_file,
            file_path=settings.logging.file_path,
            force=True,
        )
        logger.info("Command started", event="cli_start", command=args.command)
        code = handler(args, config)
        logger.info("Command finished", event="cli_complete", command=args.command, exit_code=code)
        return code
    except (ValidationError, ConfigurationError) as e:
        _report_error(e, run_id)
        return EXIT_USAGE
    except PydanticValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        _report_error(ConfigurationError(f"Invalid value for {key}: {first['msg']}", config_key=key), run_id)
        return EXIT_USAGE
    except AppBaseException as e:
        logger.error("Command failed", event="cli_failed", command=args.command, error_code=e.error_code)
        _report_error(e, run_id)
        return EXIT_INVARIANT
    finally:
        if config is not None and getattr(args, "metrics", False):
            write_metrics(config.run.output_path / settings.output.metrics_file)
        clear_context()
