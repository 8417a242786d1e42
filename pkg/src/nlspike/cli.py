#!/usr/bin/env python3

"""
Command-line experiment runner for the nlspike kernels.

Subcommands benchmark operators against float baselines, sweep the PWL-Exp
half-interval H, verify the error bounds, count MAC/AC/shift operations and
emit or inspect PWL-Exp lookup tables.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

load_dotenv()
from nlspike.analysis import (
    ErrorReport,
    SweepRunner,
    h_trend_check,
    opcount_frame,
    opcount_table,
    reports_frame,
    run_dimension_sweep,
    run_h_sensitivity,
    silu_grid_report,
    verify_bounds,
    write_charts,
    write_frame,
)
from nlspike.config import KernelDefaults, RunSettings
from nlspike.kernels import (
    ContractViolation,
    NLSpikeError,
    PwlExpTable,
    TableFormatError,
    build_table,
    dump_table,
    load_table,
)
from nlspike.operators import OPERATORS, NlsConfig

EXIT_OK = 0
EXIT_BOUND_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

DEFAULT_DIMS = "8,16,32,64,128,256"
BOUND_OPERATORS = ("softmax", "silu", "rmsnorm")
H_OPERATORS = ("silu", "softmax")

logger = logging.getLogger("nlspike")


def setup_logging(verbose: int = 0):
    """Setup logging based on verbosity level."""
    if verbose == 0:
        level = logging.WARNING
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.DEBUG

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    return logging.getLogger("nlspike")


def _int_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _float_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError(f"expected at least one value, got {text!r}")
    return values


def _kernel_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--H", type=float, default=None, help="PWL-Exp half-interval (default 5)")
    parent.add_argument("--K", type=int, default=None, help="PWL-Exp segment count, a power of two (default 64)")
    parent.add_argument("--T", type=int, default=None, help="Division window length (default 16)")
    parent.add_argument("--L", type=int, default=None, help="Division population size (default 256)")
    parent.add_argument("--n-cordic", type=int, default=None, help="CORDIC iterations (default 8)")
    return parent


def _run_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("-n", "--samples", type=int, default=10_000, help="Samples per cell")
    parent.add_argument("-s", "--seed", type=int, default=None, help="Master seed (default NLSPIKE_SEED or 7)")
    parent.add_argument("--eps", type=float, default=None, help="RMSNorm/LayerNorm epsilon (default 1e-5)")
    parent.add_argument("-O", "--output", type=Path, default=None, help="Output file path")
    parent.add_argument(
        "-f",
        "--format",
        choices=("csv", "json", "svg"),
        default="csv",
        help="Output format, either 'csv', 'json' or 'svg'",
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlspike",
        description="Integer-only spiking nonlinearity kernels: benchmarks, bounds and tables",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase verbosity level (use -v for INFO, -vv for DEBUG)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    kernel, run = _kernel_flags(), _run_flags()

    bench = sub.add_parser("bench-op", parents=[kernel, run], help="Operator error vs. oracle and baselines")
    bench.add_argument("-o", "--operator", choices=OPERATORS, required=True, help="Operator to benchmark")
    bench.add_argument("--dims", type=_int_list, default=_int_list(DEFAULT_DIMS), help="Comma-separated dims")

    sweep = sub.add_parser("sweep-h", parents=[kernel, run], help="Error sensitivity to H")
    sweep.add_argument("-o", "--operator", choices=H_OPERATORS, default=None, help="Operator (default both)")
    sweep.add_argument("--H-values", type=_float_list, default=_float_list("3,4,5,6,7,8,9,10"), help="Comma-separated H values")
    sweep.add_argument("--dims", type=_int_list, default=[64], help="Vector dimension (first value is used)")

    verify = sub.add_parser("verify-bounds", parents=[kernel, run], help="Check the error bounds on seeded samples")
    verify.add_argument("-o", "--operator", choices=BOUND_OPERATORS, default=None, help="Operator (default all)")
    verify.add_argument("--dims", type=_int_list, default=_int_list(DEFAULT_DIMS), help="Comma-separated dims")

    opcount = sub.add_parser("opcount", parents=[kernel, run], help="MAC/AC/shift counts per window length")
    opcount.add_argument("-o", "--operator", choices=BOUND_OPERATORS, default=None, help="Operator (default all)")
    opcount.add_argument("--T-values", type=_int_list, default=[1, 2, 4], help="Comma-separated window lengths")
    opcount.add_argument("--dims", type=_int_list, default=[64], help="Comma-separated dims")

    lut = sub.add_parser("emit-lut", parents=[kernel], help="Write or inspect a PWL-Exp lookup table")
    lut.add_argument("-O", "--output", type=Path, default=None, help="LUT file to write")
    lut.add_argument("--inspect", type=Path, default=None, help="LUT file to load and print")
    return parser


def _config(args: argparse.Namespace, defaults: KernelDefaults, table: Optional[PwlExpTable] = None) -> NlsConfig:
    cfg = NlsConfig.from_defaults(
        defaults, H=args.H, K=args.K, T=args.T, L=args.L, n_cordic=args.n_cordic
    )
    if table is not None:
        cfg = cfg.with_table(table)
    return cfg


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3e}"


def _report_table(title: str, reports: Sequence[ErrorReport]) -> Table:
    table = Table(title=title)
    for column in ("operator", "kind", "d", "mean_abs", "max_abs", "max_rel", "bound", "slack", "max_excess", "pass"):
        table.add_column(column, justify="left" if column in ("operator", "kind") else "right")
    for r in reports:
        status = "-" if r.bound_satisfied is None else ("pass" if r.bound_satisfied else "[red]FAIL[/red]")
        table.add_row(
            r.operator,
            r.kind,
            str(r.d),
            _fmt(r.mean_abs),
            _fmt(r.max_abs),
            _fmt(r.max_rel),
            _fmt(r.bound),
            _fmt(r.slack),
            _fmt(r.max_excess),
            status,
        )
    return table


def _emit_reports(args: argparse.Namespace, reports: Sequence[ErrorReport], console: Console, title: str, x_field: str = "d") -> None:
    if args.output is None:
        console.print(_report_table(title, reports))
        return
    if args.format == "svg":
        write_charts(reports, args.output, x_field=x_field)
    else:
        write_frame(reports_frame(reports), args.output, args.format)


def _bound_exit(reports: Sequence[ErrorReport]) -> int:
    failed = [r for r in reports if r.bound_satisfied is False]
    for r in failed:
        logger.warning(f"Bound not satisfied: {r.describe()}")
    return EXIT_BOUND_FAILURE if failed else EXIT_OK


def cmd_bench_op(args, settings: RunSettings, defaults: KernelDefaults, console: Console, table: Optional[PwlExpTable] = None) -> int:
    cfg = _config(args, defaults, table)
    runner = SweepRunner(settings, defaults)
    eps = defaults.rms_eps if args.eps is None else args.eps
    reports = run_dimension_sweep(args.operator, args.dims, args.samples, args.seed, cfg, eps, runner)
    if args.operator == "silu":
        reports.append(silu_grid_report(cfg, seed=args.seed))
    _emit_reports(args, reports, console, f"bench-op {args.operator}")
    return _bound_exit(reports)


def cmd_sweep_h(args, settings: RunSettings, defaults: KernelDefaults, console: Console, table: Optional[PwlExpTable] = None) -> int:
    cfg = _config(args, defaults, table)
    runner = SweepRunner(settings, defaults)
    eps = defaults.rms_eps if args.eps is None else args.eps
    operators = [args.operator] if args.operator else list(H_OPERATORS)
    reports: List[ErrorReport] = []
    trends_ok = True
    for operator in operators:
        rows = run_h_sensitivity(operator, args.H_values, cfg, args.samples, args.seed, args.dims[0], eps, runner)
        ok, message = h_trend_check(operator, rows)
        if ok:
            logger.info(f"H trend holds: {message}")
        else:
            logger.warning(f"H trend violated: {message}")
        trends_ok = trends_ok and ok
        reports.extend(rows)
    _emit_reports(args, reports, console, "sweep-h", x_field="H")
    code = _bound_exit(reports)
    return code if code != EXIT_OK or trends_ok else EXIT_BOUND_FAILURE


def cmd_verify_bounds(args, settings: RunSettings, defaults: KernelDefaults, console: Console, table: Optional[PwlExpTable] = None) -> int:
    cfg = _config(args, defaults, table)
    runner = SweepRunner(settings, defaults)
    eps = defaults.rms_eps if args.eps is None else args.eps
    operators = [args.operator] if args.operator else list(BOUND_OPERATORS)
    reports = verify_bounds(cfg, args.dims, args.samples, args.seed, operators, eps, runner)
    console.print(_report_table(f"verify-bounds ({reports[0].config})", reports))
    if args.output is not None:
        _emit_reports(args, reports, console, "verify-bounds")
    return _bound_exit(reports)


def cmd_opcount(args, settings: RunSettings, defaults: KernelDefaults, console: Console, table: Optional[PwlExpTable] = None) -> int:
    if args.format == "svg":
        raise ContractViolation("opcount writes 'csv' or 'json' tables")
    cfg = _config(args, defaults, table)
    eps = defaults.rms_eps if args.eps is None else args.eps
    operators = [args.operator] if args.operator else list(BOUND_OPERATORS)
    df = opcount_frame(opcount_table(operators, args.dims, args.T_values, cfg, args.seed, eps))
    if args.output is None:
        view = Table(title="opcount")
        for column in df.columns:
            view.add_column(column, justify="right")
        for row in df.iter_rows():
            view.add_row(*[f"{v:.4f}" if isinstance(v, float) else str(v) for v in row])
        console.print(view)
    else:
        write_frame(df, args.output, args.format)
    return EXIT_OK


def cmd_emit_lut(args, settings: RunSettings, defaults: KernelDefaults, console: Console, table: Optional[PwlExpTable] = None) -> int:
    if args.inspect is not None:
        tbl = load_table(args.inspect)
        view = Table(title=f"{args.inspect} (H={tbl.H:g}, K={tbl.K}, {tbl.size_bits} bits)")
        for column in ("i", "knot", "intercept_code", "slope_code", "intercept", "slope"):
            view.add_column(column, justify="right")
        knots = tbl.knots
        intercepts = tbl.intercept_values()
        slopes = tbl.slope_values()
        for i in range(tbl.K):
            view.add_row(
                str(i),
                f"{knots[i]:.5f}",
                str(tbl.intercept_codes[i]),
                str(tbl.slope_codes[i]),
                f"{intercepts[i]:.6g}",
                f"{slopes[i]:.6g}",
            )
        console.print(view)
        return EXIT_OK
    if args.output is None:
        raise ContractViolation("emit-lut needs --output PATH (or --inspect PATH)")
    tbl = table or build_table(
        defaults.H if args.H is None else args.H,
        defaults.K if args.K is None else args.K,
        slope_bits=defaults.slope_bits,
        intercept_bits=defaults.intercept_bits,
    )
    nbytes = dump_table(tbl, args.output)
    if load_table(args.output) != tbl:
        raise TableFormatError(f"{args.output} does not load back to the emitted table")
    console.print(f"Wrote PWL-Exp table H={tbl.H:g} K={tbl.K} ({nbytes} bytes) to {args.output}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[..., int]] = {
    "bench-op": cmd_bench_op,
    "sweep-h": cmd_sweep_h,
    "verify-bounds": cmd_verify_bounds,
    "opcount": cmd_opcount,
    "emit-lut": cmd_emit_lut,
}


def main(argv: Optional[Sequence[str]] = None, table: Optional[PwlExpTable] = None, console: Optional[Console] = None) -> int:
    """Run one subcommand; ``table`` replaces the PWL-Exp table (negative controls)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    console = console or Console()

    try:
        settings = RunSettings.from_env()
        if settings.log_level and args.verbose == 0:
            logging.getLogger().setLevel(settings.log_level.upper())
        defaults = KernelDefaults.from_json()
        if getattr(args, "seed", None) is None and hasattr(args, "seed"):
            args.seed = settings.seed
        if getattr(args, "samples", 1) < 1:
            raise ContractViolation(f"--samples must be >= 1, got {args.samples}")
        return COMMANDS[args.command](args, settings, defaults, console, table)
    except (ContractViolation, ValueError) as e:
        logger.error(f"Invalid arguments: {e}")
        console.print(f"[red]error:[/red] {e}")
        return EXIT_USAGE
    except (OSError, TableFormatError) as e:
        logger.error(f"I/O failure: {e}")
        console.print(f"[red]error:[/red] {e}")
        return EXIT_IO
    except NLSpikeError as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        console.print(f"[red]error:[/red] {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
