"""Error sweeps, bound verification, operation counting and report writers."""

from .metrics import NLS_KIND, REPORT_SCHEMA, ErrorReport, error_stats, relative_errors
from .opcount import OpCountReport, count_ops, opcount_frame, opcount_table
from .sweeps import (
    SweepCell,
    SweepRunner,
    evaluate_cell,
    h_trend_check,
    run_dimension_sweep,
    run_error_sweep,
    run_h_sensitivity,
    sample_inputs,
    silu_grid_report,
    verify_bounds,
)
from .writers import reports_frame, write_charts, write_frame

__all__ = [
    "NLS_KIND",
    "REPORT_SCHEMA",
    "ErrorReport",
    "error_stats",
    "relative_errors",
    "OpCountReport",
    "count_ops",
    "opcount_frame",
    "opcount_table",
    "SweepCell",
    "SweepRunner",
    "evaluate_cell",
    "h_trend_check",
    "run_dimension_sweep",
    "run_error_sweep",
    "run_h_sensitivity",
    "sample_inputs",
    "silu_grid_report",
    "verify_bounds",
    "reports_frame",
    "write_charts",
    "write_frame",
]
