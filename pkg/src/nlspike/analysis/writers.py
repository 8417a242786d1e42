"""Report serialization: polars CSV/JSON tables and SVG sweep charts."""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import polars as pl

from ..utils.svg import write_line_chart
from .metrics import REPORT_SCHEMA, ErrorReport

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "svg")


def reports_frame(reports: Sequence[ErrorReport]) -> pl.DataFrame:
    return pl.DataFrame([r.to_row() for r in reports], schema=REPORT_SCHEMA)


def write_frame(df: pl.DataFrame, path: Union[str, Path], fmt: str) -> Path:
    """Write ``df`` as CSV or as a JSON array of row objects."""
    path = Path(path)
    if fmt == "csv":
        df.write_csv(path)
    elif fmt == "json":
        df.write_json(path)
    else:
        raise ValueError(f"Invalid table format: {fmt}, use 'csv' or 'json'")
    logger.info(f"Wrote {df.height} rows to {path}")
    return path


def _series(reports: Sequence[ErrorReport], x_field: str, y_field: str) -> Dict[str, List[Tuple[float, float]]]:
    series: Dict[str, List[Tuple[float, float]]] = {}
    for r in sorted(reports, key=lambda r: getattr(r, x_field)):
        series.setdefault(r.kind, []).append((float(getattr(r, x_field)), float(getattr(r, y_field))))
    return series


def write_charts(
    reports: Sequence[ErrorReport],
    path: Union[str, Path],
    x_field: str = "d",
    stats: Sequence[str] = ("mean_abs", "max_abs"),
) -> List[Path]:
    """One SVG line chart per operator; ``path`` names the chart of a single operator.

    With several operators the operator name is appended to the file stem.
    """
    path = Path(path)
    operators = sorted({r.operator for r in reports})
    written = []
    for operator in operators:
        rows = [r for r in reports if r.operator == operator]
        series = {}
        for stat in stats:
            for kind, pts in _series(rows, x_field, stat).items():
                series[f"{kind} {stat}"] = pts
        target = path if len(operators) == 1 else path.with_name(f"{path.stem}_{operator}{path.suffix or '.svg'}")
        write_line_chart(
            target,
            series,
            title=f"{operator}: error vs {x_field}",
            x_label=x_field,
            y_label="absolute error",
            log_y=True,
        )
        logger.info(f"Wrote chart for {operator} to {target}")
        written.append(target)
    return written
