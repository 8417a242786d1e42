"""Error statistics and the per-cell report row."""

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import polars as pl

from ..operators.nlsops import Allowance

NLS_KIND = "nls"

REPORT_SCHEMA: Dict[str, pl.DataType] = {
    "operator": pl.Utf8,
    "kind": pl.Utf8,
    "d": pl.Int64,
    "H": pl.Float64,
    "K": pl.Int64,
    "T": pl.Int64,
    "L": pl.Int64,
    "samples": pl.Int64,
    "seed": pl.Int64,
    "mean_abs": pl.Float64,
    "max_abs": pl.Float64,
    "mean_rel": pl.Float64,
    "max_rel": pl.Float64,
    "bound": pl.Float64,
    "slack": pl.Float64,
    "pass": pl.Boolean,
}


def relative_errors(y_hat: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|y_hat - y| / |y|; 0 where both are zero, inf where only y is zero."""
    err = np.abs(np.asarray(y_hat, dtype=np.float64) - y)
    mag = np.abs(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(mag > 0, err / np.where(mag > 0, mag, 1.0), np.where(err == 0, 0.0, np.inf))
    return rel


def error_stats(y_hat: np.ndarray, y: np.ndarray) -> Tuple[float, float, float, float]:
    """(mean_abs, max_abs, mean_rel, max_rel) over every output element."""
    err = np.abs(np.asarray(y_hat, dtype=np.float64) - y)
    rel = relative_errors(y_hat, y)
    return float(err.mean()), float(err.max()), float(rel.mean()), float(rel.max())


def allowance_excess(y_hat: np.ndarray, y: np.ndarray, scale: np.ndarray, allowance: Allowance) -> float:
    """max over elements of |y_hat - y| - (bound * scale + slack); <= 0 means the check holds."""
    err = np.abs(np.asarray(y_hat, dtype=np.float64) - y)
    return float(np.max(err - allowance.limit(scale)))


@dataclass
class ErrorReport:
    """One (operator, kind, d, config) cell of a sweep."""

    operator: str
    kind: str
    d: int
    H: float
    K: int
    T: int
    L: int
    samples: int
    seed: int
    mean_abs: float
    max_abs: float
    mean_rel: float
    max_rel: float
    bound: Optional[float] = None
    slack: Optional[float] = None
    max_excess: Optional[float] = None
    bound_satisfied: Optional[bool] = None
    config: str = ""

    @property
    def is_nls(self) -> bool:
        return self.kind.startswith(NLS_KIND)

    def margin(self) -> Optional[float]:
        """How far inside (positive) or outside (negative) the allowance the worst element sits."""
        return None if self.max_excess is None else -self.max_excess

    def to_row(self) -> Dict[str, object]:
        row = asdict(self)
        row["pass"] = row.pop("bound_satisfied")
        return {key: row[key] for key in REPORT_SCHEMA}

    def describe(self) -> str:
        status = "n/a" if self.bound_satisfied is None else ("pass" if self.bound_satisfied else "FAIL")
        excess = "" if self.max_excess is None else f", max_excess={self.max_excess:.3e}"
        return (
            f"{self.operator}/{self.kind} d={self.d} ({self.config}): "
            f"max_abs={self.max_abs:.3e}, max_rel={self.max_rel:.3e}{excess} [{status}]"
        )


def config_summary(H: float, K: int, T: int, L: int, n_cordic: int) -> str:
    return f"H={H:g},K={K},T={T},L={L},n={n_cordic}"

