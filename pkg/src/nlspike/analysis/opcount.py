"""MAC / AC / shift counts of one NLS operator evaluation per window length T."""

import logging
from dataclasses import asdict, dataclass, replace
from typing import Dict, List, Optional, Sequence

import polars as pl

from ..config import KernelDefaults
from ..kernels.divneuron import DivisionGroupConfig
from ..kernels.tally import tally
from ..operators.nlsops import NlsConfig, nls_apply, nls_silu_tdf
from .sweeps import sample_inputs

logger = logging.getLogger(__name__)

OPCOUNT_SCHEMA: Dict[str, pl.DataType] = {
    "operator": pl.Utf8,
    "d": pl.Int64,
    "T": pl.Int64,
    "macs": pl.Int64,
    "acs": pl.Int64,
    "shifts": pl.Int64,
}


@dataclass
class OpCountReport:
    """Operation counts of one operator evaluation."""

    operator: str
    d: int
    T: int
    macs: int
    acs: int
    shifts: int

    def to_row(self) -> Dict[str, object]:
        return asdict(self)


def count_ops(
    operator: str,
    d: int,
    T: int,
    cfg: Optional[NlsConfig] = None,
    seed: int = 7,
    eps: float = 1e-5,
    defaults: Optional[KernelDefaults] = None,
) -> OpCountReport:
    """Count the instrumented arithmetic of one evaluation on one seeded vector.

    SiLU runs the time-dependent form (the whole unit once per timestep);
    the other operators run with a T-step division window.
    """
    defaults = defaults or KernelDefaults.from_json()
    cfg = cfg or NlsConfig.from_defaults(defaults)
    x = sample_inputs(operator, d, 1, seed, defaults)
    if operator == "silu":
        with tally() as counts:
            nls_silu_tdf(x, cfg, steps=T)
    else:
        run_cfg = replace(cfg, div=DivisionGroupConfig(T=T, L=cfg.div.L))
        with tally() as counts:
            nls_apply(operator, x, run_cfg, eps)
    logger.debug(f"{operator} d={d} T={T}: {counts}")
    return OpCountReport(operator, d, T, counts.macs, counts.acs, counts.shifts)


def opcount_table(
    operators: Sequence[str],
    dims: Sequence[int],
    T_values: Sequence[int],
    cfg: Optional[NlsConfig] = None,
    seed: int = 7,
    eps: float = 1e-5,
) -> List[OpCountReport]:
    return [
        count_ops(operator, d, T, cfg, seed, eps)
        for operator in operators
        for d in dims
        for T in T_values
    ]


def opcount_frame(reports: Sequence[OpCountReport]) -> pl.DataFrame:
    """Counts plus acs/shifts ratios against the smallest T of each (operator, d)."""
    df = pl.DataFrame([r.to_row() for r in reports], schema=OPCOUNT_SCHEMA)
    if df.is_empty():
        return df.with_columns(
            pl.lit(None, dtype=pl.Float64).alias("acs_ratio"),
            pl.lit(None, dtype=pl.Float64).alias("shifts_ratio"),
        )
    group = ["operator", "d"]
    return df.with_columns(
        (pl.col("acs") / pl.col("acs").sort_by("T").first().over(group)).alias("acs_ratio"),
        (pl.col("shifts") / pl.col("shifts").sort_by("T").first().over(group)).alias("shifts_ratio"),
    )
