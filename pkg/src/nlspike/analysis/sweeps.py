"""Seeded operator sweeps against the float oracle.

Inputs are sampled per (operator, d) cell from the master seed and quantized
onto the operator's 8-bit input grid; the oracle, the NLS operator and every
baseline see the same quantized inputs.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import KernelDefaults, RunSettings
from ..kernels.base import ContractViolation
from ..kernels.fixedq import QArray, QGrid, quantize_array
from ..operators.baselines import OPERATOR_KINDS, BaselineKind, baseline_eval, oracle_for
from ..operators.nlsops import (
    OPERATORS,
    Allowance,
    NlsConfig,
    layernorm_allowance,
    layernorm_work_exp,
    nls_apply,
    rms_allowance,
    rms_work_exp,
    silu_allowance,
    softmax_allowance,
)
from ..utils.seeding import cell_rng
from .metrics import NLS_KIND, ErrorReport, allowance_excess, config_summary, error_stats

logger = logging.getLogger(__name__)

CHUNK_ROWS = 256
SILU_GRID_KIND = "nls_grid"
SILU_GRID_SCALE_EXP = -20
BOUND_OPERATORS = ("softmax", "silu", "rmsnorm")


def sample_inputs(
    operator: str,
    d: int,
    samples: int,
    seed: int,
    defaults: Optional[KernelDefaults] = None,
) -> QArray:
    """Seeded Gaussian inputs of shape (samples, d) on the operator's input grid.

    Softmax logits use standard deviation ``logit_scale``; the other
    operators use unit variance.
    """
    if operator not in OPERATORS:
        raise ContractViolation(f"Unknown operator {operator}, use one of {list(OPERATORS)}")
    if samples < 1 or d < 1:
        raise ContractViolation(f"need samples >= 1 and d >= 1, got samples={samples}, d={d}")
    defaults = defaults or KernelDefaults.from_json()
    rng = cell_rng(seed, operator, d)
    sigma = defaults.logit_scale if operator == "softmax" else 1.0
    x = rng.normal(0.0, sigma, size=(samples, d))
    return quantize_array(x, QGrid(defaults.input_bits, defaults.input_scale_for(operator)))


def silu_grid_inputs(H: float, points: int = 10_000) -> QArray:
    """``points`` equispaced inputs over [-H, H] on a fine working grid, shape (points, 1)."""
    xs = np.linspace(-H, H, points)[:, None]
    return quantize_array(xs, QGrid(bits=32, scale_exp=SILU_GRID_SCALE_EXP))


def evaluate_nls(operator: str, xq: QArray, cfg: NlsConfig, eps: float) -> np.ndarray:
    """Run the NLS operator over row chunks and return float outputs."""
    outs = []
    for start in range(0, xq.shape[0], CHUNK_ROWS):
        outs.append(nls_apply(operator, xq[start : start + CHUNK_ROWS], cfg, eps).to_float())
    return np.concatenate(outs, axis=0)


def allowance_for(
    operator: str,
    cfg: NlsConfig,
    xq: QArray,
    y: np.ndarray,
    eps: float,
) -> Tuple[Allowance, np.ndarray]:
    """(allowance, scale) of the element-wise bound check for one batch."""
    x = xq.to_float()
    d = x.shape[-1]
    if operator == "softmax":
        return softmax_allowance(cfg, d), y
    if operator == "silu":
        return silu_allowance(cfg), x
    if operator == "rmsnorm":
        r_min = float(np.sqrt(np.sum(x * x, axis=-1) + eps * d).min())
        return rms_allowance(cfg, d, r_min, rms_work_exp(xq, eps, cfg)), y
    if operator == "layernorm":
        c = x - x.mean(axis=-1, keepdims=True)
        r_min = float(np.sqrt(np.sum(c * c, axis=-1) + eps * d).min())
        return layernorm_allowance(cfg, d, r_min, layernorm_work_exp(xq, eps, cfg)), y
    raise ContractViolation(f"Unknown operator {operator}, use one of {list(OPERATORS)}")


@dataclass(frozen=True)
class SweepCell:
    """One (operator, kind, d, config) evaluation."""

    operator: str
    kind: str
    d: int
    cfg: NlsConfig
    samples: int
    seed: int
    eps: float = 1e-5


def _report(
    cell: SweepCell,
    xq: QArray,
    y_hat: np.ndarray,
    y: np.ndarray,
    allowance: Optional[Allowance] = None,
    scale: Optional[np.ndarray] = None,
) -> ErrorReport:
    mean_abs, max_abs, mean_rel, max_rel = error_stats(y_hat, y)
    summary = cell.cfg.summary()
    report = ErrorReport(
        operator=cell.operator,
        kind=cell.kind,
        d=cell.d,
        H=cell.cfg.H,
        K=summary["K"],
        T=summary["T"],
        L=summary["L"],
        samples=int(xq.shape[0]),
        seed=cell.seed,
        mean_abs=mean_abs,
        max_abs=max_abs,
        mean_rel=mean_rel,
        max_rel=max_rel,
        config=config_summary(**summary),
    )
    if allowance is not None:
        excess = allowance_excess(y_hat, y, scale, allowance)
        report.bound = allowance.bound
        report.slack = allowance.slack
        report.max_excess = excess
        report.bound_satisfied = bool(excess <= 0.0)
    return report


def evaluate_cell(cell: SweepCell, defaults: Optional[KernelDefaults] = None) -> ErrorReport:
    """Measure one cell against the oracle on its seeded inputs."""
    defaults = defaults or KernelDefaults.from_json()
    xq = sample_inputs(cell.operator, cell.d, cell.samples, cell.seed, defaults)
    x = xq.to_float()
    y = oracle_for(cell.operator)(x, cell.eps)
    if cell.kind == NLS_KIND:
        y_hat = evaluate_nls(cell.operator, xq, cell.cfg, cell.eps)
        allowance, scale = allowance_for(cell.operator, cell.cfg, xq, y, cell.eps)
        return _report(cell, xq, y_hat, y, allowance, scale)
    y_hat = baseline_eval(cell.kind, cell.operator, x, H=cell.cfg.H, eps=cell.eps)
    return _report(cell, xq, y_hat, y)


def silu_grid_report(cfg: NlsConfig, points: int = 10_000, seed: int = 0) -> ErrorReport:
    """NLS-SiLU against x*sigmoid(x) on an equispaced grid over [-H, H]."""
    cell = SweepCell("silu", SILU_GRID_KIND, 1, cfg, points, seed)
    xq = silu_grid_inputs(cfg.H, points)
    x = xq.to_float()
    y = oracle_for("silu")(x, 0.0)
    y_hat = evaluate_nls("silu", xq, cfg, 0.0)
    allowance, scale = allowance_for("silu", cfg, xq, y, 0.0)
    return _report(cell, xq, y_hat, y, allowance, scale)


class SweepRunner:
    """Evaluates sweep cells, fanning out over a thread pool."""

    def __init__(
        self,
        settings: Optional[RunSettings] = None,
        defaults: Optional[KernelDefaults] = None,
    ):
        self.settings = settings or RunSettings.from_env()
        self.defaults = defaults or KernelDefaults.from_json()
        self.logger = logging.getLogger(self.__class__.__name__)

    def _evaluate(self, cell: SweepCell) -> ErrorReport:
        report = evaluate_cell(cell, self.defaults)
        self.logger.debug(report.describe())
        return report

    def run(self, cells: Sequence[SweepCell]) -> List[ErrorReport]:
        """Evaluate ``cells``; the result order matches the input order."""
        workers = max(1, min(self.settings.threads, len(cells)))
        self.logger.info(f"Evaluating {len(cells)} sweep cells on {workers} thread(s)")
        if workers == 1:
            reports = [self._evaluate(cell) for cell in cells]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                reports = list(pool.map(self._evaluate, cells))
        for report in reports:
            if report.bound_satisfied is False:
                self.logger.warning(f"Bound check failed: {report.describe()}")
        return reports


def _kind_value(kind: Union[str, BaselineKind]) -> str:
    if isinstance(kind, BaselineKind):
        return kind.value
    if kind == NLS_KIND:
        return kind
    return BaselineKind(kind).value


def run_error_sweep(
    operator: str,
    kinds: Iterable[Union[str, BaselineKind]],
    dims: Sequence[int],
    samples: int,
    seed: int,
    cfg: Optional[NlsConfig] = None,
    eps: Optional[float] = None,
    runner: Optional[SweepRunner] = None,
) -> List[ErrorReport]:
    """Reports for every (d, kind) pair; ``kinds`` mixes "nls" and baseline tags."""
    if samples < 1:
        raise ContractViolation(f"samples must be >= 1, got {samples}")
    runner = runner or SweepRunner()
    cfg = cfg or NlsConfig.from_defaults(runner.defaults)
    eps = runner.defaults.rms_eps if eps is None else eps
    kinds = [_kind_value(kind) for kind in kinds]
    cells = [SweepCell(operator, kind, d, cfg, samples, seed, eps) for d in dims for kind in kinds]
    return runner.run(cells)


def baseline_kinds(operator: str) -> List[str]:
    if operator not in OPERATOR_KINDS:
        raise ContractViolation(f"Unknown operator {operator}, use one of {list(OPERATOR_KINDS)}")
    return [kind.value for kind in OPERATOR_KINDS[operator] if kind is not BaselineKind.ORACLE]


def run_dimension_sweep(
    operator: str,
    dims: Sequence[int],
    samples: int,
    seed: int,
    cfg: Optional[NlsConfig] = None,
    eps: Optional[float] = None,
    runner: Optional[SweepRunner] = None,
) -> List[ErrorReport]:
    """NLS plus every applicable baseline across ``dims``."""
    kinds = [NLS_KIND] + baseline_kinds(operator)
    return run_error_sweep(operator, kinds, dims, samples, seed, cfg, eps, runner)


def run_h_sensitivity(
    operator: str,
    H_values: Sequence[float],
    cfg: Optional[NlsConfig] = None,
    samples: int = 10_000,
    seed: int = 7,
    d: int = 64,
    eps: Optional[float] = None,
    runner: Optional[SweepRunner] = None,
) -> List[ErrorReport]:
    """NLS reports for each clipping half-interval H, other knots taken from ``cfg``."""
    if operator not in ("silu", "softmax"):
        raise ContractViolation(f"H sensitivity covers silu and softmax, got {operator}")
    if not H_values:
        raise ContractViolation("H_values must not be empty")
    runner = runner or SweepRunner()
    template = (cfg or NlsConfig.from_defaults(runner.defaults)).summary()
    eps = runner.defaults.rms_eps if eps is None else eps
    cells = []
    for H in H_values:
        cfg_h = NlsConfig.from_defaults(runner.defaults, **{**template, "H": float(H)})
        cells.append(SweepCell(operator, NLS_KIND, d, cfg_h, samples, seed, eps))
    return runner.run(cells)


def h_trend_check(operator: str, reports: Sequence[ErrorReport], reference_H: float = 5.0) -> Tuple[bool, str]:
    """Expected H trends: SiLU max error grows past the reference, Softmax mean error shrinks towards it."""
    by_H = sorted(reports, key=lambda r: r.H)
    if len(by_H) < 2:
        return True, "single H value, no trend to check"
    ref = min(by_H, key=lambda r: abs(r.H - reference_H))
    if operator == "silu":
        last = by_H[-1]
        if last is ref:
            return True, f"no H above the reference {ref.H:g}"
        ok = last.max_abs > ref.max_abs
        return ok, f"silu max_abs H={last.H:g}: {last.max_abs:.3e} vs H={ref.H:g}: {ref.max_abs:.3e}"
    first = by_H[0]
    if first is ref:
        return True, f"no H below the reference {ref.H:g}"
    ok = first.mean_abs > ref.mean_abs
    return ok, f"{operator} mean_abs H={first.H:g}: {first.mean_abs:.3e} vs H={ref.H:g}: {ref.mean_abs:.3e}"


def verify_bounds(
    cfg: Optional[NlsConfig] = None,
    dims: Sequence[int] = (8, 16, 32, 64, 128, 256),
    samples: int = 10_000,
    seed: int = 7,
    operators: Sequence[str] = BOUND_OPERATORS,
    eps: Optional[float] = None,
    runner: Optional[SweepRunner] = None,
) -> List[ErrorReport]:
    """One NLS report per (operator, d) with the element-wise bound check filled in."""
    reports: List[ErrorReport] = []
    for operator in operators:
        reports.extend(run_error_sweep(operator, [NLS_KIND], dims, samples, seed, cfg, eps, runner))
    return reports
