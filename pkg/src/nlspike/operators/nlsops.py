"""Composed shift-add spiking operators: Softmax, SiLU, RMSNorm and LayerNorm.

Each operator splits into a numerator path, a denominator path and a
division-group recombination. Numerators and denominators are nonnegative
integers on a shared exponent; signs are routed around the group and
reapplied on the decoded quotient. The bound calculators return the
closed-form error bounds together with the additive slack that the
coefficient grids and datapath truncation contribute.
"""

import math
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import KernelDefaults
from ..kernels.base import ContractViolation
from ..kernels.divneuron import DivisionGroupConfig, DivisionRun, calibrate_array, run_array
from ..kernels.fixedq import (
    QArray,
    QGrid,
    QValue,
    mul_const,
    mul_const_scaled,
    quantize,
)
from ..kernels.polarnorm import (
    CordicConfig,
    bound_eps_pol,
    fixed_point_slack,
    norm_working_exp,
    tree_norm_array,
)
from ..kernels.pwlexp import PwlExpTable, bound_eps_exp, build_table, eval_array, grid_slack
from ..kernels.spikecode import split_currents
from ..kernels.tally import record


OPERATORS = ("softmax", "silu", "rmsnorm", "layernorm")

VectorLike = Union[QArray, Sequence[QValue]]

_OVERRIDABLE = ("H", "K", "T", "L", "n_cordic", "slope_bits", "intercept_bits", "sqrt_d_bits", "work_frac_bits")


@lru_cache(maxsize=64)
def _cached_table(H: float, K: int, slope_bits: int, intercept_bits: int, work_frac_bits: int) -> PwlExpTable:
    return build_table(
        H, K, slope_bits=slope_bits, intercept_bits=intercept_bits, work_frac_bits=work_frac_bits
    )


@dataclass(frozen=True)
class NlsConfig:
    """Joint configuration of the kernels behind every NLS operator."""

    div: DivisionGroupConfig
    exp_table: PwlExpTable
    cordic: CordicConfig
    H: float
    sqrt_d_bits: int = 16

    def __post_init__(self):
        if self.exp_table.H != self.H:
            raise ContractViolation(
                f"exp_table was built for H={self.exp_table.H}, config has H={self.H}"
            )

    @property
    def work_frac_bits(self) -> int:
        return self.exp_table.work_frac_bits

    @classmethod
    def from_defaults(cls, defaults: Optional[KernelDefaults] = None, **overrides) -> "NlsConfig":
        """Build from the packaged defaults; ``overrides`` replace single knobs."""
        defaults = defaults or KernelDefaults.from_json()
        unknown = set(overrides) - set(_OVERRIDABLE)
        if unknown:
            raise ContractViolation(
                f"Unknown config overrides {sorted(unknown)}, use any of {list(_OVERRIDABLE)}"
            )
        values = {name: getattr(defaults, name) for name in _OVERRIDABLE}
        values.update({k: v for k, v in overrides.items() if v is not None})
        table = _cached_table(
            float(values["H"]),
            int(values["K"]),
            int(values["slope_bits"]),
            int(values["intercept_bits"]),
            int(values["work_frac_bits"]),
        )
        return cls(
            div=DivisionGroupConfig(T=int(values["T"]), L=int(values["L"])),
            exp_table=table,
            cordic=CordicConfig(n_iters=int(values["n_cordic"])),
            H=float(values["H"]),
            sqrt_d_bits=int(values["sqrt_d_bits"]),
        )

    def with_table(self, table: PwlExpTable) -> "NlsConfig":
        """Same configuration driven by another (e.g. tampered) table."""
        return NlsConfig(div=self.div, exp_table=table, cordic=self.cordic, H=table.H, sqrt_d_bits=self.sqrt_d_bits)

    def summary(self) -> Dict[str, Union[int, float]]:
        return {
            "H": self.H,
            "K": self.exp_table.K,
            "T": self.div.T,
            "L": self.div.L,
            "n_cordic": self.cordic.n_iters,
        }


def _as_qarray(x) -> Tuple[QArray, str]:
    if isinstance(x, QArray):
        return x, "array"
    if isinstance(x, QValue):
        return QArray(np.array(x.raw), x.scale_exp, np.array(x.saturated)), "scalar"
    return QArray.from_qvalues(x), "list"


def _restore(out: QArray, kind: str):
    if kind == "array":
        return out
    values = out.to_qvalues()
    return values[0] if kind == "scalar" else values


def _require_vector(xq: QArray, op: str) -> int:
    if xq.raw.ndim == 0 or xq.shape[-1] < 1:
        raise ContractViolation(f"{op} needs a vector input with d >= 1, got shape {xq.shape}")
    return xq.shape[-1]


def _flags(*masks) -> Optional[np.ndarray]:
    """Element-wise OR of the saturation masks that are present."""
    present = [np.asarray(m, dtype=bool) for m in masks if m is not None]
    if not present:
        return None
    out = present[0]
    for m in present[1:]:
        out = out | m
    return out


def _quotients(numerators: np.ndarray, denominators: np.ndarray, div: DivisionGroupConfig) -> DivisionRun:
    """Two-window division; denominators broadcast against numerators."""
    theta = calibrate_array(split_currents(denominators, div.T), div)
    return run_array(split_currents(numerators, div.T), theta, div)


@lru_cache(maxsize=256)
def sqrt_d_constant(d: int, bits: int = 16) -> QValue:
    """sqrt(d) on the finest unsigned ``bits``-wide grid that holds it."""
    if d < 1:
        raise ContractViolation(f"d must be >= 1, got {d}")
    root = math.sqrt(d)
    return quantize(root, QGrid.fitting(root, bits, signed=False))


def _times_constant(mag: np.ndarray, c: QValue) -> np.ndarray:
    """mag * c back on mag's own exponent (floor)."""
    if c.scale_exp <= 0:
        return mul_const_scaled(mag, c.raw, -c.scale_exp)
    return mul_const_scaled(mag, c.raw, 0) << c.scale_exp


def nls_softmax(z: VectorLike, cfg: NlsConfig):
    """Softmax over the last axis with one shared denominator window per vector.

    Logits are shifted to z - max + H so the largest maps to e^H; classes
    that land below -H contribute zero. All exponentials share one
    calibrated threshold and each class runs one numerator window.
    """
    zq, kind = _as_qarray(z)
    d = _require_vector(zq, "nls_softmax")
    f = cfg.work_frac_bits
    u = zq.rescale(-f).raw
    m = u.max(axis=-1, keepdims=True)
    rows = u.size // d
    h_raw = int(round(math.ldexp(cfg.H, f)))
    shifted = u - m + h_raw
    record(acs=(d - 1) * rows + 2 * u.size)

    e = eval_array(QArray(shifted, -f), cfg.exp_table).raw
    assert np.all(e.max(axis=-1) > 0), "the maximal logit maps to e^H > 0"
    den = e.sum(axis=-1, keepdims=True)
    record(acs=(d - 1) * rows)

    run = _quotients(e, den, cfg.div)
    return _restore(QArray(run.q, -cfg.div.n, _flags(zq.saturated, run.saturated)), kind)


def _silu_unit(xq: QArray, cfg: NlsConfig, div: DivisionGroupConfig) -> QArray:
    f = cfg.work_frac_bits
    u = xq.rescale(-f).raw
    h_raw = int(round(math.ldexp(cfg.H, f)))
    mag = np.abs(u)
    e = eval_array(QArray(-u, -f), cfg.exp_table).raw
    den = e + (1 << f)
    record(acs=3 * u.size)  # |x|, -x, +1

    run = _quotients(mag, den, div)
    out_exp = min(-div.n, xq.scale_exp)
    q = run.q << (-div.n - out_exp)
    q = np.where(u < 0, -q, q)
    inside = np.abs(u) <= h_raw
    y = np.where(u > h_raw, xq.rescale(out_exp).raw, np.where(inside, q, 0))
    return QArray(y, out_exp, _flags(xq.saturated, run.saturated & inside))


def nls_silu(x: Union[QValue, VectorLike], cfg: NlsConfig):
    """x * sigmoid(x): identity above H, zero below -H, division group inside."""
    xq, kind = _as_qarray(x)
    return _restore(_silu_unit(xq, cfg, cfg.div), kind)


def nls_silu_tdf(x: Union[QValue, VectorLike], cfg: NlsConfig, steps: Optional[int] = None):
    """Time-dependent SiLU: the whole unit re-evaluated at each of ``steps`` timesteps.

    Every step runs PWL-Exp, the +1, calibration and a one-step division
    window; for a constant input each step yields the same output, which
    is returned.
    """
    steps = cfg.div.T if steps is None else steps
    if steps < 1:
        raise ContractViolation(f"steps must be >= 1, got {steps}")
    xq, kind = _as_qarray(x)
    step_div = DivisionGroupConfig(T=1, L=cfg.div.L)
    out = None
    for _ in range(steps):
        out = _silu_unit(xq, cfg, step_div)
    return _restore(out, kind)


def _rmsnorm_array(xq: QArray, eps: float, cfg: NlsConfig) -> QArray:
    d = xq.shape[-1]
    R = tree_norm_array(xq, eps, cfg.cordic)
    s = R.scale_exp
    u = xq.rescale(s).raw
    num = _times_constant(np.abs(u), sqrt_d_constant(d, cfg.sqrt_d_bits))
    record(acs=u.size)

    run = _quotients(num, R.raw[..., None], cfg.div)
    q = np.where(u < 0, -run.q, run.q)
    record(acs=u.size)
    return QArray(q, -cfg.div.n, _flags(xq.saturated, run.saturated))


def nls_rmsnorm(x: VectorLike, eps: float, cfg: NlsConfig):
    """x_i * sqrt(d) / sqrt(sum x^2 + eps*d) over the last axis.

    A zero vector with eps = 0 leaves the division group uncalibrated and
    raises DenominatorUnderflow.
    """
    xq, kind = _as_qarray(x)
    _require_vector(xq, "nls_rmsnorm")
    return _restore(_rmsnorm_array(xq, eps, cfg), kind)


def center(xq: QArray) -> QArray:
    """d * x - sum(x), which is d * (x - mean(x)) exactly, on the input exponent.

    Multiplying by d is a single shift when d is a power of two.
    """
    d = xq.shape[-1]
    total = xq.raw.sum(axis=-1, keepdims=True)
    record(acs=(d - 1) * (xq.raw.size // d))
    centered = mul_const(xq.raw, d) - total
    record(acs=xq.raw.size)
    return QArray(centered, xq.scale_exp, xq.saturated)


def nls_layernorm(x: VectorLike, eps: float, cfg: NlsConfig):
    """Mean subtraction by integer accumulation, then RMSNorm of the centered vector.

    The centered vector is carried scaled by d; RMSNorm is scale-free once eps
    is scaled by d^2.
    """
    xq, kind = _as_qarray(x)
    d = _require_vector(xq, "nls_layernorm")
    return _restore(_rmsnorm_array(center(xq), eps * d * d, cfg), kind)


def nls_apply(operator: str, x: QArray, cfg: NlsConfig, eps: float = 1e-5) -> QArray:
    """Dispatch by operator name."""
    if operator == "softmax":
        return nls_softmax(x, cfg)
    if operator == "silu":
        return nls_silu(x, cfg)
    if operator == "rmsnorm":
        return nls_rmsnorm(x, eps, cfg)
    if operator == "layernorm":
        return nls_layernorm(x, eps, cfg)
    raise ContractViolation(f"Unknown operator {operator}, use one of {list(OPERATORS)}")


# Error bounds


def bound_softmax(cfg: NlsConfig) -> float:
    """Per-class relative bound 2/(1-eps_exp) * (eps_exp + Delta)."""
    eps = bound_eps_exp(cfg.H, cfg.exp_table.K)
    return 2.0 / (1.0 - eps) * (eps + cfg.div.delta)


def bound_silu(x, cfg: NlsConfig):
    """Absolute bound |x| * 2 eps_exp / (1 - eps_exp) + |x| * Delta."""
    eps = bound_eps_exp(cfg.H, cfg.exp_table.K)
    return np.abs(x) * (2.0 * eps / (1.0 - eps) + cfg.div.delta)


def bound_rms(d: int, cfg: NlsConfig) -> float:
    """Per-coordinate relative bound (eps_pol + Delta)/(1 - eps_pol) + sqrt(d) * Delta.

    eps_pol is taken over the d + 1 leaves of the augmented tree.
    """
    eps_pol = bound_eps_pol(d + 1, cfg.cordic.n_iters)
    delta = cfg.div.delta
    return (eps_pol + delta) / (1.0 - eps_pol) + math.sqrt(d) * delta


def bound_rms_coord(x_i: float, R: float, d: int, cfg: NlsConfig) -> float:
    """Per-coordinate relative bound from the exact norm R and coordinate x_i."""
    if x_i == 0:
        raise ContractViolation("bound_rms_coord needs a nonzero coordinate")
    eps_pol = bound_eps_pol(d + 1, cfg.cordic.n_iters)
    delta = cfg.div.delta
    return (eps_pol + delta) / (1.0 - eps_pol) + delta * R / abs(x_i)


@dataclass(frozen=True)
class BoundReport:
    """Primitive error scales and the assembled operator bounds for one config."""

    eps_exp: float
    delta: float
    eps_pol: float
    softmax: float
    silu_per_unit: float  # bound_silu(x) / |x|
    rms: float
    d: int

    @classmethod
    def for_config(cls, cfg: NlsConfig, d: int) -> "BoundReport":
        eps = bound_eps_exp(cfg.H, cfg.exp_table.K)
        return cls(
            eps_exp=eps,
            delta=cfg.div.delta,
            eps_pol=bound_eps_pol(d + 1, cfg.cordic.n_iters),
            softmax=bound_softmax(cfg),
            silu_per_unit=float(bound_silu(1.0, cfg)),
            rms=bound_rms(d, cfg),
            d=d,
        )

    def as_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Allowance:
    """Pass criterion |y_hat - y| <= bound * scale + slack, element-wise."""

    bound: float
    slack: float

    def limit(self, scale):
        return self.bound * np.abs(scale) + self.slack


def softmax_allowance(cfg: NlsConfig, d: int) -> Allowance:
    tbl = cfg.exp_table
    eps = bound_eps_exp(cfg.H, tbl.K)
    eps_a, h_abs = grid_slack(tbl)
    e_h = math.exp(cfg.H)
    slack = (
        cfg.div.delta
        + 2.0 * eps_a / (1.0 - eps)
        + (d + 1) * h_abs / ((1.0 - eps) * e_h)
        + (d - 1) * math.exp(-2.0 * cfg.H)
        + math.ldexp(1.0, cfg.div.n - tbl.work_frac_bits) / e_h
    )
    return Allowance(bound=bound_softmax(cfg), slack=slack)


def silu_allowance(cfg: NlsConfig) -> Allowance:
    """Bound coefficient per unit |x|; scale the check by |x|."""
    tbl = cfg.exp_table
    eps = bound_eps_exp(cfg.H, tbl.K)
    eps_a, h_abs = grid_slack(tbl)
    slack = (
        cfg.div.delta
        + cfg.H * (eps_a + h_abs) / (1.0 - eps)
        + cfg.H * math.ldexp(1.0, cfg.div.n - tbl.work_frac_bits)
    )
    return Allowance(bound=float(bound_silu(1.0, cfg)), slack=slack)


def rms_work_exp(xq: QArray, eps: float, cfg: NlsConfig) -> int:
    """Exponent of the CORDIC grid :func:`nls_rmsnorm` uses on this batch."""
    return norm_working_exp(xq, eps, cfg.cordic)


def layernorm_work_exp(xq: QArray, eps: float, cfg: NlsConfig) -> int:
    """Exponent of the CORDIC grid :func:`nls_layernorm` uses on this batch."""
    d = xq.shape[-1]
    return norm_working_exp(center(xq), eps * d * d, cfg.cordic)


def rms_allowance(cfg: NlsConfig, d: int, r_min: float, work_exp: int) -> Allowance:
    """Relative bound plus slack for the CORDIC truncation, sqrt(d) constant and floor division.

    ``r_min`` is the smallest exact norm sqrt(sum x^2 + eps*d) of the batch and
    ``work_exp`` the exponent of the CORDIC grid (see :func:`rms_work_exp`).
    """
    if not r_min > 0:
        raise ContractViolation(f"r_min must be positive, got {r_min}")
    ulp = math.ldexp(1.0, work_exp)
    tree = fixed_point_slack(d + 1, cfg.cordic, work_exp, norm=r_min) / r_min
    c = sqrt_d_constant(d, cfg.sqrt_d_bits)
    root = math.sqrt(d)
    const_rel = math.ldexp(1.0, c.scale_exp - 1) / root
    division = ((1 << cfg.div.n) + 4) * ulp / r_min
    slack = cfg.div.delta + root * (2.0 * tree + const_rel + division)
    return Allowance(bound=bound_rms(d, cfg), slack=slack)


def layernorm_allowance(cfg: NlsConfig, d: int, r_min: float, work_exp: int) -> Allowance:
    """RMSNorm allowance of the centered vector, which the datapath carries scaled by d.

    ``r_min`` is the smallest exact norm of x - mean(x) with eps*d added under
    the root; ``work_exp`` comes from :func:`layernorm_work_exp`. Centering is
    exact.
    """
    return rms_allowance(cfg, d, d * r_min, work_exp)
