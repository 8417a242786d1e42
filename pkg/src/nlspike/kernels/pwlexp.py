"""PWL-Exp unit: K-segment piecewise-linear e^x over [-H, H] from lookup tables.

Intercepts are the knot values e^{x_i} on an unsigned 16-bit grid. Slopes are
kept on an unsigned 8-bit grid relative to their quantized knot value,
r_i = (b_{i+1} - b_i) / (b_i * gamma) rounded up, and the absolute slope
b_i * r_i is formed inside the shift-add datapath.
"""

import math
import struct
import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .base import ContractViolation, TableFormatError
from .fixedq import ARRAY_GRID_MAX_BITS, QArray, QGrid, QValue, mul_const, mul_lookup, quantize_array
from .tally import record

logger = logging.getLogger(__name__)

LUT_HEADER = struct.Struct("<dIii")  # H, K, slope scale_exp, intercept scale_exp
LUT_SLOPE_BITS = 8
LUT_INTERCEPT_BITS = 16
RECIPROCAL_BITS = 16


class BelowPolicy(str, Enum):
    """Output for inputs below -H."""

    ZERO = "zero"  # softmax path
    CLAMP = "clamp"


def _is_power_of_two(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class PwlExpTable:
    """Quantized slope/intercept lookup tables over K uniform segments."""

    H: float
    K: int
    slope_codes: Tuple[int, ...]
    intercept_codes: Tuple[int, ...]
    slope_scale_exp: int
    intercept_scale_exp: int
    below_neg_H: BelowPolicy = BelowPolicy.ZERO
    slope_bits: int = LUT_SLOPE_BITS
    intercept_bits: int = LUT_INTERCEPT_BITS
    work_frac_bits: int = 32

    def __post_init__(self):
        if len(self.slope_codes) != self.K or len(self.intercept_codes) != self.K:
            raise ContractViolation(
                f"table needs exactly K={self.K} slopes and intercepts, got "
                f"{len(self.slope_codes)} and {len(self.intercept_codes)}"
            )

    @property
    def gamma(self) -> float:
        return 2.0 * self.H / self.K

    @property
    def knots(self) -> np.ndarray:
        return -self.H + self.gamma * np.arange(self.K + 1)

    @property
    def real_intercepts(self) -> np.ndarray:
        return np.exp(self.knots[:-1])

    @property
    def real_slopes(self) -> np.ndarray:
        e = np.exp(self.knots)
        return (e[1:] - e[:-1]) / self.gamma

    @property
    def slope_grid(self) -> QGrid:
        return QGrid(self.slope_bits, self.slope_scale_exp, signed=False)

    @property
    def intercept_grid(self) -> QGrid:
        return QGrid(self.intercept_bits, self.intercept_scale_exp, signed=False)

    @property
    def size_bits(self) -> int:
        return self.K * (self.slope_bits + self.intercept_bits)

    def intercept_values(self) -> np.ndarray:
        return np.ldexp(np.array(self.intercept_codes, dtype=np.float64), self.intercept_scale_exp)

    def relative_slope_values(self) -> np.ndarray:
        return np.ldexp(np.array(self.slope_codes, dtype=np.float64), self.slope_scale_exp)

    def slope_values(self) -> np.ndarray:
        """Dequantized absolute slopes b_i * r_i."""
        return self.intercept_values() * self.relative_slope_values()

    def with_policy(self, policy: Union[BelowPolicy, str]) -> "PwlExpTable":
        return replace(self, below_neg_H=BelowPolicy(policy))


def build_table(
    H: float,
    K: int,
    slope_bits: int = LUT_SLOPE_BITS,
    intercept_bits: int = LUT_INTERCEPT_BITS,
    below_neg_H: Union[BelowPolicy, str] = BelowPolicy.ZERO,
    work_frac_bits: int = 32,
) -> PwlExpTable:
    """Endpoint-interpolation tables for e^x on [-H, H] with K segments.

    Relative slopes are taken between the quantized knot values and rounded
    up, so each segment reaches its right knot; the datapath caps it there.
    A segment whose intercept code is zero stays at zero.
    """
    if not (math.isfinite(H) and H > 0):
        raise ContractViolation(f"H must be a positive real, got {H}")
    if K < 2 or not _is_power_of_two(K):
        raise ContractViolation(f"K must be a power of two >= 2, got {K}")
    gamma = 2.0 * H / K
    knots = -H + gamma * np.arange(K + 1)
    e = np.exp(knots)

    b_grid = QGrid.fitting(float(e[:-1].max()), intercept_bits, signed=False)
    # the end knot e^H only feeds the last slope, so it may exceed the stored width
    knot_codes = quantize_array(e, QGrid(ARRAY_GRID_MAX_BITS, b_grid.scale_exp, signed=False)).raw
    lo = knot_codes[:-1].astype(np.float64)
    hi = knot_codes[1:].astype(np.float64)
    relative_slopes = np.divide(hi - lo, lo * gamma, out=np.zeros(K), where=lo > 0)

    top = max(float(relative_slopes.max()), math.expm1(gamma) / gamma)
    r_grid = QGrid.fitting(top, slope_bits, signed=False)
    r_codes = np.minimum(np.ceil(np.ldexp(relative_slopes, -r_grid.scale_exp)), r_grid.raw_max)
    logger.debug(
        f"built PWL-Exp table H={H} K={K}: intercept scale 2^{b_grid.scale_exp}, "
        f"relative slope scale 2^{r_grid.scale_exp}"
    )
    return PwlExpTable(
        H=float(H),
        K=int(K),
        slope_codes=tuple(int(c) for c in r_codes),
        intercept_codes=tuple(int(c) for c in knot_codes[:-1]),
        slope_scale_exp=r_grid.scale_exp,
        intercept_scale_exp=b_grid.scale_exp,
        below_neg_H=BelowPolicy(below_neg_H),
        slope_bits=slope_bits,
        intercept_bits=intercept_bits,
        work_frac_bits=work_frac_bits,
    )


def tampered(
    tbl: PwlExpTable,
    slope_codes: Optional[Sequence[int]] = None,
    intercept_codes: Optional[Sequence[int]] = None,
) -> PwlExpTable:
    """Copy of ``tbl`` with replaced coefficient codes."""
    return replace(
        tbl,
        slope_codes=tuple(tbl.slope_codes if slope_codes is None else slope_codes),
        intercept_codes=tuple(tbl.intercept_codes if intercept_codes is None else intercept_codes),
    )


def _to_work_grid(codes: np.ndarray, shift: int) -> np.ndarray:
    return codes << shift if shift >= 0 else codes >> -shift


@dataclass(frozen=True)
class _Datapath:
    """Integer constants of the evaluation datapath on the 2**-f grid."""

    f: int
    h_raw: int
    gamma_raw: int
    offsets: np.ndarray  # knot offsets i * gamma_raw, i = 0..K
    reciprocal: int  # ~ 2**p / gamma_raw
    p: int
    levels: np.ndarray  # intercepts on the working grid
    caps: np.ndarray  # next knot's level; the last segment is uncapped
    b: np.ndarray
    r: np.ndarray


def _datapath(tbl: PwlExpTable) -> _Datapath:
    f = tbl.work_frac_bits
    h_raw = int(round(math.ldexp(tbl.H, f)))
    gamma_raw = (2 * h_raw) // tbl.K
    p = gamma_raw.bit_length() + RECIPROCAL_BITS
    reciprocal = int(round(math.ldexp(1.0, p) / gamma_raw))
    offsets = gamma_raw * np.arange(tbl.K + 1, dtype=np.int64)
    b = np.array(tbl.intercept_codes, dtype=np.int64)
    levels = _to_work_grid(b, f + tbl.intercept_scale_exp)
    caps = np.append(levels[1:], np.iinfo(np.int64).max)
    return _Datapath(
        f=f,
        h_raw=h_raw,
        gamma_raw=gamma_raw,
        offsets=offsets,
        reciprocal=reciprocal,
        p=p,
        levels=levels,
        caps=caps,
        b=b,
        r=np.array(tbl.slope_codes, dtype=np.int64),
    )


def eval_array(x: QArray, tbl: PwlExpTable) -> QArray:
    """Vectorized table evaluation; result on the 2**-work_frac_bits grid."""
    dp = _datapath(tbl)
    u = x.rescale(-dp.f).raw
    s = u + dp.h_raw
    span = dp.offsets[-1]
    below = s < 0
    s = np.clip(s, 0, span)

    # segment index by reciprocal multiply, then one compare each way
    seg = mul_const(s, dp.reciprocal) >> dp.p
    seg = np.clip(seg, 0, tbl.K - 1)
    seg = np.where(s < dp.offsets[seg], seg - 1, seg)
    seg = np.where((seg < tbl.K - 1) & (s >= dp.offsets[np.minimum(seg + 1, tbl.K)]), seg + 1, seg)
    seg = np.clip(seg, 0, tbl.K - 1)
    dx = s - dp.offsets[seg]

    slope_term = mul_lookup(mul_lookup(dx, dp.b[seg]), dp.r[seg])
    drop = -(tbl.intercept_scale_exp + tbl.slope_scale_exp)
    slope_term = slope_term >> drop if drop >= 0 else slope_term << -drop
    # monotone across knots: a segment never passes the next intercept
    y = np.minimum(dp.levels[seg] + slope_term, dp.caps[seg])
    record(acs=8 * y.size, shifts=3 * y.size)

    if tbl.below_neg_H is BelowPolicy.ZERO:
        y = np.where(below, 0, y)
    return QArray(y, -dp.f)


def eval_exp(x: QValue, tbl: PwlExpTable) -> QValue:
    """Table value of e^x for one fixed-point input."""
    out = eval_array(QArray(np.array([x.raw]), x.scale_exp), tbl)
    return QValue(int(out.raw[0]), out.scale_exp)


def eval_real(x: Union[float, np.ndarray], tbl: PwlExpTable) -> np.ndarray:
    """Unquantized reference interpolant with exact real coefficients."""
    x = np.asarray(x, dtype=np.float64)
    knots = tbl.knots
    xc = np.clip(x, -tbl.H, tbl.H)
    seg = np.clip(np.floor((xc + tbl.H) / tbl.gamma).astype(np.int64), 0, tbl.K - 1)
    y = tbl.real_intercepts[seg] + tbl.real_slopes[seg] * (xc - knots[seg])
    if tbl.below_neg_H is BelowPolicy.ZERO:
        y = np.where(x < -tbl.H, 0.0, y)
    return y


def bound_eps_exp(H: float, K: int) -> float:
    """Relative error bound (2H/K)^2 / 8 * e^{2H/K} of the K-segment interpolant."""
    if not H > 0 or K < 1:
        raise ContractViolation(f"need H > 0 and K >= 1, got H={H}, K={K}")
    h = 2.0 * H / K
    return h * h / 8.0 * math.exp(h)


def grid_slack(tbl: PwlExpTable) -> Tuple[float, float]:
    """(relative, absolute) error added by the coefficient grids and datapath rounding."""
    r_max = float(tbl.relative_slope_values().max())
    # slopes are rounded up by at most one full step
    relative = math.ldexp(1.0, tbl.slope_scale_exp) * tbl.gamma
    ulp = math.ldexp(1.0, -tbl.work_frac_bits)
    max_slope = r_max * float(tbl.intercept_values().max())
    absolute = math.ldexp(1.0, tbl.intercept_scale_exp - 1) * (1.0 + r_max * tbl.gamma)
    absolute += (2.0 + max_slope) * ulp
    return relative, absolute


def eps_grid(tbl: PwlExpTable) -> float:
    """Grid slack expressed relative to the smallest in-range value e^{-H}."""
    relative, absolute = grid_slack(tbl)
    return relative + absolute / math.exp(-tbl.H)


def to_bytes(tbl: PwlExpTable) -> bytes:
    if tbl.slope_bits != LUT_SLOPE_BITS or tbl.intercept_bits != LUT_INTERCEPT_BITS:
        raise ContractViolation(
            f"LUT format stores {LUT_SLOPE_BITS}-bit slopes and {LUT_INTERCEPT_BITS}-bit "
            f"intercepts, table has {tbl.slope_bits} and {tbl.intercept_bits}"
        )
    header = LUT_HEADER.pack(tbl.H, tbl.K, tbl.slope_scale_exp, tbl.intercept_scale_exp)
    slopes = struct.pack(f"<{tbl.K}B", *tbl.slope_codes)
    intercepts = struct.pack(f"<{tbl.K}H", *tbl.intercept_codes)
    return header + slopes + intercepts


def from_bytes(data: bytes, below_neg_H: Union[BelowPolicy, str] = BelowPolicy.ZERO) -> PwlExpTable:
    if len(data) < LUT_HEADER.size:
        raise TableFormatError(f"LUT needs a {LUT_HEADER.size}-byte header, got {len(data)} bytes")
    H, K, slope_exp, intercept_exp = LUT_HEADER.unpack_from(data, 0)
    if not (math.isfinite(H) and H > 0):
        raise TableFormatError(f"LUT header has invalid H={H}")
    if K < 2 or not _is_power_of_two(K):
        raise TableFormatError(f"LUT header has invalid K={K}, expected a power of two >= 2")
    expected = LUT_HEADER.size + 3 * K
    if len(data) != expected:
        raise TableFormatError(f"LUT with K={K} must be {expected} bytes, got {len(data)}")
    slopes = struct.unpack_from(f"<{K}B", data, LUT_HEADER.size)
    intercepts = struct.unpack_from(f"<{K}H", data, LUT_HEADER.size + K)
    return PwlExpTable(
        H=H,
        K=K,
        slope_codes=tuple(slopes),
        intercept_codes=tuple(intercepts),
        slope_scale_exp=slope_exp,
        intercept_scale_exp=intercept_exp,
        below_neg_H=BelowPolicy(below_neg_H),
    )


def dump_table(tbl: PwlExpTable, path: Union[str, Path]) -> int:
    payload = to_bytes(tbl)
    Path(path).write_bytes(payload)
    logger.info(f"wrote PWL-Exp table ({len(payload)} bytes) to {path}")
    return len(payload)


def load_table(path: Union[str, Path]) -> PwlExpTable:
    return from_bytes(Path(path).read_bytes())
