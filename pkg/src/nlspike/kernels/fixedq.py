"""Fixed-point scalars and arrays: quantization grids, exact shifts, saturating add.

A value is carried as an integer ``raw`` plus a binary exponent, so that the
represented number is ``raw * 2**scale_exp``. Scalars (:class:`QValue`) wrap
Python ints; batches (:class:`QArray`) wrap int64 numpy arrays.
"""

import math
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from .base import ContractViolation
from .tally import record

logger = logging.getLogger(__name__)

WORK_BITS = 64
ARRAY_GRID_MAX_BITS = 62

ArrayLike = Union[np.ndarray, Sequence[float], float]


@dataclass(frozen=True)
class QGrid:
    """A fixed-point grid: ``bits`` wide, step ``2**scale_exp``."""

    bits: int
    scale_exp: int
    signed: bool = True

    def __post_init__(self):
        if self.bits < 1:
            raise ContractViolation(f"Grid width must be >= 1 bit, got {self.bits}")

    @property
    def raw_min(self) -> int:
        return -(1 << (self.bits - 1)) if self.signed else 0

    @property
    def raw_max(self) -> int:
        return (1 << (self.bits - 1)) - 1 if self.signed else (1 << self.bits) - 1

    @property
    def step(self) -> float:
        return math.ldexp(1.0, self.scale_exp)

    @property
    def half_step(self) -> float:
        return math.ldexp(1.0, self.scale_exp - 1)

    @property
    def value_min(self) -> float:
        return math.ldexp(self.raw_min, self.scale_exp)

    @property
    def value_max(self) -> float:
        return math.ldexp(self.raw_max, self.scale_exp)

    @classmethod
    def fitting(cls, max_value: float, bits: int, signed: bool = False) -> "QGrid":
        """Finest grid of the given width whose range holds ``max_value``."""
        if not max_value > 0:
            raise ContractViolation(f"max_value must be positive, got {max_value}")
        raw_max = (1 << (bits - 1)) - 1 if signed else (1 << bits) - 1
        scale_exp = math.ceil(math.log2(max_value / raw_max))
        # log2 rounding can land one step off in either direction
        while math.ldexp(raw_max, scale_exp - 1) >= max_value:
            scale_exp -= 1
        while math.ldexp(raw_max, scale_exp) < max_value:
            scale_exp += 1
        return cls(bits=bits, scale_exp=scale_exp, signed=signed)


@dataclass(frozen=True)
class QValue:
    """Fixed-point scalar ``raw * 2**scale_exp``."""

    raw: int
    scale_exp: int
    saturated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "raw", int(self.raw))
        object.__setattr__(self, "scale_exp", int(self.scale_exp))

    def to_float(self) -> float:
        return math.ldexp(self.raw, self.scale_exp)

    def rescale(self, scale_exp: int) -> "QValue":
        """Move onto another exponent: exact when finer, floor when coarser."""
        k = self.scale_exp - scale_exp
        raw = self.raw << k if k >= 0 else self.raw >> -k
        return QValue(raw, scale_exp, self.saturated)

    @classmethod
    def from_float(cls, v: float, scale_exp: int, bits: int = WORK_BITS) -> "QValue":
        return quantize(v, QGrid(bits=bits, scale_exp=scale_exp, signed=True))


def _round_half_away(a: float) -> int:
    m = abs(a)
    r = math.floor(m)
    # m - r is exact in binary floating point
    if m - r >= 0.5:
        r += 1
    return -r if a < 0 else r


def quantize(v: float, g: QGrid) -> QValue:
    """Nearest representable value on ``g``; saturates at the grid extremes."""
    if not math.isfinite(v):
        raise ContractViolation(f"quantize needs a finite value, got {v}")
    raw = _round_half_away(math.ldexp(v, -g.scale_exp))
    if raw > g.raw_max or raw < g.raw_min:
        logger.debug(f"quantize saturated {v} on {g}")
        return QValue(min(max(raw, g.raw_min), g.raw_max), g.scale_exp, True)
    return QValue(raw, g.scale_exp)


def dequantize(q: QValue) -> float:
    return q.to_float()


def shift_right(q: QValue, k: int) -> QValue:
    """Arithmetic (floor) right shift of the raw integer; scale unchanged."""
    if k < 0:
        raise ContractViolation(f"shift amount must be >= 0, got {k}")
    if k:
        record(shifts=1)
    return QValue(q.raw >> k, q.scale_exp, q.saturated)


def shift_left(q: QValue, k: int, bits: int = WORK_BITS) -> QValue:
    if k < 0:
        raise ContractViolation(f"shift amount must be >= 0, got {k}")
    if k:
        record(shifts=1)
    return _clamp(q.raw << k, q.scale_exp, bits, q.saturated)


def _clamp(raw: int, scale_exp: int, bits: int, saturated: bool) -> QValue:
    hi = (1 << (bits - 1)) - 1
    lo = -(1 << (bits - 1))
    if raw > hi or raw < lo:
        return QValue(min(max(raw, lo), hi), scale_exp, True)
    return QValue(raw, scale_exp, saturated)


def _check_scales(a: QValue, b: QValue, op: str) -> None:
    if a.scale_exp != b.scale_exp:
        raise ContractViolation(
            f"{op} needs matching scale exponents, got {a.scale_exp} and {b.scale_exp}"
        )


def sat_add(a: QValue, b: QValue, bits: int = WORK_BITS) -> QValue:
    """Saturating add at the working width; saturation is sticky."""
    _check_scales(a, b, "sat_add")
    record(acs=1)
    return _clamp(a.raw + b.raw, a.scale_exp, bits, a.saturated or b.saturated)


def sat_sub(a: QValue, b: QValue, bits: int = WORK_BITS) -> QValue:
    _check_scales(a, b, "sat_sub")
    record(acs=1)
    return _clamp(a.raw - b.raw, a.scale_exp, bits, a.saturated or b.saturated)


@dataclass(frozen=True)
class QArray:
    """Batch of fixed-point values sharing one exponent."""

    raw: np.ndarray
    scale_exp: int
    saturated: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "raw", np.asarray(self.raw, dtype=np.int64))
        object.__setattr__(self, "scale_exp", int(self.scale_exp))

    @property
    def shape(self):
        return self.raw.shape

    def __len__(self) -> int:
        return len(self.raw)

    def __getitem__(self, index) -> "QArray":
        sat = None if self.saturated is None else self.saturated[index]
        return QArray(self.raw[index], self.scale_exp, sat)

    def any_saturated(self) -> bool:
        return bool(self.saturated is not None and np.any(self.saturated))

    def to_float(self) -> np.ndarray:
        return np.ldexp(self.raw.astype(np.float64), self.scale_exp)

    def rescale(self, scale_exp: int) -> "QArray":
        """Move onto another exponent: exact left shift or floor right shift."""
        k = self.scale_exp - scale_exp
        if k == 0:
            return self
        record(shifts=self.raw.size)
        if k > 0:
            _check_headroom(self.raw, k)
            raw = self.raw << k
        else:
            raw = self.raw >> -k
        return QArray(raw, scale_exp, self.saturated)

    def to_qvalues(self) -> List[QValue]:
        sat = (
            np.zeros(self.raw.shape, dtype=bool)
            if self.saturated is None
            else np.broadcast_to(self.saturated, self.raw.shape)
        )
        return [
            QValue(int(r), self.scale_exp, bool(s))
            for r, s in zip(self.raw.ravel(), sat.ravel())
        ]

    @classmethod
    def from_qvalues(cls, values: Iterable[QValue]) -> "QArray":
        """Stack scalars onto the finest exponent among them."""
        values = list(values)
        if not values:
            raise ContractViolation("from_qvalues needs at least one value")
        scale_exp = min(v.scale_exp for v in values)
        raw = [v.rescale(scale_exp).raw for v in values]
        sat = np.array([v.saturated for v in values], dtype=bool)
        return cls(np.array(raw, dtype=np.int64), scale_exp, sat)


def quantize_array(values: ArrayLike, g: QGrid) -> QArray:
    """Vectorized :func:`quantize` (round half away from zero, flagged saturation)."""
    if g.bits > ARRAY_GRID_MAX_BITS:
        raise ContractViolation(
            f"array grids are limited to {ARRAY_GRID_MAX_BITS} bits, got {g.bits}"
        )
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ContractViolation("quantize_array needs finite values")
    a = np.ldexp(v, -g.scale_exp)
    m = np.abs(a)
    r = np.floor(m)
    r = r + (m - r >= 0.5)
    r = np.copysign(r, a)
    saturated = (r > g.raw_max) | (r < g.raw_min)
    r = np.clip(r, g.raw_min, g.raw_max)
    return QArray(r.astype(np.int64), g.scale_exp, saturated)


def _check_headroom(x: np.ndarray, bits: int) -> None:
    if x.size:
        peak = int(np.max(np.abs(x)))
        if peak >= (1 << (WORK_BITS - 2 - bits)):
            raise ContractViolation(
                f"shift by {bits} would overflow the {WORK_BITS}-bit working width (peak {peak})"
            )


def mul_const(x: ArrayLike, c_raw: int) -> np.ndarray:
    """Multiply raw integers by a nonnegative constant using shifts and adds only.

    One shifted copy of ``x`` is accumulated per set bit of ``c_raw``; the
    caller owns the exponent bookkeeping of the product.
    """
    c_raw = int(c_raw)
    if c_raw < 0:
        raise ContractViolation(f"shift-add constants must be nonnegative, got {c_raw}")
    x = np.asarray(x, dtype=np.int64)
    _check_headroom(x, c_raw.bit_length())
    acc = np.zeros_like(x)
    terms = 0
    shifts = 0
    for bit in range(c_raw.bit_length()):
        if (c_raw >> bit) & 1:
            acc = acc + (x << bit)
            terms += 1
            shifts += 1 if bit else 0
    record(acs=max(terms - 1, 0) * x.size, shifts=shifts * x.size)
    return acc


def mul_lookup(x: ArrayLike, c_raw: ArrayLike) -> np.ndarray:
    """Element-wise shift-add multiply by per-element constants (table entries)."""
    x, c = np.broadcast_arrays(
        np.asarray(x, dtype=np.int64), np.asarray(c_raw, dtype=np.int64)
    )
    if c.size and int(c.min()) < 0:
        raise ContractViolation("shift-add constants must be nonnegative")
    top = int(c.max()).bit_length() if c.size else 0
    _check_headroom(x, top)
    acc = np.zeros(x.shape, dtype=np.int64)
    terms = np.zeros(x.shape, dtype=np.int64)
    shifts = 0
    for bit in range(top):
        hit = ((c >> bit) & 1).astype(bool)
        if not hit.any():
            continue
        acc = acc + np.where(hit, x << bit, 0)
        terms += hit
        if bit:
            shifts += int(np.count_nonzero(hit))
    record(acs=int(np.maximum(terms - 1, 0).sum()), shifts=shifts)
    return acc


def mul_const_scaled(x: ArrayLike, c_raw: int, shift: int, limb_bits: int = 12) -> np.ndarray:
    """Approximately floor(x * c_raw / 2**shift) for wide constants.

    The constant is split into ``limb_bits``-wide limbs so every partial
    shift-add product stays inside the working width; each limb truncates
    at most one unit.
    """
    c_raw = int(c_raw)
    if c_raw < 0:
        raise ContractViolation(f"shift-add constants must be nonnegative, got {c_raw}")
    x = np.asarray(x, dtype=np.int64)
    acc = np.zeros_like(x)
    limb = 0
    while c_raw >> (limb * limb_bits):
        part = (c_raw >> (limb * limb_bits)) & ((1 << limb_bits) - 1)
        if part:
            partial = mul_const(x, part)
            k = shift - limb * limb_bits
            acc = acc + (partial >> k if k >= 0 else partial << -k)
            record(acs=x.size, shifts=x.size)
        limb += 1
    return acc
