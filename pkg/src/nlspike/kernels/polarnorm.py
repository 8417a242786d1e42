"""PolarNorm unit: CORDIC vectoring hypot and its balanced binary-tree reduction.

Each merge rotates ``(|a|, |b|)`` onto the x-axis with shift-add
micro-rotations; the surviving x-coordinate is scaled by a precomputed
fixed-point inverse gain. A vector norm is the root of a balanced tree of such
merges over the (augmented, zero-padded) inputs.

The datapath carries up to ``frac_bits`` extra fractional bits below the input
LSB, so the working exponent follows the input exponent. Wide inputs get fewer
extra bits: the root of the tree must stay inside the headroom of the limb-wise
gain correction.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import ContractViolation
from .fixedq import QArray, QValue, mul_const_scaled
from .tally import record


CORDIC_FRAC_BITS = 32
GAIN_BITS = 32
GAIN_LIMB_BITS = 12
# largest working magnitude a 12-bit gain limb can multiply inside 64 bits
WORK_PEAK_BITS = 62 - GAIN_LIMB_BITS


@dataclass(frozen=True)
class CordicConfig:
    """Vectoring schedule: the shift-free k=0 rotation, then k=1..n.

    ``gain_inv`` is 1/K_n = prod_{k=0..n} (1 + 2^-2k)^-1/2 on a 2**-32 grid.
    """

    n_iters: int = 8
    frac_bits: int = CORDIC_FRAC_BITS

    def __post_init__(self):
        if self.n_iters < 1:
            raise ContractViolation(f"n_iters must be >= 1, got {self.n_iters}")

    @property
    def gain_inv_real(self) -> float:
        return math.prod(1.0 / math.sqrt(1.0 + 2.0 ** (-2 * k)) for k in range(self.n_iters + 1))

    @property
    def gain_inv(self) -> QValue:
        return QValue(int(round(math.ldexp(self.gain_inv_real, GAIN_BITS))), -GAIN_BITS)

    @property
    def eps_pair(self) -> float:
        return 2.0 ** (-2 * self.n_iters - 1)

    @property
    def merge_ulps(self) -> int:
        """Worst-case truncation of one fixed-point merge, in working ulps."""
        growth = math.prod(1.0 + 2.0 ** -k for k in range(1, self.n_iters + 1))
        limbs = -(-GAIN_BITS // GAIN_LIMB_BITS)
        return math.ceil(2 * self.n_iters * growth * self.gain_inv_real) + limbs + 1


def tree_height(D: int) -> int:
    """ceil(log2 D); 0 for a single leaf."""
    if D < 1:
        raise ContractViolation(f"tree needs at least one leaf, got {D}")
    return (D - 1).bit_length()


def bound_eps_pol(d: int, n: int) -> float:
    """ceil(log2 d) * 2^(-2n-1)."""
    if d < 1 or n < 1:
        raise ContractViolation(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    return tree_height(d) * 2.0 ** (-2 * n - 1)


def working_frac_bits(peak: int, leaves: int, cfg: CordicConfig) -> int:
    """Fractional bits kept below the input LSB for leaves up to ``peak`` LSBs.

    Before gain correction the root of a tree over ``leaves`` inputs is at most
    sqrt(leaves) times the CORDIC gain (< 2) above the largest leaf; it must fit
    the 12-bit limbs of the gain multiply.
    """
    bits = min(cfg.frac_bits, WORK_PEAK_BITS - int(peak).bit_length() - tree_height(leaves) - 1)
    if bits < 0:
        raise ContractViolation(
            f"leaves up to {peak} LSBs leave no 64-bit headroom for a {leaves}-leaf CORDIC tree"
        )
    return bits


def working_exp(scale_exp: int, cfg: CordicConfig, peak: int = 0, leaves: int = 2) -> int:
    return scale_exp - working_frac_bits(peak, leaves, cfg)


def leaf_peak(x: QArray, eps: float = 0.0) -> int:
    """Largest leaf of the augmented tree in input LSBs, rounded up."""
    peak = int(np.max(np.abs(x.raw))) if x.raw.size else 0
    if eps > 0:
        aug = math.ldexp(math.sqrt(eps * x.shape[-1]), -x.scale_exp)
        peak = max(peak, math.ceil(aug))
    return peak


def norm_working_exp(x: QArray, eps: float, cfg: CordicConfig) -> int:
    """Exponent of the grid :func:`tree_norm_array` works on for this batch."""
    return working_exp(x.scale_exp, cfg, leaf_peak(x, eps), x.shape[-1] + 1)


def _merge_raw(a: np.ndarray, b: np.ndarray, cfg: CordicConfig) -> np.ndarray:
    """Vectoring-mode CORDIC on raw magnitudes; returns the gain-corrected radius."""
    x = np.abs(a)
    y = np.abs(b)
    for k in range(cfg.n_iters + 1):
        up = y >= 0  # sign(0) = +1
        dx = y >> k
        dy = x >> k
        x = np.where(up, x + dx, x - dx)
        y = np.where(up, y - dy, y + dy)
        record(acs=3 * x.size, shifts=(2 * x.size) if k else 0)
    return mul_const_scaled(x, cfg.gain_inv.raw, GAIN_BITS, GAIN_LIMB_BITS)


def hypot_array(a: QArray, b: QArray, cfg: CordicConfig) -> QArray:
    """Element-wise sqrt(a^2 + b^2) on the CORDIC working grid."""
    base = min(a.scale_exp, b.scale_exp)
    peak = max(leaf_peak(a) << (a.scale_exp - base), leaf_peak(b) << (b.scale_exp - base))
    s = working_exp(base, cfg, peak, 2)
    return QArray(_merge_raw(a.rescale(s).raw, b.rescale(s).raw, cfg), s)


def hypot(a: QValue, b: QValue, cfg: CordicConfig) -> QValue:
    out = hypot_array(
        QArray(np.array([a.raw]), a.scale_exp), QArray(np.array([b.raw]), b.scale_exp), cfg
    )
    return QValue(int(out.raw[0]), out.scale_exp)


def augmentation_raw(eps: float, d: int, scale_exp: int) -> int:
    """sqrt(eps * d) on the grid ``2**scale_exp``, computed once at build time."""
    if eps < 0:
        raise ContractViolation(f"eps must be nonnegative, got {eps}")
    return int(round(math.ldexp(math.sqrt(eps * d), -scale_exp)))


def _reduce(leaves: np.ndarray, cfg: CordicConfig) -> np.ndarray:
    """Balanced pairwise reduction along the last axis (length a power of two)."""
    level = leaves
    while level.shape[-1] > 1:
        level = _merge_raw(level[..., 0::2], level[..., 1::2], cfg)
    return level[..., 0]


def _padded_leaves(x: np.ndarray, aug, dtype=np.int64) -> np.ndarray:
    d = x.shape[-1]
    P = 1 << tree_height(d + 1)
    leaves = np.zeros(x.shape[:-1] + (P,), dtype=dtype)
    leaves[..., :d] = np.abs(x)
    leaves[..., d] = aug
    return leaves


def tree_norm_array(x: QArray, eps: float, cfg: CordicConfig) -> QArray:
    """sqrt(sum x_i^2 + eps*d) over the last axis.

    The vector is augmented with sqrt(eps*d), zero-padded to a power of two
    and merged in a balanced tree of height ceil(log2(d+1)).
    Every row shares one working grid, fitted to the largest leaf of the batch.
    """
    if x.raw.ndim == 0 or x.shape[-1] < 1:
        raise ContractViolation("tree_norm needs a vector with d >= 1")
    if eps < 0:
        raise ContractViolation(f"eps must be nonnegative, got {eps}")
    s = norm_working_exp(x, eps, cfg)
    d = x.shape[-1]
    leaves = _padded_leaves(x.rescale(s).raw, augmentation_raw(eps, d, s))
    return QArray(_reduce(leaves, cfg), s)


def tree_norm(x: Sequence[QValue], eps: float, cfg: CordicConfig) -> QValue:
    out = tree_norm_array(QArray.from_qvalues(x), eps, cfg)
    return QValue(int(out.raw), out.scale_exp)


def fixed_point_slack(leaves: int, cfg: CordicConfig, scale_exp: int, norm: float = 0.0) -> float:
    """Absolute rounding budget of a fixed-point tree over ``leaves`` inputs.

    hypot is 1-Lipschitz in each argument, so per-merge truncations add up
    along the tree; the rounded gain constant contributes a relative term
    per level on the way to the root.
    """
    merges = (1 << tree_height(leaves)) - 1
    ulp = math.ldexp(1.0, scale_exp)
    gain_rel = tree_height(leaves) * 2.0 ** -(GAIN_BITS + 1)
    return merges * cfg.merge_ulps * ulp + norm * gain_rel


def _merge_real(a: np.ndarray, b: np.ndarray, n_iters: int, gain_inv: float) -> np.ndarray:
    x = np.abs(np.asarray(a, dtype=np.float64))
    y = np.abs(np.asarray(b, dtype=np.float64))
    for k in range(n_iters + 1):
        up = y >= 0
        t = 2.0 ** -k
        x, y = np.where(up, x + y * t, x - y * t), np.where(up, y - x * t, y + x * t)
    return x * gain_inv


def hypot_real(a, b, cfg: CordicConfig) -> np.ndarray:
    """Infinite-precision reference of the same recurrence."""
    return _merge_real(a, b, cfg.n_iters, cfg.gain_inv_real)


def tree_norm_real(x, eps: float, cfg: CordicConfig) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    level = _padded_leaves(x, math.sqrt(eps * x.shape[-1]), dtype=np.float64)
    while level.shape[-1] > 1:
        level = _merge_real(level[..., 0::2], level[..., 1::2], cfg.n_iters, cfg.gain_inv_real)
    return level[..., 0]
