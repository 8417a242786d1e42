"""Float64 oracles and the comparison approximators for each operator.

All functions take float arrays with the vector axis last and are
deterministic; ``baseline_eval`` dispatches by kind and operator.
"""

from enum import Enum
from typing import Callable, Dict, Tuple

import numpy as np

from ..kernels.base import ContractViolation


class BaselineKind(str, Enum):
    """Reference and comparison approximators."""

    ORACLE = "oracle"
    HARDMAX = "hardmax"
    PADE22 = "pade22"
    PWL_EXP16 = "pwl_exp16"
    PWL_SIGMOID16 = "pwl_sigmoid16"
    PWL_SIGMOID64 = "pwl_sigmoid64"
    BLOCKWISE_RMS32 = "blockwise_rms32"
    BLOCKWISE_RMS64 = "blockwise_rms64"
    RELU = "relu"
    HARDSWISH = "hardswish"
    DOREFA4B = "dorefa4b"
    XNOR = "xnor"


OPERATOR_KINDS: Dict[str, Tuple[BaselineKind, ...]] = {
    "softmax": (
        BaselineKind.ORACLE,
        BaselineKind.HARDMAX,
        BaselineKind.PADE22,
        BaselineKind.PWL_EXP16,
    ),
    "silu": (
        BaselineKind.ORACLE,
        BaselineKind.PWL_SIGMOID16,
        BaselineKind.PWL_SIGMOID64,
        BaselineKind.RELU,
        BaselineKind.HARDSWISH,
        BaselineKind.DOREFA4B,
        BaselineKind.XNOR,
    ),
    "rmsnorm": (
        BaselineKind.ORACLE,
        BaselineKind.BLOCKWISE_RMS32,
        BaselineKind.BLOCKWISE_RMS64,
    ),
    "layernorm": (BaselineKind.ORACLE,),
}


# Oracles


def oracle_softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # both branches stay finite for any float input
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def oracle_silu(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * _sigmoid(x)


def oracle_rmsnorm(x, eps: float = 0.0) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x / np.sqrt(np.mean(x * x, axis=-1, keepdims=True) + eps)


def oracle_layernorm(x, eps: float = 0.0) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return oracle_rmsnorm(x - x.mean(axis=-1, keepdims=True), eps)


# Softmax baselines


def hardmax(z) -> np.ndarray:
    """One-hot at the (first) argmax."""
    z = np.asarray(z, dtype=np.float64)
    idx = np.argmax(z, axis=-1)
    return (np.arange(z.shape[-1]) == idx[..., None]).astype(np.float64)


def pade22_exp(x) -> np.ndarray:
    """Diagonal [2/2] Padé approximant of e^x; the denominator never vanishes."""
    x = np.asarray(x, dtype=np.float64)
    x2 = x * x / 12.0
    return (1.0 + x / 2.0 + x2) / (1.0 - x / 2.0 + x2)


def softmax_pade22(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = pade22_exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def pwl_exp(x, H: float, segments: int) -> np.ndarray:
    """Endpoint-interpolated e^x on [-H, H]; zero below -H, clamped above H."""
    x = np.asarray(x, dtype=np.float64)
    knots = np.linspace(-H, H, segments + 1)
    y = np.interp(x, knots, np.exp(knots))
    return np.where(x < -H, 0.0, y)


def softmax_pwl_exp16(z, H: float = 5.0) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = pwl_exp(z - z.max(axis=-1, keepdims=True) + H, H, 16)
    return e / e.sum(axis=-1, keepdims=True)


# SiLU baselines


def silu_pwl_sigmoid(x, H: float = 5.0, segments: int = 16) -> np.ndarray:
    """x times a k-segment endpoint interpolant of sigmoid, clamped outside [-H, H]."""
    x = np.asarray(x, dtype=np.float64)
    knots = np.linspace(-H, H, segments + 1)
    return x * np.interp(x, knots, _sigmoid(knots))


def relu(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def hardswish(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * np.clip(x + 3.0, 0.0, 6.0) / 6.0


def silu_dorefa(x, H: float = 5.0, bits: int = 4) -> np.ndarray:
    """Float SiLU on a symmetric uniform ``bits``-bit grid spanning its range on [-H, H]."""
    y = oracle_silu(x)
    levels = (1 << (bits - 1)) - 1
    scale = float(oracle_silu(H))
    step = scale / levels
    return np.round(np.clip(y, -scale, scale) / step) * step


def silu_xnor(x) -> np.ndarray:
    """sign(x) times the batch mean of |x|."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.mean(np.abs(x))


# RMSNorm baselines


def blockwise_rms(x, block: int, eps: float = 0.0) -> np.ndarray:
    """Normalize each contiguous block by its own RMS over ``block`` lanes.

    The trailing block is zero-padded to ``block`` lanes, so its mean square
    is under-estimated whenever d is not a multiple of the block size.
    """
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1]
    nb = -(-d // block)
    padded = np.zeros(x.shape[:-1] + (nb * block,), dtype=np.float64)
    padded[..., :d] = x
    blocks = padded.reshape(x.shape[:-1] + (nb, block))
    rms = np.sqrt(np.sum(blocks * blocks, axis=-1, keepdims=True) / block + eps)
    return (blocks / rms).reshape(padded.shape)[..., :d]


def oracle_for(operator: str) -> Callable:
    """The exact function of ``operator`` as f(x, eps)."""
    oracles = {
        "softmax": lambda x, eps: oracle_softmax(x),
        "silu": lambda x, eps: oracle_silu(x),
        "rmsnorm": oracle_rmsnorm,
        "layernorm": oracle_layernorm,
    }
    if operator not in oracles:
        raise ContractViolation(f"Unknown operator {operator}, use one of {list(oracles)}")
    return oracles[operator]


def baseline_eval(kind, operator: str, inputs, H: float = 5.0, eps: float = 1e-5) -> np.ndarray:
    """Evaluate baseline ``kind`` for ``operator`` on float inputs."""
    kind = BaselineKind(kind)
    if operator not in OPERATOR_KINDS:
        raise ContractViolation(f"Unknown operator {operator}, use one of {list(OPERATOR_KINDS)}")
    if kind not in OPERATOR_KINDS[operator]:
        raise ContractViolation(
            f"Baseline {kind.value} does not apply to {operator}, "
            f"use one of {[k.value for k in OPERATOR_KINDS[operator]]}"
        )
    x = np.asarray(inputs, dtype=np.float64)
    if kind is BaselineKind.ORACLE:
        return oracle_for(operator)(x, eps)
    if kind is BaselineKind.HARDMAX:
        return hardmax(x)
    if kind is BaselineKind.PADE22:
        return softmax_pade22(x)
    if kind is BaselineKind.PWL_EXP16:
        return softmax_pwl_exp16(x, H)
    if kind is BaselineKind.PWL_SIGMOID16:
        return silu_pwl_sigmoid(x, H, 16)
    if kind is BaselineKind.PWL_SIGMOID64:
        return silu_pwl_sigmoid(x, H, 64)
    if kind is BaselineKind.RELU:
        return relu(x)
    if kind is BaselineKind.HARDSWISH:
        return hardswish(x)
    if kind is BaselineKind.DOREFA4B:
        return silu_dorefa(x, H)
    if kind is BaselineKind.XNOR:
        return silu_xnor(x)
    if kind is BaselineKind.BLOCKWISE_RMS32:
        return blockwise_rms(x, 32, eps)
    return blockwise_rms(x, 64, eps)
