"""Shift-add spiking operators, their error bounds and float baselines."""

from .baselines import (
    OPERATOR_KINDS,
    BaselineKind,
    baseline_eval,
    blockwise_rms,
    hardmax,
    oracle_for,
    oracle_layernorm,
    oracle_rmsnorm,
    oracle_silu,
    oracle_softmax,
    pade22_exp,
)
from .nlsops import (
    OPERATORS,
    Allowance,
    BoundReport,
    NlsConfig,
    bound_rms,
    bound_rms_coord,
    bound_silu,
    bound_softmax,
    layernorm_allowance,
    layernorm_work_exp,
    nls_apply,
    nls_layernorm,
    nls_rmsnorm,
    nls_silu,
    nls_silu_tdf,
    nls_softmax,
    rms_allowance,
    rms_work_exp,
    silu_allowance,
    softmax_allowance,
    sqrt_d_constant,
)

__all__ = [
    "OPERATORS",
    "OPERATOR_KINDS",
    "BaselineKind",
    "baseline_eval",
    "blockwise_rms",
    "hardmax",
    "oracle_for",
    "oracle_softmax",
    "oracle_silu",
    "oracle_rmsnorm",
    "oracle_layernorm",
    "pade22_exp",
    "NlsConfig",
    "BoundReport",
    "Allowance",
    "nls_apply",
    "nls_softmax",
    "nls_silu",
    "nls_silu_tdf",
    "nls_rmsnorm",
    "nls_layernorm",
    "bound_softmax",
    "bound_silu",
    "bound_rms",
    "bound_rms_coord",
    "softmax_allowance",
    "silu_allowance",
    "rms_allowance",
    "layernorm_allowance",
    "rms_work_exp",
    "layernorm_work_exp",
    "sqrt_d_constant",
]
