"""Integer-only spiking kernels: fixed point, spike codes, division, PWL-Exp, PolarNorm."""

from .base import ContractViolation, DenominatorUnderflow, NLSpikeError, TableFormatError
from .divneuron import (
    DivisionGroup,
    DivisionGroupConfig,
    DivisionGroupState,
    DivisionRun,
    calibrate,
    calibrate_array,
    decode,
    decode_array,
    divide,
    division_error_bound,
    run,
    run_array,
)
from .fixedq import (
    QArray,
    QGrid,
    QValue,
    dequantize,
    mul_const,
    mul_const_scaled,
    mul_lookup,
    quantize,
    quantize_array,
    sat_add,
    sat_sub,
    shift_left,
    shift_right,
)
from .polarnorm import (
    CordicConfig,
    bound_eps_pol,
    fixed_point_slack,
    hypot,
    hypot_array,
    hypot_real,
    norm_working_exp,
    tree_height,
    tree_norm,
    tree_norm_array,
    tree_norm_real,
)
from .pwlexp import (
    BelowPolicy,
    PwlExpTable,
    bound_eps_exp,
    build_table,
    dump_table,
    eps_grid,
    eval_array,
    eval_exp,
    eval_real,
    grid_slack,
    load_table,
    tampered,
)
from .spikecode import (
    Dyadic,
    LifState,
    SpikeTrain,
    decode_rate,
    encode_rate,
    lif_run,
    lif_step,
    split_currents,
)
from .tally import OpTally, record, tally

__all__ = [
    "NLSpikeError",
    "ContractViolation",
    "DenominatorUnderflow",
    "TableFormatError",
    "QGrid",
    "QValue",
    "QArray",
    "quantize",
    "quantize_array",
    "dequantize",
    "shift_left",
    "shift_right",
    "sat_add",
    "sat_sub",
    "mul_const",
    "mul_const_scaled",
    "mul_lookup",
    "SpikeTrain",
    "Dyadic",
    "LifState",
    "encode_rate",
    "decode_rate",
    "split_currents",
    "lif_step",
    "lif_run",
    "DivisionGroup",
    "DivisionGroupConfig",
    "DivisionGroupState",
    "DivisionRun",
    "calibrate",
    "calibrate_array",
    "run",
    "run_array",
    "decode",
    "decode_array",
    "divide",
    "division_error_bound",
    "BelowPolicy",
    "PwlExpTable",
    "build_table",
    "eval_exp",
    "eval_array",
    "eval_real",
    "bound_eps_exp",
    "grid_slack",
    "eps_grid",
    "dump_table",
    "load_table",
    "tampered",
    "CordicConfig",
    "hypot",
    "hypot_array",
    "hypot_real",
    "tree_norm",
    "tree_norm_array",
    "tree_norm_real",
    "tree_height",
    "bound_eps_pol",
    "fixed_point_slack",
    "norm_working_exp",
    "OpTally",
    "record",
    "tally",
]
