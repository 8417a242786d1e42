"""Division neuron group: spike-native integer division over two windows.

The first window integrates the denominator and calibrates a base threshold
``theta = I_B >> n``; the population of ``L`` neurons then holds thresholds
``theta, 2*theta, ..., L*theta``. The second window drives the population with
the numerator; the number of firings is ``floor(sum(I_A) / theta)`` and the
decoded quotient is that count on the ``2**-n`` grid.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .base import ContractViolation, DenominatorUnderflow
from .fixedq import QArray, QValue
from .spikecode import SpikeTrain, split_currents
from .tally import record

logger = logging.getLogger(__name__)


def _is_power_of_two(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class DivisionGroupConfig:
    """Window length ``T`` and population size ``L``, both powers of two."""

    T: int = 16
    L: int = 256

    def __post_init__(self):
        for name, value in (("T", self.T), ("L", self.L)):
            if not _is_power_of_two(value):
                raise ContractViolation(f"{name} must be a power of two, got {value}")

    @property
    def n(self) -> int:
        return (self.T.bit_length() - 1) + (self.L.bit_length() - 1)

    @property
    def delta(self) -> float:
        """Quantization step 1/(T*L)."""
        return 2.0 ** -self.n

    @property
    def full_scale(self) -> int:
        return self.T * self.L


@dataclass
class DivisionGroupState:
    """Calibrated base threshold plus the running window state."""

    theta: int
    cumulative_potential: int = 0
    q: int = 0
    saturation_flag: bool = False
    L: int = 256

    @property
    def thresholds(self) -> Tuple[int, ...]:
        return tuple(i * self.theta for i in range(1, self.L + 1))


@dataclass(frozen=True)
class DivisionRun:
    """Outcome of a numerator window over a batch of group instances."""

    q: np.ndarray
    saturated: np.ndarray
    window_q: np.ndarray  # count reached inside the T-step window
    drain_steps: np.ndarray


def accumulate(train: Union[SpikeTrain, np.ndarray]) -> Union[int, np.ndarray]:
    """Temporal accumulation of a train (or of raw currents along the last axis)."""
    if isinstance(train, SpikeTrain):
        record(acs=train.T)
        return train.total
    currents = np.asarray(train, dtype=np.int64)
    record(acs=currents.size)
    return currents.sum(axis=-1)


def _theta_from_total(total: int, cfg: DivisionGroupConfig) -> int:
    theta = int(total) >> cfg.n
    record(shifts=1, acs=cfg.L - 1)  # right shift, then L thresholds by accumulation
    if theta == 0:
        raise DenominatorUnderflow(accumulated=int(total), minimum=1 << cfg.n)
    return theta


def calibrate(denominator: Union[SpikeTrain, int], cfg: DivisionGroupConfig) -> int:
    """Base threshold floor(I_B / 2**n) from the denominator window."""
    if isinstance(denominator, SpikeTrain):
        if denominator.T != cfg.T:
            raise ContractViolation(
                f"denominator window has {denominator.T} steps, config expects T={cfg.T}"
            )
        total = accumulate(denominator)
    else:
        total = int(denominator)
        if total < 0:
            raise ContractViolation(f"denominators must be nonnegative, got {total}")
    return _theta_from_total(total, cfg)


def calibrate_array(currents: np.ndarray, cfg: DivisionGroupConfig) -> np.ndarray:
    """Vectorized calibrate over raw denominator currents of shape (..., T)."""
    currents = np.asarray(currents, dtype=np.int64)
    if currents.shape[-1] != cfg.T:
        raise ContractViolation(
            f"denominator window has {currents.shape[-1]} steps, config expects T={cfg.T}"
        )
    totals = accumulate(currents)
    theta = totals >> cfg.n
    record(shifts=theta.size, acs=(cfg.L - 1) * theta.size)
    if theta.size and int(theta.min()) == 0:
        worst = int(totals.min())
        raise DenominatorUnderflow(accumulated=worst, minimum=1 << cfg.n)
    return theta


def run_array(
    currents: np.ndarray,
    theta: Union[int, np.ndarray],
    cfg: DivisionGroupConfig,
    drain: bool = True,
) -> DivisionRun:
    """Drive the population with numerator currents of shape (..., T).

    Per step the potential integrates the current and at most ``L`` neurons
    fire (those whose threshold the retained potential reaches); the retained
    potential carries over by subtractive reset. With ``drain`` the group keeps
    stepping with zero input after the window until the retained potential is
    below ``theta``, so the final count is exactly floor(sum / theta).
    """
    currents = np.asarray(currents, dtype=np.int64)
    if currents.shape[-1] != cfg.T:
        raise ContractViolation(
            f"numerator window has {currents.shape[-1]} steps, config expects T={cfg.T}"
        )
    theta = np.asarray(theta, dtype=np.int64)
    if theta.size and int(theta.min()) < 1:
        raise ContractViolation("division needs a calibrated theta >= 1")
    if currents.size and int(currents.min()) < 0:
        raise ContractViolation("numerator currents must be nonnegative")

    shape = np.broadcast_shapes(currents.shape[:-1], theta.shape)
    theta = np.broadcast_to(theta, shape)
    potential = np.zeros(shape, dtype=np.int64)
    q = np.zeros(shape, dtype=np.int64)
    saturated = np.zeros(shape, dtype=bool)
    per_step_acs = (cfg.L + 2) * q.size  # integrate, L comparators, count update

    for t in range(cfg.T):
        potential = potential + currents[..., t]
        pending = potential // theta - q
        clipped = pending > cfg.L
        saturated |= clipped
        q = q + np.minimum(pending, cfg.L)
        record(acs=per_step_acs)

    window_q = q
    if saturated.any():
        logger.debug(
            f"division clipped at L={cfg.L} on {int(np.count_nonzero(saturated))} of {q.size} groups"
        )
    remaining = potential // theta - q
    drain_steps = np.zeros(shape, dtype=np.int64)
    if drain:
        drain_steps = -(-remaining // cfg.L)
        record(acs=int(drain_steps.sum()) * (cfg.L + 2))
        q = q + remaining
    return DivisionRun(q=q, saturated=saturated, window_q=window_q, drain_steps=drain_steps)


def run(
    numerator: SpikeTrain,
    theta: int,
    cfg: DivisionGroupConfig,
    drain: bool = True,
) -> Tuple[int, bool]:
    """Count population firings for one numerator train; returns (q, saturated)."""
    if theta < 1:
        raise ContractViolation(f"division needs a calibrated theta >= 1, got {theta}")
    result = run_array(np.array(numerator.steps, dtype=np.int64), theta, cfg, drain=drain)
    return int(result.q), bool(result.saturated)


def decode(q: int, cfg: DivisionGroupConfig) -> QValue:
    """Quotient q on the 2**-n grid; resolution is 1/(T*L)."""
    return QValue(q, -cfg.n)


def decode_array(q: np.ndarray, cfg: DivisionGroupConfig, saturated=None) -> QArray:
    return QArray(q, -cfg.n, saturated)


def divide(
    numerator_total: Union[int, np.ndarray],
    denominator_total: Union[int, np.ndarray],
    cfg: DivisionGroupConfig,
    drain: bool = True,
) -> QArray:
    """Two-window division of raw totals sharing one exponent.

    Each total is spread over the ``T`` steps of its window.
    """
    theta = calibrate_array(split_currents(denominator_total, cfg.T), cfg)
    result = run_array(split_currents(numerator_total, cfg.T), theta, cfg, drain=drain)
    return decode_array(result.q, cfg, result.saturated)


def division_error_bound(A: float, B: float, cfg: DivisionGroupConfig) -> float:
    """|decoded - A/B| bound for raw totals A, B with B >= 2**(n+1)."""
    m = float(1 << cfg.n)
    if B < 2 * m:
        raise ContractViolation(f"error bound needs B >= 2^(n+1) = {int(2 * m)}, got {B}")
    return 2.0 * cfg.delta + A * m / (B * (B - m))


class DivisionGroup:
    """A calibrated division population advanced one window at a time."""

    def __init__(self, config: DivisionGroupConfig):
        self.config = config
        self.state: Optional[DivisionGroupState] = None
        self.logger = logging.getLogger(self.__class__.__name__)

    def calibrate(self, denominator: Union[SpikeTrain, int]) -> int:
        theta = calibrate(denominator, self.config)
        self.state = DivisionGroupState(theta=theta, L=self.config.L)
        self.logger.debug(f"calibrated theta={theta} (n={self.config.n})")
        return theta

    def run(self, numerator: SpikeTrain, drain: bool = True) -> QValue:
        if self.state is None:
            raise ContractViolation("calibrate the group before running a numerator window")
        q, saturated = run(numerator, self.state.theta, self.config, drain=drain)
        self.state.cumulative_potential = numerator.total
        self.state.q = q
        self.state.saturation_flag = saturated
        if saturated:
            self.logger.debug(f"per-step firing clipped at L={self.config.L}")
        return QValue(q, -self.config.n, saturated)
