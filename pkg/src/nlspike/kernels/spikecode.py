"""Rate-coded spike trains and the discrete-time LIF neuron."""

import logging
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np

from .base import ContractViolation
from .fixedq import QValue
from .tally import record

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpikeTrain:
    """Length-T sequence of nonnegative integer currents scaled by ``theta``."""

    steps: Tuple[int, ...]
    theta: QValue
    saturated: bool = False

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if not steps:
            raise ContractViolation("a spike train needs at least one step")
        if any(s < 0 for s in steps):
            raise ContractViolation(f"spike currents must be nonnegative, got {steps}")
        object.__setattr__(self, "steps", steps)

    @property
    def T(self) -> int:
        return len(self.steps)

    @property
    def total(self) -> int:
        return sum(self.steps)

    @property
    def is_binary(self) -> bool:
        return all(s in (0, 1) for s in self.steps)

    @classmethod
    def binary(cls, bits: Sequence[int], theta: QValue) -> "SpikeTrain":
        if any(b not in (0, 1) for b in bits):
            raise ContractViolation(f"binary trains take spikes in {{0, 1}}, got {list(bits)}")
        return cls(tuple(bits), theta)

    @classmethod
    def currents(cls, steps: Sequence[int], theta: QValue = None) -> "SpikeTrain":
        """Multi-count train of raw integer currents (unit threshold by default)."""
        return cls(tuple(steps), theta if theta is not None else QValue(1, 0))


def split_currents(totals, T: int) -> np.ndarray:
    """Spread integer totals over ``T`` steps, remainder on the earliest steps.

    Returns an array of shape ``totals.shape + (T,)``.
    """
    if T < 1:
        raise ContractViolation(f"T must be >= 1, got {T}")
    totals = np.asarray(totals, dtype=np.int64)
    if totals.size and int(totals.min()) < 0:
        raise ContractViolation("spike-coded totals must be nonnegative")
    base = totals // T
    rem = totals - base * T
    steps = np.arange(T, dtype=np.int64)
    return base[..., None] + (steps < rem[..., None])


def _ratio_round(v: QValue, theta: QValue) -> int:
    """round(v / theta), half away from zero, for v >= 0 and theta > 0."""
    s = min(v.scale_exp, theta.scale_exp)
    a = v.rescale(s).raw
    b = theta.rescale(s).raw
    return (2 * a + b) // (2 * b)


def encode_rate(v: QValue, T: int, theta: QValue, binary: bool = True) -> SpikeTrain:
    """Rate-code ``v`` over ``T`` steps with threshold scale ``theta``.

    A binary train carries round(v/theta) spikes clipped to [0, T] (front
    loaded); a multi-count train carries the same total as integer currents.
    """
    if T < 1:
        raise ContractViolation(f"T must be >= 1, got {T}")
    if theta.raw <= 0:
        raise ContractViolation(f"theta must be positive, got raw={theta.raw}")
    if v.raw < 0:
        raise ContractViolation(f"rate codes carry nonnegative values, got raw={v.raw}")
    count = _ratio_round(v, theta)
    if binary:
        saturated = count > T
        if saturated:
            logger.debug(f"encode_rate clipped {count} spikes to T={T}")
        count = min(count, T)
        return SpikeTrain(tuple([1] * count + [0] * (T - count)), theta, saturated)
    steps = split_currents(np.int64(count), T)
    return SpikeTrain(tuple(int(s) for s in steps), theta)


def decode_rate(tr: SpikeTrain) -> QValue:
    """(sum of steps) * theta."""
    record(acs=max(tr.T - 1, 0))
    return QValue(tr.total * tr.theta.raw, tr.theta.scale_exp, tr.saturated)


@dataclass(frozen=True)
class Dyadic:
    """Leak factor p / 2**k."""

    p: int
    k: int = 0

    def __post_init__(self):
        if self.k < 0 or self.p < 0 or self.p > (1 << self.k):
            raise ContractViolation(
                f"leak must be a dyadic rational in [0, 1], got {self.p}/2^{self.k}"
            )

    def apply(self, raw: int) -> int:
        if self.p == 1 << self.k:
            return raw
        record(acs=max(bin(self.p).count("1") - 1, 0), shifts=1)
        return (raw * self.p) >> self.k

    def __float__(self) -> float:
        return self.p / (1 << self.k)


@dataclass(frozen=True)
class LifState:
    """Membrane potential, dyadic leak and threshold of one LIF neuron."""

    v: QValue
    leak: Dyadic
    theta: QValue

    def __post_init__(self):
        if self.v.scale_exp != self.theta.scale_exp:
            raise ContractViolation(
                f"v and theta must share a scale, got {self.v.scale_exp} and {self.theta.scale_exp}"
            )


def lif_step(st: LifState, current: QValue) -> Tuple[LifState, int]:
    """One accumulate, threshold, subtractive-reset step."""
    inp = current.rescale(st.v.scale_exp)
    v = st.leak.apply(st.v.raw) + inp.raw
    spike = int(v >= st.theta.raw)
    record(acs=2)
    if spike:
        v -= st.theta.raw
        record(acs=1)
    return replace(st, v=QValue(v, st.v.scale_exp)), spike


def lif_run(st: LifState, currents: Sequence[QValue]) -> Tuple[LifState, List[int]]:
    spikes = []
    for current in currents:
        st, s = lif_step(st, current)
        spikes.append(s)
    return st, spikes
