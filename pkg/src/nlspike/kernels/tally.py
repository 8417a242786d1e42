"""Operation tally: MAC / AC / shift counters fed by the instrumented kernels.

Kernels call :func:`record` unconditionally; counts are only kept while a
:func:`tally` context is active in the current thread or task.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Iterator, Optional


@dataclass
class OpTally:
    """Running operation counts."""

    macs: int = 0  # multiply-accumulate with a non-power-of-two multiplicand
    acs: int = 0  # add / subtract / compare / accumulate
    shifts: int = 0  # power-of-two scalings and CORDIC shifts

    def add(self, macs: int = 0, acs: int = 0, shifts: int = 0) -> None:
        self.macs += int(macs)
        self.acs += int(acs)
        self.shifts += int(shifts)


_active: ContextVar[Optional[OpTally]] = ContextVar("nlspike_tally", default=None)


def record(macs: int = 0, acs: int = 0, shifts: int = 0) -> None:
    """Add counts to the active tally, if any."""
    current = _active.get()
    if current is not None:
        current.add(macs=macs, acs=acs, shifts=shifts)


@contextmanager
def tally() -> Iterator[OpTally]:
    """Count every instrumented operation executed inside the block."""
    counter = OpTally()
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)
