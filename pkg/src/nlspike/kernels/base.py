"""Exceptions shared by the nlspike kernels and operators."""


class NLSpikeError(Exception):
    """Base exception for nlspike errors."""

    pass


class ContractViolation(NLSpikeError, ValueError):
    """Exception raised when an operation's precondition does not hold."""

    pass


class DenominatorUnderflow(NLSpikeError):
    """Exception raised when a calibrated base threshold would be zero."""

    def __init__(self, accumulated: int, minimum: int):
        self.accumulated = accumulated
        self.minimum = minimum
        super().__init__(
            f"Denominator accumulated to {accumulated}, below the minimum "
            f"representable denominator {minimum} (2^n); base threshold would be 0"
        )


class TableFormatError(NLSpikeError):
    """Exception raised when a serialized PWL-Exp table cannot be decoded."""

    pass
