"""Exception types shared across the package."""


class ChannelFlowError(Exception):
    """Base class for all package errors."""


class InvalidFieldError(ChannelFlowError):
    """A field violates its structural invariants (parity, symmetry, dtype)."""


class RepresentationError(ChannelFlowError):
    """An operation received a field in the wrong representation."""


class IncompatibleDivergenceError(ChannelFlowError):
    """The horizontal velocity admits no vertical velocity in the sine basis."""


class ConfigError(ChannelFlowError):
    """A configuration file or value is malformed or out of range."""


class CoverageError(ChannelFlowError):
    """A diagnostic record series does not cover the requested time interval."""


class BlowUpError(ChannelFlowError):
    """The integrator produced non-finite data or runaway energy.

    Carries the last time at which the state was still valid.
    """

    def __init__(self, last_valid_time: float, message: str = ""):
        self.last_valid_time = last_valid_time
        super().__init__(message or f"blow-up detected; last valid time t={last_valid_time!r}")
