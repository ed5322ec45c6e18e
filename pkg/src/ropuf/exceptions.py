"""Exception types raised across the package."""


class PufError(Exception):
    """Base class for all errors raised by :mod:`ropuf`."""


class InvariantViolation(PufError, ValueError):
    """A domain object was built with values that break one of its invariants.

    ``invariant`` names the rule that failed so callers (notably the CLI)
    can report it without parsing the message.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"[{invariant}] {message}")
        self.invariant = invariant


class VoltageBelowThresholdError(InvariantViolation):
    """Supply voltage at or below the (temperature-dependent) threshold voltage."""

    def __init__(self, message: str):
        super().__init__("voltage-above-threshold", message)


class TopologyMismatchError(InvariantViolation):
    def __init__(self, message: str):
        super().__init__("topology-match", message)


class ChallengeParseError(PufError, ValueError):
    """Challenge text did not match ``a-b:v1v2...vC``."""
