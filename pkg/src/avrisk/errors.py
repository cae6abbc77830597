"""Exception types shared across the package."""

from __future__ import annotations


class AvriskError(Exception):
    """Base class for all package errors."""


class EmptyActionSet(AvriskError):
    """A scenario offered no actions to choose from."""


class InvalidScenario(AvriskError):
    """A scenario failed validation; carries the diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = tuple(diagnostics)
        lines = "; ".join(d.message for d in self.diagnostics)
        super().__init__(f"invalid scenario: {lines}")


class UnknownInjuryClass(AvriskError):
    """An injury class is missing from the cost table."""


class UnknownAttribute(AvriskError):
    """A policy names an attribute the scenario schema does not declare."""


class NotATrolleyScenario(AvriskError):
    """The scenario is not a two-action, certain-outcome dilemma."""


class NoExposedParties(AvriskError):
    """No party carries a positive risk share."""


class UnassignedOutcomeWarning(UserWarning):
    """Outcomes without an affected party were pooled under 'environment'."""
