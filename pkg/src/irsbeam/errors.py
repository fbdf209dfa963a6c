"""Exception taxonomy used across the package and mapped to CLI exit codes."""


class IrsBeamError(Exception):
    """Base class for package errors."""


class ScenarioParseError(IrsBeamError):
    """Scenario file is missing, unreadable, or not valid JSON."""


class ScenarioValidationError(IrsBeamError):
    """Scenario contents violate a documented constraint.

    Carries the list of Violation records produced by ``scenario.validate``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{v.field}: {v.message}" for v in self.violations)
        super().__init__(f"invalid scenario ({lines})")


class SolverInfeasibleError(IrsBeamError):
    """Optimization problem admits no positive shaped-gain margin."""


class InternalInvariantError(IrsBeamError):
    """A numeric invariant the code relies on was violated; indicates a bug."""
