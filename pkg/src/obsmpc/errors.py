"""Exception types shared across the package."""


class SingularObservation(Exception):
    """Observation evaluated too close to the sensor singularity."""


class LinearSolveFailure(Exception):
    """Damped normal equations are numerically singular (degenerate window)."""


class NonConvergence(Exception):
    """No multistart of the full window solve reached the gradient tolerance."""


class NotSymmetric(Exception):
    """Matrix handed to a symmetric eigensolver is not symmetric."""


class MissingOracle(Exception):
    """Trace diagnostic requires oracle columns that were not logged."""


class SchemaError(Exception):
    """Trace file does not carry the expected columns."""


class ConfigError(Exception):
    """Run configuration failed validation; message names the offending field."""
