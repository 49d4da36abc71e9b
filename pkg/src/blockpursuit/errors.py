"""Exception types raised across the package.

Invalid arguments use the builtin :class:`ValueError`; the classes here cover
the failure modes that callers (mostly the CLI) need to tell apart.
"""


class CapacityError(RuntimeError):
    """A brute-force enumeration would exceed its configured guard."""


class SolverDivergenceError(RuntimeError):
    """The time integrator produced non-finite or exploding values."""


class DataError(RuntimeError):
    """Input data was present but unusable (e.g. no readable images)."""
