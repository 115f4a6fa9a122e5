"""Exception hierarchy shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit-raised errors."""


class InputError(ToolkitError, ValueError):
    """Malformed instance data or invalid arguments (CLI exit code 2)."""


class SizeLimitError(ToolkitError):
    """A brute-force or enumeration limit was exceeded (CLI exit code 3)."""


class LpNumericalError(ToolkitError):
    """The LP solver failed numerically (pivot guard or solver breakdown).

    Deliberately distinct from an infeasible status: infeasibility is an
    answer, numerical failure is not.
    """
