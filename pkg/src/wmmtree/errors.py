"""Exception hierarchy shared by the library and the command line."""


class WMMError(Exception):
    """Base class for all errors raised by wmmtree."""


class TreeDataError(WMMError, ValueError):
    """Malformed edge table or a tree that fails structural validation.

    ``row`` is the 1-based data row number (header excluded) when the
    problem can be pinned to a single row.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SamplingError(WMMError, RuntimeError):
    """A branch sampler could not produce a feasible draw."""

    def __init__(self, message, acceptance_rate=None):
        self.acceptance_rate = acceptance_rate
        super().__init__(message)


class EstimationError(WMMError, RuntimeError):
    """Estimation cannot proceed (e.g. no informative paths)."""


class CodegenError(WMMError, ValueError):
    """The tree cannot be expressed as a generated model."""


class ModelSyntaxError(WMMError, ValueError):
    """Generated model text failed to parse or validate."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)
