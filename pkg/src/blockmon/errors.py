"""Exception hierarchy shared by the library and the CLI."""


class BlockmonError(Exception):
    """Base class for all errors raised by this package."""


class InputError(BlockmonError, ValueError):
    """Malformed or inconsistent input (files, flags, variable lists)."""


class FlowsheetError(InputError):
    """A flowsheet file failed to parse or validate.

    ``lineno`` is the 1-based line of the offending record, when known.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ComputationError(BlockmonError):
    """A numerical step failed (zero variance, non-convergence, ...)."""


class ZeroVarianceError(ComputationError):
    def __init__(self, tag):
        self.tag = tag
        super().__init__(f"variable {tag!r} has zero variance in the training data")


class ConvergenceError(ComputationError):
    pass
