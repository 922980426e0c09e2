"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: malformed input / parse problems exit
with 2, resource and numeric failures with 3.
"""


class GadgetError(Exception):
    """Base class for all errors raised by this package."""


class MalformedInputError(GadgetError, ValueError):
    """Input violates a schema or an operation precondition."""


class WrongBuilderError(MalformedInputError):
    """A builder received terms of the wrong locality for its construction."""


class ResourceLimitError(GadgetError):
    """The requested computation exceeds the configured desk-scale limits."""


class NumericError(GadgetError):
    """A linear solve or eigensolve failed or is too ill-conditioned to trust."""
