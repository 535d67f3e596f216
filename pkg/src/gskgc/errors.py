"""Exception hierarchy shared across the pipeline.

Each class carries the process exit code the CLI maps it to.
"""


class GskgcError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class ValidationError(GskgcError):
    """Bad arguments, malformed configs, contract violations."""

    exit_code = 2


class DataError(GskgcError):
    """Missing or malformed input files."""

    exit_code = 3


class EndpointError(GskgcError):
    """Generation endpoint unreachable after retries were exhausted."""

    exit_code = 4
