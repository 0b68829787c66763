"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: data/parse problems exit 2,
numeric failures exit 3. Plain ValueError marks misuse of the
library API (bad argument domains) and is treated as a data error
when it surfaces from file-driven runs.
"""


class DataError(Exception):
    """Input data violates a schema or a documented precondition."""

    exit_code = 2


class ParseError(DataError):
    """Malformed file content; carries the byte offset of the failure."""

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class CheckpointError(DataError):
    """Model checkpoint file is corrupt or has an unknown layout."""


class NumericError(Exception):
    """Computation produced non-finite values or failed to converge."""

    exit_code = 3
