from typing import Optional


class PotensorError(Exception):
    """Base error carrying a CLI exit code and a one-line detail message"""

    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class InputError(PotensorError):
    """Dimension mismatch, malformed file or invalid argument"""


class DigestMismatch(PotensorError):
    """A file no longer matches the digest recorded in a run manifest"""


class InitFailed(PotensorError):
    """No initial point with 2g < ||A||^2 was found within the retry budget"""


class WindowTooShort(PotensorError):
    """Too few usable trace points for a convergence-rate fit"""


class ZeroContraction(PotensorError):
    """An ALS contraction vanished; handled inside the sweep"""

    def __init__(self, mode: int, column: int):
        super().__init__(f"zero contraction at mode {mode}, column {column}")
        self.mode = mode
        self.column = column


class AllTruncated(PotensorError):
    """Every rank-1 component was removed by truncation"""

    exit_code = 3

    def __init__(self, detail: str, record=None, state=None):
        super().__init__(detail)
        self.record = record
        self.state = state
