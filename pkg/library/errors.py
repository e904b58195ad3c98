"""
Error hierarchy shared by the library, the CLI and the HTTP routers.
"""


class UrnChainError(Exception):
    """Base class for every failure raised by the urn chain library."""


class InputParseError(UrnChainError, ValueError):
    """
    A config file, schedule or argument could not be parsed.

    Args:
        message (str): what went wrong.
        source (str, optional): file name or argument the text came from.
        line (int, optional): 1-based line number of the offending text.
    """

    def __init__(self, message: str, source: str = None, line: int = None):
        self.source = source
        self.line = line
        location = ""
        if source is not None:
            location = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(f"{location}{message}")


class ModelViolation(UrnChainError, ValueError):
    """A model invariant does not hold (bad urn, non-monotone chain, schedule overflow, ...)."""


class ResourceCapExceeded(UrnChainError):
    """
    An exact computation would exceed the configured table cap.

    Args:
        cells (int): size the request would have produced.
        cap (int): configured limit.
        suggested_mode (str): cheaper mode the caller should use instead.
    """

    def __init__(self, cells: int, cap: int, suggested_mode: str = "mc"):
        self.cells = cells
        self.cap = cap
        self.suggested_mode = suggested_mode
        super().__init__(
            f"table of {cells} cells exceeds the cap of {cap}; use mode '{suggested_mode}' instead"
        )
