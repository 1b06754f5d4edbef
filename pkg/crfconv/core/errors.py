from __future__ import annotations


class CrfConvError(Exception):
    """Base class for every error raised by crfconv."""


class CloudParseError(CrfConvError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ShapeMismatchError(CrfConvError, ValueError):
    pass


class UnsupportedConfigurationError(CrfConvError):
    pass


class SolverConvergenceError(CrfConvError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class ProbabilityRowError(CrfConvError, ValueError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row
