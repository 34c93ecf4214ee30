"""Exception hierarchy shared by every stage of the compiler."""

from __future__ import annotations


class CompilerError(Exception):
    """Base class for all errors raised by :mod:`ensemble_compiler`."""

    exit_code = 1


class InputError(CompilerError, ValueError):
    """An argument violates a documented precondition."""

    exit_code = 2


class ContractViolation(InputError):
    """An input fails a structural contract (e.g. a matrix is not Hermitian)."""


class CapacityError(CompilerError):
    """The requested computation exceeds a configured size limit."""

    exit_code = 3


class NumericalFailure(CompilerError):
    """An iterative routine did not converge.

    ``best`` carries the best iterate found so callers can inspect or reuse it.
    """

    exit_code = 4

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class QasmError(CompilerError):
    """Base class for OpenQASM parsing problems."""

    exit_code = 2


class QasmSyntaxError(QasmError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnsupportedGateError(QasmError):
    def __init__(self, name: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unsupported gate '{name}'{where}")
        self.name = name
        self.line = line
