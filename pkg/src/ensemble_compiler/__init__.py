"""Ensemble approximate compilation of quantum circuits.

Circuits are partitioned into blocks, each block is approximated by many
cheaper circuits, and optimal weights over those circuits make the averaged
channel quadratically closer to the target than any single approximation.
"""

from .circuit import FT, NISQ, Circuit, Gate, GateKind, unitary
from .errors import CapacityError, CompilerError, InputError, NumericalFailure, QasmError
from .qasm import emit_qasm, parse_qasm

__version__ = "0.1.0"

__all__ = [
    "FT",
    "NISQ",
    "CapacityError",
    "Circuit",
    "CompilerError",
    "Gate",
    "GateKind",
    "InputError",
    "NumericalFailure",
    "QasmError",
    "emit_qasm",
    "parse_qasm",
    "unitary",
]
