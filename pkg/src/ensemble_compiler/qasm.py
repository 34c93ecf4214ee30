"""OpenQASM 2.0 subset reader and writer.

Accepted grammar (one statement per ``;``)::

    OPENQASM 2.0;
    include "qelib1.inc";
    qreg q[N];                      // exactly one quantum register
    creg c[M];                      // optional, only used by measure
    NAME(expr, ...) q[i], q[j];     // gates from the library below
    NAME q;                         // single-qubit gate broadcast over q
    barrier q[0], q[1];             // ignored
    measure q[i] -> c[j];           // ignored with a warning; must be final

Gate names: ``u3``/``u``, ``rz``, ``h``, ``s``, ``sdg``, ``t``, ``tdg``, ``x``,
``y``, ``z``, ``cx``/``CX``.  Parameter expressions may use numbers, ``pi``,
``+ - * /``, ``**`` and parentheses.  A comment line ``// global_phase <x>``
sets the circuit's global phase; the writer emits it when nonzero.
"""

from __future__ import annotations

import ast
import logging
import math
import operator
import re

from .circuit import Circuit, Gate, GateKind
from .errors import QasmError, QasmSyntaxError, UnsupportedGateError

log = logging.getLogger(__name__)

_GATE_NAMES = {
    "u3": GateKind.U3, "u": GateKind.U3, "U": GateKind.U3,
    "rz": GateKind.RZ, "h": GateKind.H, "s": GateKind.S, "sdg": GateKind.SDG,
    "t": GateKind.T, "tdg": GateKind.TDG, "x": GateKind.X, "y": GateKind.Y,
    "z": GateKind.Z, "cx": GateKind.CNOT, "CX": GateKind.CNOT,
}

_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}

_STMT = re.compile(
    r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*(?:\((?P<params>[^)]*(?:\([^)]*\)[^)]*)*)\))?\s*(?P<args>.*)$",
    re.S,
)
_ARG = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\[\s*(\d+)\s*\])?\s*$")
_PHASE_COMMENT = re.compile(r"//\s*global_phase\s+(\S+)")


def _eval_expr(text: str, line: int, col: int) -> float:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise QasmSyntaxError(f"bad parameter expression '{text.strip()}'", line, col) from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise QasmSyntaxError(f"unsupported expression '{text.strip()}'", line, col)

    return ev(tree)


def _split_params(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    parts.append("".join(cur))
    return parts


def _statements(text: str):
    """Yield ``(statement, line, column)`` with comments stripped."""
    buf: list[str] = []
    start = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code = raw.split("//", 1)[0]
        for col, ch in enumerate(code, start=1):
            if ch == ";":
                stmt = "".join(buf).strip()
                yield stmt, start or (lineno, col)
                buf, start = [], None
                continue
            if start is None and not ch.isspace():
                start = (lineno, col)
            buf.append(ch)
        buf.append("\n")
    rest = "".join(buf).strip()
    if rest:
        line, col = start
        raise QasmSyntaxError("missing ';' at end of statement", line, col)


def parse_qasm(text: str) -> Circuit:
    """Parse OpenQASM 2.0 text into a :class:`Circuit`."""
    phase = 0.0
    for m in _PHASE_COMMENT.finditer(text):
        phase = float(m.group(1))

    qreg: tuple[str, int] | None = None
    cregs: dict[str, int] = {}
    gates: list[Gate] = []
    measured = False
    saw_header = False
    for stmt, (line, col) in _statements(text):
        if not stmt:
            continue
        head = stmt.split(None, 1)[0]
        if head == "OPENQASM":
            if stmt.split(None, 1)[1:] != ["2.0"]:
                raise QasmSyntaxError("only OPENQASM 2.0 is supported", line, col)
            saw_header = True
            continue
        if head == "include":
            continue
        if head in ("qreg", "creg"):
            m = re.fullmatch(r"(qreg|creg)\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]", stmt)
            if not m:
                raise QasmSyntaxError(f"malformed register declaration '{stmt}'", line, col)
            name, size = m.group(2), int(m.group(3))
            if head == "qreg":
                if qreg is not None:
                    raise QasmError(f"line {line}: multiple quantum registers are not supported")
                if size < 1:
                    raise QasmSyntaxError("register size must be positive", line, col)
                qreg = (name, size)
            else:
                cregs[name] = size
            continue
        if head == "barrier":
            continue
        if head == "measure":
            log.warning("line %d: measurement ignored", line)
            measured = True
            continue

        m = _STMT.match(stmt)
        if not m:
            raise QasmSyntaxError(f"cannot parse statement '{stmt}'", line, col)
        name = m.group("name")
        if name not in _GATE_NAMES:
            raise UnsupportedGateError(name, line)
        kind = _GATE_NAMES[name]
        if qreg is None:
            raise QasmSyntaxError("gate used before qreg declaration", line, col)
        if measured:
            raise QasmError(f"line {line}: gate after measurement (only final measurement is allowed)")
        params = []
        if m.group("params") is not None and m.group("params").strip():
            params = [_eval_expr(p, line, col) for p in _split_params(m.group("params"))]
        if len(params) != kind.num_params:
            raise QasmSyntaxError(
                f"{name} expects {kind.num_params} parameter(s), got {len(params)}", line, col
            )
        args = [a for a in m.group("args").split(",")]
        targets = []
        for a in args:
            am = _ARG.match(a)
            if not am:
                raise QasmSyntaxError(f"bad qubit argument '{a.strip()}'", line, col)
            reg, idx = am.group(1), am.group(2)
            if reg != qreg[0]:
                raise QasmSyntaxError(f"unknown register '{reg}'", line, col)
            if idx is None:
                targets.append(None)
            else:
                if int(idx) >= qreg[1]:
                    raise QasmSyntaxError(f"qubit index {idx} out of range", line, col)
                targets.append(int(idx))
        if len(targets) != kind.num_qubits:
            raise QasmSyntaxError(f"{name} acts on {kind.num_qubits} qubit(s)", line, col)
        if None in targets:
            if kind.num_qubits != 1:
                raise QasmSyntaxError("register broadcast only supported for 1-qubit gates", line, col)
            gates.extend(Gate(kind, (q,), params) for q in range(qreg[1]))
        else:
            gates.append(Gate(kind, tuple(targets), params))

    if qreg is None:
        raise QasmError("no qreg declared")
    if not saw_header:
        log.debug("OPENQASM header missing; assuming 2.0")
    return Circuit(qreg[1], gates, phase)


def emit_qasm(c: Circuit, register: str = "q") -> str:
    """Serialize ``c`` as OpenQASM 2.0 (angles written with full precision)."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";']
    if c.global_phase:
        lines.append(f"// global_phase {c.global_phase!r}")
    lines.append(f"qreg {register}[{c.width}];")
    for g in c.gates:
        args = ",".join(f"{register}[{q}]" for q in g.qubits)
        if g.params:
            params = ",".join(repr(p) for p in g.params)
            lines.append(f"{g.kind.value}({params}) {args};")
        else:
            lines.append(f"{g.kind.value} {args};")
    return "\n".join(lines) + "\n"
