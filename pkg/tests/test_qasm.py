import logging
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ensemble_compiler.circuit import CNOT, RZ, U3, Circuit, GateKind, fixed, unitary
from ensemble_compiler.errors import QasmError, QasmSyntaxError, UnsupportedGateError
from ensemble_compiler.qasm import emit_qasm, parse_qasm

from oracles import random_circuit

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def test_single_h():
    c = parse_qasm(HEADER + "qreg q[1]; h q[0];")
    assert c.width == 1 and c.gates == (fixed("h", 0),)


def test_single_cx():
    c = parse_qasm(HEADER + "qreg q[2]; cx q[0],q[1];")
    assert c.width == 2 and c.gates == (CNOT(0, 1),)


def test_parameterized_gates():
    c = parse_qasm(HEADER + "qreg q[1]; rz(0.5) q[0]; u3(1,2,3) q[0];")
    assert c.gates == (RZ(0, 0.5), U3(0, 1, 2, 3))


def test_expressions_and_broadcast():
    c = parse_qasm(HEADER + "qreg q[3];\nrz(pi/4) q[0];\nrz(-2*pi/3+0.5) q[1];\nh q;\n")
    assert c.gates[0].params[0] == pytest.approx(math.pi / 4)
    assert c.gates[1].params[0] == pytest.approx(-2 * math.pi / 3 + 0.5)
    assert [g.qubits[0] for g in c.gates[2:]] == [0, 1, 2]


def test_measure_is_ignored_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        c = parse_qasm(HEADER + "qreg q[1]; creg c[1]; h q[0]; measure q[0] -> c[0];")
    assert len(c) == 1
    assert "measurement ignored" in caplog.text


def test_comments_and_barrier():
    c = parse_qasm(HEADER + "qreg q[2]; // comment\nbarrier q[0],q[1];\nx q[1]; // trailing\n")
    assert c.gates == (fixed("x", 1),)


@pytest.mark.parametrize(
    "body, error",
    [
        ("qreg q[1]; foo q[0];", UnsupportedGateError),
        ("qreg q[1]; qreg r[1];", QasmError),
        ("qreg q[1]; h q[3];", QasmSyntaxError),
        ("qreg q[1]; rz q[0];", QasmSyntaxError),
        ("qreg q[1]; rz(1+) q[0];", QasmSyntaxError),
        ("h q[0];", QasmSyntaxError),
        ("qreg q[1]; creg c[1]; measure q[0] -> c[0]; h q[0];", QasmError),
        ("", QasmError),
    ],
)
def test_parse_errors(body, error):
    with pytest.raises(error):
        parse_qasm(HEADER + body)


def test_syntax_error_reports_position():
    with pytest.raises(QasmSyntaxError) as info:
        parse_qasm(HEADER + "qreg q[1];\n  h q[7];")
    assert info.value.line == 4


def test_empty_circuit_round_trip():
    c = Circuit(3)
    assert parse_qasm(emit_qasm(c)) == c


@pytest.mark.parametrize("kind", list(GateKind))
def test_one_gate_round_trip(kind):
    if kind is GateKind.CNOT:
        g = CNOT(1, 0)
    elif kind is GateKind.U3:
        g = U3(0, 0.1, -0.2, 0.3)
    elif kind is GateKind.RZ:
        g = RZ(1, 1e-7)
    else:
        g = fixed(kind, 1)
    c = Circuit(2, [g])
    assert parse_qasm(emit_qasm(c)) == c


@given(st.integers(0, 2**32 - 1))
def test_random_round_trip(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(4, 100, rng).with_phase(float(rng.uniform(-3, 3)))
    back = parse_qasm(emit_qasm(c))
    assert [g.kind for g in back.gates] == [g.kind for g in c.gates]
    assert [g.qubits for g in back.gates] == [g.qubits for g in c.gates]
    assert np.allclose([p for g in back.gates for p in g.params], [p for g in c.gates for p in g.params],
                       atol=1e-12, rtol=0)
    assert np.allclose(unitary(back), unitary(c), atol=1e-10)
