import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from ensemble_compiler.circuit import (
    CNOT, FT, NISQ, RZ, Circuit, Gate, GateKind, count_expensive, count_non_clifford_rz, fixed,
    is_clifford_angle, lower_to_clifford_rz, profile_by_name, rz_as_gates, rz_matrix, simplify, u3_matrix,
    u3_params, unitary,
)
from ensemble_compiler.benchmarks import benchmark_circuit, heisenberg, qaoa_ring, qft_adder
from ensemble_compiler.errors import CapacityError, InputError
from ensemble_compiler.linalg import frobenius_norm, haar_unitary

from oracles import dense_unitary, phase_free_distance, random_circuit

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1.0, -1.0]).astype(complex),
}
seeds = st.integers(0, 2**32 - 1)


def test_empty_circuit_is_identity():
    assert np.array_equal(unitary(Circuit(2)), np.eye(4))


def test_single_x():
    assert np.allclose(unitary(Circuit(1, [fixed("x", 0)])), PAULI["x"])


def test_bell_column():
    U = unitary(Circuit(2, [fixed("h", 0), CNOT(0, 1)]))
    assert np.allclose(U[:, 0], np.array([1, 0, 0, 1]) / math.sqrt(2))


def test_unitary_width_cap():
    with pytest.raises(CapacityError):
        unitary(Circuit(11))


@pytest.mark.parametrize(
    "make",
    [
        lambda: Gate(GateKind.CNOT, (0, 0)),
        lambda: Gate(GateKind.U3, (0,), (1.0,)),
        lambda: Gate(GateKind.H, (0, 1)),
        lambda: Circuit(1, [CNOT(0, 1)]),
        lambda: Circuit(0),
    ],
)
def test_invalid_gates_and_circuits(make):
    with pytest.raises(InputError):
        make()


@given(seeds, st.integers(1, 4))
def test_unitary_matches_dense_kron_oracle(seed, n):
    rng = np.random.default_rng(seed)
    c = random_circuit(n, 12, rng).with_phase(float(rng.uniform(-3, 3)))
    assert np.allclose(unitary(c), dense_unitary(c), atol=1e-10)


@given(seeds)
def test_compose_is_matrix_product(seed):
    rng = np.random.default_rng(seed)
    a, b = random_circuit(3, 8, rng), random_circuit(3, 8, rng)
    assert np.allclose(unitary(a.compose(b)), unitary(b) @ unitary(a), atol=1e-10)
    assert np.allclose(unitary(a.append(*b.gates)), unitary(b) @ unitary(a), atol=1e-10)


@given(seeds)
def test_circuit_unitary_is_unitary(seed):
    rng = np.random.default_rng(seed)
    U = unitary(random_circuit(5, 30, rng))
    assert frobenius_norm(U.conj().T @ U - np.eye(32)) < 1e-9


@given(st.floats(-10, 10))
def test_rz_matrix(theta):
    assert np.allclose(rz_matrix(theta), np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]), atol=1e-12)
    gates, phase = rz_as_gates(0, theta)
    assert np.allclose(unitary(Circuit(1, gates, phase)), rz_matrix(theta), atol=1e-12)


@given(seeds)
def test_u3_params_reconstructs(seed):
    U = haar_unitary(2, np.random.default_rng(seed))
    theta, phi, lam, alpha = u3_params(U)
    assert 0 <= theta <= math.pi
    assert -math.pi < phi <= math.pi and -math.pi < lam <= math.pi
    assert np.allclose(np.exp(1j * alpha) * u3_matrix(theta, phi, lam), U, atol=1e-12)


@pytest.mark.parametrize("name", ["x", "y", "z"])
def test_u3_params_on_paulis(name):
    theta, phi, lam, alpha = u3_params(PAULI[name])
    assert np.allclose(np.exp(1j * alpha) * u3_matrix(theta, phi, lam), PAULI[name], atol=1e-12)


@given(seeds)
def test_lowering_preserves_unitary(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(3, 15, rng)
    low = lower_to_clifford_rz(c)
    assert not any(g.kind is GateKind.U3 for g in low.gates)
    assert np.allclose(unitary(low), unitary(c), atol=1e-9)


@given(seeds)
def test_simplify_preserves_unitary(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(3, 25, rng, kinds=("rz", "cx", "fixed"))
    s = simplify(c)
    assert len(s) <= len(c)
    assert np.allclose(unitary(s), unitary(c), atol=1e-9)


def test_clifford_angles():
    assert is_clifford_angle(math.pi / 2) and is_clifford_angle(-3 * math.pi)
    assert not is_clifford_angle(math.pi / 4)
    c = Circuit(1, [RZ(0, math.pi / 2), RZ(0, 0.3), RZ(0, math.pi)])
    assert count_non_clifford_rz(c) == 1


def test_count_expensive():
    bell = Circuit(2, [fixed("h", 0), CNOT(0, 1)])
    assert count_expensive(bell, NISQ) == 1
    ttd = Circuit(1, [fixed("t", 0), fixed("tdg", 0)])
    assert count_expensive(ttd, FT) == 2


def test_profiles():
    assert profile_by_name("NISQ") is NISQ and profile_by_name("ft") is FT
    with pytest.raises(InputError):
        profile_by_name("cloud")


# --- benchmarks -------------------------------------------------------------


def test_heisenberg_two_qubit_step_is_exact_exponential():
    dt = 0.1
    c = heisenberg(2, 1, dt)
    # the three pair terms commute, so one step equals exp(-i dt (XX + YY + ZZ))
    H = sum(np.kron(PAULI[p], PAULI[p]) for p in "xyz")
    assert phase_free_distance(unitary(c), expm(-1j * dt * H)) < 1e-10
    assert count_expensive(c, NISQ) == 6  # two CNOTs per pair term


def test_heisenberg_four_qubit_counts():
    assert count_expensive(heisenberg(4, 1), NISQ) == 18
    assert count_expensive(heisenberg(4, 2), NISQ) == 36


def test_heisenberg_trotter_oracle():
    dt, n = 0.1, 3
    V = np.eye(8, dtype=complex)
    for i in range(n - 1):
        for p in "xyz":
            ops = [np.eye(2)] * n
            ops[i] = ops[i + 1] = PAULI[p]
            # little-endian: qubit 0 is the rightmost Kronecker factor
            P = ops[n - 1]
            for m in reversed(ops[: n - 1]):
                P = np.kron(P, m)
            V = expm(-1j * dt * P) @ V
    assert phase_free_distance(unitary(heisenberg(n, 1, dt)), V) < 1e-10


def test_qaoa_ring_three_qubits():
    c = qaoa_ring(3, 1, seed=0)
    assert count_expensive(c, NISQ) == 6  # 3 ZZ terms, 2 CNOTs each
    u3 = [g for g in c.gates if g.kind is GateKind.U3]
    # initial Hadamards, one Z rotation per cost term, one mixer RX per qubit
    assert len(u3) == 9


def test_qaoa_seeded_and_deterministic():
    assert qaoa_ring(4, 2, seed=5) == qaoa_ring(4, 2, seed=5)
    assert qaoa_ring(4, 2, seed=5) != qaoa_ring(4, 2, seed=6)


def test_qft_adder_adds():
    n = 4  # a on qubits 0..1, b on qubits 2..3; b <- a + b mod 4
    U = unitary(qft_adder(n))
    for a in range(4):
        for b in range(4):
            col = U[:, a | (b << 2)]
            out = int(np.argmax(np.abs(col)))
            assert abs(col[out]) == pytest.approx(1, abs=1e-9)
            assert out == a | (((a + b) % 4) << 2)


@pytest.mark.parametrize("name,n", [("qft_adder", 3), ("heisenberg", 1), ("nope", 4)])
def test_benchmark_errors(name, n):
    with pytest.raises(InputError):
        benchmark_circuit(name, n)
