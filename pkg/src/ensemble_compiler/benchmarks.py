"""Benchmark circuit generators (CNOT + U3 gate set)."""

from __future__ import annotations

import math

import numpy as np

from .circuit import CNOT, U3, Circuit, Gate
from .errors import InputError

# single-qubit basis changes expressed as U3
_H = (math.pi / 2, 0.0, math.pi)
_RX_HALF_PI = (math.pi / 2, -math.pi / 2, math.pi / 2)
_RX_MINUS_HALF_PI = (-math.pi / 2, -math.pi / 2, math.pi / 2)


def _phase_gate(q: int, lam: float) -> Gate:
    return U3(q, 0.0, 0.0, lam)


def _zz_exp(a: int, b: int, angle: float) -> list[Gate]:
    """``exp(-i angle/2 Z_a Z_b)`` up to global phase: CNOT, RZ(angle), CNOT."""
    return [CNOT(a, b), _phase_gate(b, angle), CNOT(a, b)]


def _pauli_pair_exp(a: int, b: int, pauli: str, angle: float) -> list[Gate]:
    """``exp(-i angle/2 P_a P_b)`` for ``P`` in ``{x, y, z}``."""
    if pauli == "z":
        return _zz_exp(a, b, angle)
    pre, post = {"x": (_H, _H), "y": (_RX_HALF_PI, _RX_MINUS_HALF_PI)}[pauli]
    return (
        [U3(a, *pre), U3(b, *pre)]
        + _zz_exp(a, b, angle)
        + [U3(a, *post), U3(b, *post)]
    )


def heisenberg(n: int, steps: int, dt: float = 0.1, coupling: float = 1.0) -> Circuit:
    """First-order Trotterization of ``J sum_i (XX + YY + ZZ)`` on an open chain."""
    gates: list[Gate] = []
    for _ in range(steps):
        for i in range(n - 1):
            for p in "xyz":
                gates += _pauli_pair_exp(i, i + 1, p, 2 * coupling * dt)
    return Circuit(n, gates)


def qaoa_ring(n: int, layers: int, seed: int = 0) -> Circuit:
    """MaxCut QAOA ansatz on a ring with seeded angles."""
    rng = np.random.default_rng(seed)
    edges = sorted({tuple(sorted((i, (i + 1) % n))) for i in range(n)})
    gates: list[Gate] = [U3(q, *_H) for q in range(n)]
    for _ in range(layers):
        gamma, beta = rng.uniform(0, math.pi, size=2)
        for a, b in edges:
            gates += _zz_exp(a, b, 2 * gamma)
        # RX(2 beta) = U3(2 beta, -pi/2, pi/2)
        gates += [U3(q, 2 * beta, -math.pi / 2, math.pi / 2) for q in range(n)]
    return Circuit(n, gates)


def _controlled_phase(c: int, t: int, lam: float) -> list[Gate]:
    return [
        _phase_gate(c, lam / 2), CNOT(c, t), _phase_gate(t, -lam / 2),
        CNOT(c, t), _phase_gate(t, lam / 2),
    ]


def _qft(qubits: list[int], inverse: bool = False) -> list[Gate]:
    gates: list[Gate] = []
    m = len(qubits)
    # most significant qubit first; no final swaps (the adder undoes the order)
    for j in reversed(range(m)):
        gates.append(U3(qubits[j], *_H))
        for k in reversed(range(j)):
            gates += _controlled_phase(qubits[k], qubits[j], math.pi / 2 ** (j - k))
    if inverse:
        inv: list[Gate] = []
        for g in reversed(gates):
            if g.kind.value == "cx":
                inv.append(g)
            else:
                theta, phi, lam = g.params
                inv.append(U3(g.qubits[0], -theta, -lam, -phi))
        return inv
    return gates


def qft_adder(n: int) -> Circuit:
    """Draper adder ``|a>|b> -> |a>|a+b mod 2^(n/2)>`` on ``n/2 + n/2`` qubits."""
    if n % 2:
        raise InputError(f"qft_adder needs an even number of qubits, got {n}")
    half = n // 2
    a = list(range(half))
    b = list(range(half, n))
    gates = _qft(b)
    for j in range(half):
        for k in range(j + 1):
            gates += _controlled_phase(a[k], b[j], math.pi / 2 ** (j - k))
    gates += _qft(b, inverse=True)
    return Circuit(n, gates)


def benchmark_circuit(name: str, n: int, steps: int = 1, seed: int = 0) -> Circuit:
    """Build a named benchmark.

    ``steps`` is the Trotter step count for ``heisenberg`` and the layer count
    for ``qaoa_ring``; ``qft_adder`` ignores it.
    """
    if n < 2:
        raise InputError("benchmarks need at least two qubits")
    if name == "heisenberg":
        return heisenberg(n, steps)
    if name == "qaoa_ring":
        return qaoa_ring(n, steps, seed)
    if name == "qft_adder":
        return qft_adder(n)
    raise InputError(f"unknown benchmark '{name}'")
