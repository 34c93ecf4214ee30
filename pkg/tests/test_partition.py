from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ensemble_compiler.benchmarks import heisenberg
from ensemble_compiler.circuit import CNOT, U3, Circuit, fixed, unitary
from ensemble_compiler.errors import InputError
from ensemble_compiler.partition import (
    hierarchical_partition, partition, quick_partition, scan_partition,
)

from oracles import random_circuit, reembedded_unitary

STRATEGIES = ["scan", "quick", "hier"]


def gate_multiset(c):
    return Counter((g.kind, g.qubits, g.params) for g in c.gates)


def two_halves():
    return Circuit(4, [CNOT(0, 1), CNOT(2, 3), U3(0, 0.1, 0.2, 0.3), U3(3, 0.3, 0.2, 0.1), CNOT(1, 0),
                       CNOT(3, 2)])


@pytest.mark.parametrize("fn", [scan_partition, quick_partition])
def test_two_qubit_circuit_is_one_block(fn):
    c = Circuit(2, [CNOT(0, 1), fixed("h", 0), CNOT(1, 0)])
    parts = fn(c, 2)
    assert parts.K == 1 and parts.blocks[0].subcircuit.gates == c.gates


@pytest.mark.parametrize("fn", [scan_partition, quick_partition])
def test_disjoint_halves(fn):
    parts = fn(two_halves(), 2)
    assert parts.K == 2
    assert sorted(b.qubit_map for b in parts.blocks) == [(0, 1), (2, 3)]


def test_heisenberg_fits_one_block():
    assert scan_partition(heisenberg(4, 2), 4).K == 1


def test_quick_cnot_ladder():
    c = Circuit(6, [CNOT(i, i + 1) for i in range(5)])
    assert quick_partition(c, 2).K == 5


def test_quick_single_qubit_gates_fill_bins():
    c = Circuit(8, [fixed("h", q) for q in range(8)])
    assert quick_partition(c, 4).K == 2


def test_block_width_respected_and_local_indices():
    rng = np.random.default_rng(2)
    c = random_circuit(7, 60, rng)
    for s in STRATEGIES:
        for b in partition(c, s, 3).blocks:
            assert b.subcircuit.width == len(b.qubit_map) <= 3
            assert all(q < b.subcircuit.width for g in b.subcircuit.gates for q in g.qubits)


def test_hierarchical_single_block_and_degenerate():
    c = heisenberg(3, 1)
    assert hierarchical_partition(c, 4, 4).K == 1
    rng = np.random.default_rng(4)
    c = random_circuit(6, 40, rng)
    parts = hierarchical_partition(c, 3, 3)
    assert np.allclose(reembedded_unitary(parts), unitary(c), atol=1e-9)


@pytest.mark.parametrize("n", [6, 8, 10])
def test_hierarchical_reconstruction(n):
    rng = np.random.default_rng(n)
    c = random_circuit(n, 50, rng)
    parts = hierarchical_partition(c, 6, 3)
    assert np.allclose(reembedded_unitary(parts), unitary(c), atol=1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(2, 4), st.sampled_from(STRATEGIES))
def test_reconstruction_and_coverage(seed, n, w, strategy):
    rng = np.random.default_rng(seed)
    c = random_circuit(n, 30, rng)
    parts = partition(c, strategy, w)
    assert np.allclose(reembedded_unitary(parts), unitary(c), atol=1e-9)
    assert gate_multiset(parts.reassemble()) == gate_multiset(c)
    assert sorted(i for b in parts.blocks for i in b.gate_indices) == list(range(len(c)))


def test_scan_not_worse_than_quick_on_corpus():
    # tracked regression observation, not a theorem
    totals = {"scan": 0, "quick": 0}
    for seed in range(10):
        c = random_circuit(6, 40, np.random.default_rng(seed))
        for s in totals:
            totals[s] += partition(c, s, 3).K
    assert totals["scan"] <= totals["quick"]


@pytest.mark.parametrize("args", [("scan", 1), ("bogus", 4)])
def test_partition_errors(args):
    with pytest.raises(InputError):
        partition(heisenberg(3, 1), *args)
