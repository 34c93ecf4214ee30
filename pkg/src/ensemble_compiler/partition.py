"""Partition a circuit into an ordered sequence of blocks of at most ``w`` qubits.

Three strategies are provided:

* :func:`scan_partition` greedily picks, at each step, the ``w``-qubit subset
  that absorbs the most gates from the current frontier.
* :func:`quick_partition` makes one pass over the gates and packs them into
  open bins.
* :func:`hierarchical_partition` runs the quick partitioner at a coarse width
  and then the scan partitioner inside each coarse block.

Every strategy emits blocks in an order consistent with gate dependencies, so
composing the blocks in order reproduces the input circuit exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .circuit import Circuit, Gate, GateKind
from .errors import InputError

DEFAULT_BLOCK_WIDTH = 4
# above this many candidate subsets only qubits near the frontier are scored
MAX_SUBSETS = 5000
FRONTIER_WINDOW = 8


@dataclass(frozen=True)
class Block:
    block_id: int
    qubit_map: tuple[int, ...]
    subcircuit: Circuit
    position: int
    gate_indices: tuple[int, ...] = ()

    @property
    def width(self) -> int:
        return len(self.qubit_map)

    def embedded(self, width: int) -> Circuit:
        return self.subcircuit.remap(self.qubit_map, width)


@dataclass(frozen=True)
class PartitionedCircuit:
    width: int
    blocks: tuple[Block, ...]

    @property
    def K(self) -> int:
        return len(self.blocks)

    def reassemble(self) -> Circuit:
        out = Circuit(self.width)
        for b in self.blocks:
            out = out.compose(b.embedded(self.width))
        return out


def _make_block(c: Circuit, indices: Sequence[int], block_id: int) -> Block:
    qubits = sorted({q for i in indices for q in c.gates[i].qubits})
    local = {q: k for k, q in enumerate(qubits)}
    gates = [Gate(c.gates[i].kind, tuple(local[q] for q in c.gates[i].qubits), c.gates[i].params) for i in indices]
    return Block(block_id, tuple(qubits), Circuit(len(qubits), gates), block_id, tuple(indices))


def _check(c: Circuit, w: int) -> None:
    if w < 2:
        raise InputError(f"block width must be at least 2, got {w}")


def _absorb(c: Circuit, remaining: list[int], subset: frozenset) -> list[int]:
    """Gates from ``remaining`` (in order) that a block on ``subset`` can take."""
    closed: set[int] = set()
    taken: list[int] = []
    for i in remaining:
        qs = c.gates[i].qubits
        touched = subset.intersection(qs)
        if not touched:
            continue
        if len(touched) == len(qs) and not closed.intersection(qs):
            taken.append(i)
        else:
            closed.update(touched)
            if closed >= subset:
                break
    return taken


def _candidate_subsets(c: Circuit, remaining: list[int], w: int):
    n = c.width
    size = min(w, n)
    if math.comb(n, size) <= MAX_SUBSETS:
        return itertools.combinations(range(n), size)
    active: list[int] = []
    for i in remaining:
        for q in c.gates[i].qubits:
            if q not in active:
                active.append(q)
        if len(active) >= FRONTIER_WINDOW:
            break
    active = sorted(active[: max(FRONTIER_WINDOW, size)])
    if len(active) < size:
        pad = [q for q in range(n) if q not in active][: size - len(active)]
        active = sorted(active + pad)
    return itertools.combinations(active, size)


def scan_partition(c: Circuit, w: int = DEFAULT_BLOCK_WIDTH) -> PartitionedCircuit:
    """Greedy frontier partitioner.

    Each candidate subset is scored by the number of gates it absorbs; ties go
    to more two-qubit gates, then to the lexicographically smallest subset.
    """
    _check(c, w)
    remaining = list(range(len(c.gates)))
    blocks: list[Block] = []
    while remaining:
        best_key, best_taken = None, None
        for subset in _candidate_subsets(c, remaining, w):
            taken = _absorb(c, remaining, frozenset(subset))
            two_q = sum(1 for i in taken if c.gates[i].kind is GateKind.CNOT)
            key = (len(taken), two_q, tuple(-q for q in subset))
            if best_key is None or key > best_key:
                best_key, best_taken = key, taken
        blocks.append(_make_block(c, best_taken, len(blocks)))
        taken_set = set(best_taken)
        remaining = [i for i in remaining if i not in taken_set]
    return PartitionedCircuit(c.width, tuple(blocks))


def quick_partition(c: Circuit, w: int = DEFAULT_BLOCK_WIDTH) -> PartitionedCircuit:
    """Single-pass bin packing in gate order.

    A gate joins the unique open bin sharing its qubits when the union still
    fits in ``w``; a gate touching no open bin joins the first bin it fits in.
    Otherwise the conflicting bins are closed and a new bin is opened.  Bins
    are emitted in the order they close.
    """
    _check(c, w)
    open_bins: list[tuple[set[int], list[int]]] = []
    closed: list[list[int]] = []

    def close(bin_):
        open_bins.remove(bin_)
        closed.append(bin_[1])

    for i, g in enumerate(c.gates):
        qs = set(g.qubits)
        touching = [b for b in open_bins if b[0] & qs]
        if len(touching) == 1 and len(touching[0][0] | qs) <= w:
            touching[0][0].update(qs)
            touching[0][1].append(i)
            continue
        for b in touching:
            close(b)
        for b in open_bins:
            if len(b[0] | qs) <= w:
                b[0].update(qs)
                b[1].append(i)
                break
        else:
            open_bins.append((set(qs), [i]))
    for b in list(open_bins):
        close(b)
    blocks = tuple(_make_block(c, idx, k) for k, idx in enumerate(closed))
    return PartitionedCircuit(c.width, blocks)


def hierarchical_partition(c: Circuit, w_outer: int, w: int = DEFAULT_BLOCK_WIDTH) -> PartitionedCircuit:
    """Quick partition at ``w_outer``, then scan partition at ``w`` inside each block."""
    _check(c, w)
    if w_outer < w:
        raise InputError(f"outer width {w_outer} must be at least the block width {w}")
    outer = quick_partition(c, w_outer)
    blocks: list[Block] = []
    for ob in outer.blocks:
        inner = scan_partition(ob.subcircuit, w)
        for ib in inner.blocks:
            indices = [ob.gate_indices[j] for j in ib.gate_indices]
            blocks.append(_make_block(c, indices, len(blocks)))
    return PartitionedCircuit(c.width, tuple(blocks))


def partition(c: Circuit, strategy: str = "scan", w: int = DEFAULT_BLOCK_WIDTH,
              w_outer: int | None = None) -> PartitionedCircuit:
    if strategy == "scan":
        return scan_partition(c, w)
    if strategy == "quick":
        return quick_partition(c, w)
    if strategy in ("hier", "hierarchical"):
        return hierarchical_partition(c, w_outer or 2 * w, w)
    raise InputError(f"unknown partitioner '{strategy}'")
