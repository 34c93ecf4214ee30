"""Non-Clifford rotation reduction by greedy angle snapping.

Each non-Clifford RZ is tried in turn, nearest-to-Clifford first: its angle
is fixed to the closest multiple of pi/2, the remaining free angles are
re-optimized, and the snap is kept only if the block still meets the
Frobenius constraint.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from ..circuit import Circuit, GateKind, count_non_clifford_rz, is_clifford_angle, simplify, unitary
from ..errors import InputError
from .engine import ParamCircuit
from .instantiate import optimize_params, phase_aligned_error

log = logging.getLogger(__name__)

HALF_PI = math.pi / 2


def ft_error_budget(n_z: int, eps: float, reference: bool = False) -> float:
    """Per-RZ synthesis budget: ``eps / n_z``, or ``eps**2 / n_z`` for the reference."""
    if n_z < 1:
        raise InputError("n_z must be at least 1")
    return (eps * eps if reference else eps) / n_z


def _clifford_distance(theta: float) -> float:
    return abs(theta - HALF_PI * round(theta / HALF_PI))


def _param_circuit(c: Circuit) -> tuple[ParamCircuit, np.ndarray]:
    """Parameterize every non-Clifford RZ of ``c``; other gates stay fixed."""
    pc = ParamCircuit(c.width, global_phase=c.global_phase)
    x = []
    for g in c.gates:
        if g.kind is GateKind.RZ and not is_clifford_angle(g.params[0]):
            pc.add_rz(g.qubits[0])
            x.append(g.params[0])
        else:
            pc.add_fixed(g)
    return pc, np.array(x, dtype=float)


def _snapped_circuit(pc: ParamCircuit, x: np.ndarray, snapped: set[int]) -> tuple[ParamCircuit, np.ndarray]:
    """Copy of ``pc`` with the parameters in ``snapped`` frozen at their values."""
    out = ParamCircuit(pc.width, global_phase=pc.global_phase)
    free = []
    for op in pc.ops:
        if op.offset < 0:
            out.ops.append(op)
        elif op.offset in snapped:
            out.ops.append(type(op)(GateKind.RZ, op.qubits, -1, (float(x[op.offset]),)))
        else:
            out.add_rz(op.qubits[0])
            free.append(x[op.offset])
    return out, np.array(free, dtype=float)


def ntro_pass(c: Circuit, V: np.ndarray, eps: float) -> Circuit:
    """Snap RZ angles to Clifford values while keeping ``||U - V||_F <= eps``.

    Distances are phase-aligned.  The returned circuit carries the phase
    that aligns it with ``V`` and never has more non-Clifford RZ gates than
    ``c``.
    """
    V = np.asarray(V, dtype=complex)
    if not any(g.kind is GateKind.RZ for g in c.gates):
        raise InputError("ntro_pass needs a circuit with RZ gates")
    if V.shape != (1 << c.width, 1 << c.width):
        raise InputError("target dimension does not match the circuit width")
    start_err = phase_aligned_error(unitary(c), V)
    if start_err > eps:
        raise InputError(f"input circuit error {start_err:.3g} exceeds eps {eps:.3g}")

    pc, x = _param_circuit(c)
    order = sorted(range(len(x)), key=lambda k: (_clifford_distance(x[k]), k))
    snapped: set[int] = set()
    for k in order:
        trial = x.copy()
        trial[k] = HALF_PI * round(x[k] / HALF_PI)
        sub, free = _snapped_circuit(pc, trial, snapped | {k})
        err, free_opt = optimize_params(sub, V, free) if len(free) else (phase_aligned_error(sub.matrix(free), V), free)
        if err <= eps:
            snapped.add(k)
            it = iter(free_opt)
            x = np.array([trial[j] if j in snapped else next(it) for j in range(len(x))])
        else:
            log.debug("snap of rotation %d rejected (error %.3g)", k, err)

    out = simplify(pc.to_circuit(x))
    U = unitary(out)
    aligned_phase = out.global_phase + float(np.angle(np.vdot(U, V)))
    out = out.with_phase(math.remainder(aligned_phase, 2 * math.pi))
    if phase_aligned_error(unitary(out), V) > eps or count_non_clifford_rz(out) > count_non_clifford_rz(c):
        log.warning("snapping produced an invalid circuit; returning the input")
        return c
    return out
