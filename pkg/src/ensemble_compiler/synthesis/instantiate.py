"""Ansatz templates and numerical instantiation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ..circuit import CNOT, Circuit, GateSetProfile, NISQ, count_expensive, unitary
from ..errors import InputError
from ..linalg import check_unitary, frobenius_norm, num_qubits, phase_align
from .engine import ParamCircuit

log = logging.getLogger(__name__)

DEFAULT_RESTARTS = 8
MAX_EVALS = 400
LM_TOL = 1e-12
# a run this close is treated as exact; deeper templates cannot improve it
EXACT_TOL = 1e-7


@dataclass(frozen=True)
class AnsatzTemplate:
    """CNOT skeleton with a U3 on every wire up front and after every CNOT."""

    width: int
    cnot_layout: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for c, t in self.cnot_layout:
            if c == t or not (0 <= c < self.width and 0 <= t < self.width):
                raise InputError(f"bad CNOT pair ({c}, {t}) for width {self.width}")

    @property
    def cnot_count(self) -> int:
        return len(self.cnot_layout)

    @property
    def num_u3(self) -> int:
        return self.width + 2 * len(self.cnot_layout)

    @property
    def num_params(self) -> int:
        return 3 * self.num_u3

    def extend(self, pair: tuple[int, int]) -> "AnsatzTemplate":
        return AnsatzTemplate(self.width, self.cnot_layout + (tuple(pair),))

    def param_circuit(self) -> ParamCircuit:
        pc = ParamCircuit(self.width)
        for q in range(self.width):
            pc.add_u3(q)
        for c, t in self.cnot_layout:
            pc.add_fixed(CNOT(c, t))
            pc.add_u3(c)
            pc.add_u3(t)
        return pc


@dataclass(frozen=True)
class SynthesisResult:
    circuit: Circuit
    unitary: np.ndarray = field(repr=False)
    error: float
    expensive_count: int
    phase: float = 0.0

    @property
    def e(self) -> float:
        return self.error


def make_result(c: Circuit, V: np.ndarray, profile: GateSetProfile = NISQ) -> SynthesisResult:
    """Phase-align ``c`` to ``V`` and recompute its error from scratch."""
    U = unitary(c)
    U_aligned, phi = phase_align(U, V)
    aligned = c.with_phase(float(np.remainder(c.global_phase + phi + np.pi, 2 * np.pi) - np.pi))
    U_aligned = unitary(aligned)
    return SynthesisResult(aligned, U_aligned, frobenius_norm(U_aligned - V), count_expensive(aligned, profile), phi)


def optimize_params(pc: ParamCircuit, V: np.ndarray, x0: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimize ``min_phi ||e^{i phi} U(x) - V||_F`` from ``x0``.

    Levenberg-Marquardt on the phase-augmented residual, with the analytic
    Jacobian; returns (Frobenius error at the optimal phase, params).
    """
    x0 = np.asarray(x0, dtype=float)
    if pc.num_params == 0:
        return phase_aligned_error(pc.matrix(x0), V), x0
    phi0 = float(np.angle(np.vdot(pc.matrix(x0), V)))
    xp0 = np.append(x0, phi0)
    cache: dict = {}

    def fun(xp):
        key = xp.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = pc.residual_jac(xp, V)
        return cache[key][0]

    def jac(xp):
        fun(xp)
        return cache[xp.tobytes()][1]

    m = 2 * V.size
    method = "lm" if m >= len(xp0) else "trf"
    res = least_squares(fun, xp0, jac=jac, method=method, xtol=LM_TOL, ftol=LM_TOL, gtol=LM_TOL,
                        max_nfev=MAX_EVALS)
    x = res.x[:-1]
    return phase_aligned_error(pc.matrix(x), V), x


def phase_aligned_error(U: np.ndarray, V: np.ndarray) -> float:
    """``min_phi ||e^{i phi} U - V||_F`` evaluated directly (no cancellation)."""
    return frobenius_norm(phase_align(U, V)[0] - V)


def instantiate_runs(template: AnsatzTemplate, V: np.ndarray, seed=0, restarts: int = DEFAULT_RESTARTS,
                     warm_starts=(), stop_below: float = EXACT_TOL) -> list[tuple[float, np.ndarray]]:
    """All optimizer runs for ``template``: warm starts first, then random starts.

    Stops early once a run reaches ``stop_below``.
    """
    V = check_unitary(V, tol=1e-8)
    if V.shape[0] != 1 << template.width:
        raise InputError(f"template width {template.width} does not match a {V.shape[0]}-dim target")
    pc = template.param_circuit()
    rng = np.random.default_rng(seed)
    starts = [np.asarray(w, dtype=float) for w in warm_starts]
    starts += [rng.uniform(-np.pi, np.pi, pc.num_params) for _ in range(restarts)]
    runs = []
    for x0 in starts:
        err, x = optimize_params(pc, V, x0)
        runs.append((err, x))
        if err <= stop_below:
            break
    return runs


def result_from_params(template: AnsatzTemplate, x: np.ndarray, V: np.ndarray,
                       profile: GateSetProfile = NISQ) -> SynthesisResult:
    return make_result(template.param_circuit().to_circuit(x), V, profile)


def instantiate(template: AnsatzTemplate, V, eps: float, seed=0,
                restarts: int = DEFAULT_RESTARTS) -> SynthesisResult | None:
    """Best multi-start instantiation of ``template``, or ``None`` if its error exceeds ``eps``."""
    V = np.asarray(V, dtype=complex)
    if num_qubits(V.shape[0]) != template.width:
        raise InputError("template width does not match the target dimension")
    runs = instantiate_runs(template, V, seed, restarts, stop_below=EXACT_TOL)
    _, x = min(runs, key=lambda r: r[0])
    result = result_from_params(template, x, V)
    if result.error > eps:
        return None
    return result
