"""Diversification of synthesized circuits.

NISQ members are spread by perturbing every U3 with ``exp(i(aX + bY + cZ))``
for a sign-symmetric set of directions, spending the slack ``eps - e_i``.
FT members are spread by choosing among alternative Clifford+T words for
each RZ, with words on both sides of the target angle.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .circuit import FT, NISQ, U3, Circuit, Gate, GateKind, is_clifford_angle, rz_matrix, u3_matrix, u3_params
from .errors import InputError
from .linalg import check_unitary
from .synthesis.clifford_t import (
    DEFAULT_T_CAP, CliffordTWord, make_word, rz_to_clifford_t, word_circuit, word_matrix,
)
from .synthesis.instantiate import SynthesisResult, make_result

log = logging.getLogger(__name__)

DEFAULT_COUNT = 8
VARIANT_CAP = 64
# slack on the recomputed member bound, absorbing float noise at e_i = eps
BOUND_SLACK = 1e-9
STRADDLE_DOUBLINGS = 3
# random variant draws per requested member before giving up
MAX_ATTEMPTS_PER_VARIANT = 16

_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def rewrite_su2_as_u3(M) -> tuple[float, float, float, float]:
    """``(theta, phi, lam, alpha)`` with ``e^{i alpha} U3(theta, phi, lam) = M``."""
    M = np.asarray(M, dtype=complex)
    if M.shape != (2, 2):
        raise InputError(f"expected a 2x2 matrix, got shape {M.shape}")
    check_unitary(M, tol=1e-9)
    return u3_params(M)


def pauli_exp(abc) -> np.ndarray:
    """``exp(i(aX + bY + cZ))``."""
    abc = np.asarray(abc, dtype=float)
    r = float(np.linalg.norm(abc))
    if r == 0:
        return np.eye(2, dtype=complex)
    P = np.tensordot(abc / r, _PAULI, axes=1)
    return math.cos(r) * np.eye(2) + 1j * math.sin(r) * P


@dataclass(frozen=True)
class PerturbationSpec:
    per_gate_budget: float
    directions: np.ndarray  # (count, 3), each row of norm per_gate_budget

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "directions", d)
        if self.per_gate_budget < 0:
            raise InputError("per-gate budget must be nonnegative")
        if len(d) % 2:
            raise InputError("direction count must be even")
        if not np.allclose(np.linalg.norm(d, axis=1), self.per_gate_budget, atol=1e-12):
            raise InputError("every direction must have norm equal to the per-gate budget")
        if not self.is_negation_closed():
            raise InputError("directions must be closed under negation")

    @property
    def count(self) -> int:
        return len(self.directions)

    def is_negation_closed(self, tol: float = 1e-12) -> bool:
        d = self.directions
        used = np.zeros(len(d), dtype=bool)
        for i in range(len(d)):
            if used[i]:
                continue
            used[i] = True
            match = np.flatnonzero(~used & np.all(np.abs(d + d[i]) <= tol, axis=1))
            if not len(match):
                return False
            used[match[0]] = True
        return True

    @classmethod
    def sample(cls, per_gate_budget: float, count: int, rng: np.random.Generator) -> "PerturbationSpec":
        """``count/2`` uniform directions on the sphere and their negations."""
        if count < 2 or count % 2:
            raise InputError(f"count must be a positive even integer, got {count}")
        g = rng.standard_normal((count // 2, 3))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        half = per_gate_budget * g
        return cls(per_gate_budget, np.concatenate([half, -half]))

    @classmethod
    def from_directions(cls, per_gate_budget: float, unit_dirs) -> "PerturbationSpec":
        u = np.asarray(unit_dirs, dtype=float).reshape(-1, 3)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        half = per_gate_budget * u
        return cls(per_gate_budget, np.concatenate([half, -half]))


def perturb_circuit(c: Circuit, abc) -> Circuit:
    """Post-multiply every U3 by ``exp(i(aX + bY + cZ))`` and rewrite as U3."""
    E = pauli_exp(abc)
    gates, phase = [], c.global_phase
    for g in c.gates:
        if g.kind is GateKind.U3:
            theta, phi, lam, alpha = u3_params(u3_matrix(*g.params) @ E)
            gates.append(U3(g.qubits[0], theta, phi, lam))
            phase += alpha
        else:
            gates.append(g)
    return Circuit(c.width, gates, math.remainder(phase, 2 * math.pi))


def diversify_nisq(result: SynthesisResult, V, eps: float, count: int = DEFAULT_COUNT, seed=0,
                   spec: PerturbationSpec | None = None) -> list[SynthesisResult]:
    """Perturbed copies of ``result`` whose recomputed errors stay within ``eps``.

    The per-gate budget is ``(eps - e_i) / N_u``.  Pass ``spec`` to fix the
    directions instead of sampling ``count`` of them.
    """
    V = np.asarray(V, dtype=complex)
    n_u = sum(1 for g in result.circuit.gates if g.kind is GateKind.U3)
    if n_u == 0:
        return [result]
    if result.error > eps + BOUND_SLACK:
        raise InputError(f"member error {result.error:.3g} exceeds eps {eps:.3g}")
    budget = max(eps - result.error, 0.0) / n_u
    if spec is None:
        spec = PerturbationSpec.sample(budget, count, np.random.default_rng(seed))
    out, dropped = [], 0
    for abc in spec.directions:
        member = make_result(perturb_circuit(result.circuit, abc), V, NISQ)
        if member.error <= eps + BOUND_SLACK:
            out.append(member)
        else:
            dropped += 1
    if dropped:
        log.warning("discarded %d of %d perturbed members above eps %.3g", dropped, spec.count, eps)
    return out


# --- FT --------------------------------------------------------------------


@functools.lru_cache(maxsize=4096)
def cached_words(theta: float, eps_rz: float, t_cap: int = DEFAULT_T_CAP) -> tuple[CliffordTWord, ...]:
    return tuple(rz_to_clifford_t(theta, eps_rz, t_cap))


def angle_error(word: CliffordTWord, theta: float) -> float:
    """Signed Z-rotation angle of ``RZ(theta)^dagger W`` (phase removed)."""
    M = rz_matrix(theta).conj().T @ word_matrix(word.word)
    M = M / np.sqrt(np.linalg.det(M))
    if M[0, 0].real + M[1, 1].real < 0:
        M = -M
    # M ~ exp(-i(phi/2) Z) to first order, so the Z part is -2 Im M00
    return float(-2 * M[0, 0].imag)


def rz_word_pool(theta: float, eps_rz: float, t_cap: int = DEFAULT_T_CAP) -> list[CliffordTWord]:
    """Words within ``eps_rz`` of ``RZ(theta)``, extended with offset targets until they straddle."""
    pool = {w.word: w for w in cached_words(theta, eps_rz, t_cap)}
    delta = eps_rz / 2
    for _ in range(STRADDLE_DOUBLINGS + 1):
        for target in (theta + delta, theta - delta):
            for w in cached_words(target, eps_rz, t_cap):
                if w.word not in pool:
                    rebased = make_word(w.word, theta)
                    if rebased.error <= eps_rz:
                        pool[w.word] = rebased
        signs = {np.sign(angle_error(w, theta)) for w in pool.values()}
        if (1.0 in signs and -1.0 in signs) or any(w.error < 1e-12 for w in pool.values()):
            break
        delta *= 2
    return sorted(pool.values(), key=lambda w: (w.t_count, w.error, w.word))


def _substitute(c: Circuit, positions: list[int], words: list[CliffordTWord]) -> Circuit:
    gates: list[Gate] = []
    phase = c.global_phase
    chosen = dict(zip(positions, words))
    for i, g in enumerate(c.gates):
        if i in chosen:
            wc = word_circuit(chosen[i].word, g.qubits[0], c.width, chosen[i].circuit.global_phase)
            gates.extend(wc.gates)
            phase += wc.global_phase
        else:
            gates.append(g)
    return Circuit(c.width, gates, math.remainder(phase, 2 * math.pi))


def diversify_ft(result: SynthesisResult, V, eps: float, eps_rz: float, t_cap: int = DEFAULT_T_CAP,
                 seed=0, cap: int = VARIANT_CAP) -> list[SynthesisResult]:
    """Clifford+T variants of a Clifford+RZ ``result`` within ``eps`` of ``V``.

    Returns an empty list when some RZ has no word within ``eps_rz``; the
    caller then treats the block as not diversifiable.
    """
    V = np.asarray(V, dtype=complex)
    if not any(g.kind is GateKind.RZ for g in result.circuit.gates):
        raise InputError("diversify_ft needs a circuit with RZ gates")
    positions = [i for i, g in enumerate(result.circuit.gates)
                 if g.kind is GateKind.RZ and not is_clifford_angle(g.params[0])]
    if not positions:
        return [result]
    pools = []
    for i in positions:
        pool = rz_word_pool(result.circuit.gates[i].params[0], eps_rz, t_cap)
        if not pool:
            log.info("no Clifford+T word within %.3g for rotation %d", eps_rz, i)
            return []
        pools.append(pool)
    rng = np.random.default_rng(seed)
    pick = tuple(0 for _ in pools)  # the lowest-cost word for every rotation comes first
    seen = {pick}
    out, dropped = [], 0
    for attempt in range(MAX_ATTEMPTS_PER_VARIANT * cap):
        if attempt:
            pick = tuple(int(rng.integers(len(p))) for p in pools)
            if pick in seen:
                continue
            seen.add(pick)
        c = _substitute(result.circuit, positions, [p[k] for p, k in zip(pools, pick)])
        member = make_result(c, V, FT)
        if member.error <= eps + BOUND_SLACK:
            out.append(member)
            if len(out) >= cap:
                break
        else:
            dropped += 1
    if dropped:
        log.info("discarded %d Clifford+T variants above eps %.3g", dropped, eps)
    return out
