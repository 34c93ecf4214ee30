"""Ensemble channels, sampling and output-error metrics.

A :class:`CircuitDistribution` is a product of per-block weighted ensembles.
Exact channel evaluation works on density matrices (up to
:data:`MAX_CHANNEL_WIDTH` qubits); sampled channels propagate pure states.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, MAX_UNITARY_WIDTH
from .ensemble import WeightedEnsemble
from .errors import CapacityError, InputError
from .linalg import apply_local, choi_of_unitary, haar_state, operator_norm, trace_norm

MAX_CHANNEL_WIDTH = 8
DEFAULT_TRIALS = 10
DEFAULT_DELTA = 0.05


@dataclass(frozen=True)
class BlockEnsemble:
    qubit_map: tuple[int, ...]
    ensemble: WeightedEnsemble
    block_id: int = 0


@dataclass(frozen=True)
class CircuitDistribution:
    width: int
    blocks: tuple[BlockEnsemble, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        for b in self.blocks:
            w = b.ensemble.weights
            if np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
                raise InputError(f"block {b.block_id} weights are not a probability vector")
            if max(b.qubit_map) >= self.width:
                raise InputError(f"block {b.block_id} acts outside width {self.width}")

    @property
    def K(self) -> int:
        return len(self.blocks)

    def ideal_unitary(self) -> np.ndarray:
        """Product of the block targets, embedded on the full register."""
        _check_width(self.width, MAX_UNITARY_WIDTH)
        M = np.eye(1 << self.width, dtype=complex)
        for b in self.blocks:
            M = apply_local(b.ensemble.target, b.qubit_map, M, self.width)
        return M

    def expected_cost(self) -> float:
        return float(sum(b.ensemble.expected_cost for b in self.blocks))


def _check_width(width: int, cap: int) -> None:
    if width > cap:
        raise CapacityError(f"width {width} exceeds the cap of {cap} qubits")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _conjugate(U: np.ndarray, qubits, rho: np.ndarray, n: int) -> np.ndarray:
    """``U rho U^dagger`` for Hermitian ``rho`` with ``U`` acting on ``qubits``."""
    A = apply_local(U, qubits, rho, n)  # U rho
    return apply_local(U, qubits, A.conj().T, n)  # U (U rho)^dagger


def apply_ensemble_channel(dist: CircuitDistribution, rho) -> np.ndarray:
    _check_width(dist.width, MAX_CHANNEL_WIDTH)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (1 << dist.width,) * 2:
        raise InputError(f"density matrix shape {rho.shape} does not match width {dist.width}")
    for b in dist.blocks:
        out = np.zeros_like(rho)
        for m in b.ensemble.members:
            out += m.weight * _conjugate(m.unitary, b.qubit_map, rho, dist.width)
        rho = 0.5 * (out + out.conj().T)
    return rho


def ideal_output(dist: CircuitDistribution, rho) -> np.ndarray:
    V = dist.ideal_unitary()
    rho = np.asarray(rho, dtype=complex)
    return V @ rho @ V.conj().T


def sample_indices(dist: CircuitDistribution, size: int, rng) -> np.ndarray:
    """Member indices, shape ``(size, K)``, drawn independently per block."""
    rng = _rng(rng)
    out = np.empty((size, dist.K), dtype=np.int64)
    for k, b in enumerate(dist.blocks):
        w = b.ensemble.weights
        out[:, k] = rng.choice(len(w), size=size, p=w / w.sum())
    return out


def sample_circuit(dist: CircuitDistribution, seed=0) -> Circuit:
    """One circuit drawn from the product distribution."""
    idx = sample_indices(dist, 1, seed)[0]
    c = Circuit(dist.width)
    for b, i in zip(dist.blocks, idx):
        c = c.compose(b.ensemble.members[i].circuit.remap(b.qubit_map, dist.width))
    return c


def _propagate(dist: CircuitDistribution, states: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Apply sampled circuits to pure states.

    ``states`` is ``(dim, S)``; ``idx`` is ``(T, K)``.  Returns ``(T, dim, S)``.
    """
    T = len(idx)
    dim, S = states.shape
    psi = np.broadcast_to(states, (T, dim, S)).transpose(1, 0, 2).reshape(dim, T * S).copy()
    for k, b in enumerate(dist.blocks):
        cols = np.repeat(idx[:, k], S)
        for i in np.unique(cols):
            sel = cols == i
            psi[:, sel] = apply_local(b.ensemble.members[i].unitary, b.qubit_map, psi[:, sel], dist.width)
    return psi.reshape(dim, T, S).transpose(1, 0, 2)


def empirical_channel(dist: CircuitDistribution, T: int, rho, seed=0) -> np.ndarray:
    """Average of ``T`` sampled circuit conjugations of ``rho``."""
    if T < 1:
        raise InputError("T must be at least 1")
    _check_width(dist.width, MAX_UNITARY_WIDTH)
    rho = np.asarray(rho, dtype=complex)
    # conjugating rho equals propagating its eigenvectors
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    keep = evals > 1e-15
    vecs = evecs[:, keep] * np.sqrt(evals[keep])
    idx = sample_indices(dist, T, seed)
    psi = _propagate(dist, vecs, idx)  # (T, dim, r)
    out = np.einsum("tir,tjr->ij", psi, psi.conj()) / T
    return 0.5 * (out + out.conj().T)


def observable_error(dist: CircuitDistribution, O, psi0=None) -> float:
    """``|<O>_ideal - <O>_ens|`` for the initial state ``psi0`` (default ``|0...0>``)."""
    dim = 1 << dist.width
    O = np.asarray(O, dtype=complex)
    if O.ndim == 1:
        O = np.diag(O)
    if O.shape != (dim, dim):
        raise InputError(f"observable shape {O.shape} does not match width {dist.width}")
    if psi0 is None:
        psi0 = np.zeros(dim, dtype=complex)
        psi0[0] = 1
    rho0 = np.outer(psi0, np.conj(psi0))
    ens = np.real(np.trace(O @ apply_ensemble_channel(dist, rho0)))
    ideal = np.real(np.trace(O @ ideal_output(dist, rho0)))
    return float(abs(ideal - ens))


def zz_chain(n: int) -> np.ndarray:
    """Diagonal of ``sum_i Z_i Z_{i+1}`` on an open chain of ``n`` qubits."""
    idx = np.arange(1 << n)
    z = 1 - 2 * ((idx[:, None] >> np.arange(n)) & 1)
    return np.sum(z[:, :-1] * z[:, 1:], axis=1).astype(float)


def trace_distance(rho, sigma) -> float:
    return 0.5 * trace_norm(np.asarray(rho) - np.asarray(sigma))


def random_inputs(width: int, count: int, seed=0) -> list[np.ndarray]:
    rng = _rng(seed)
    return [haar_state(1 << width, rng) for _ in range(count)]


def max_trace_distance(dist: CircuitDistribution, trials: int = DEFAULT_TRIALS, seed=0,
                       extra_states=()) -> float:
    """Largest output trace distance between the ensemble and ideal channels over Haar inputs."""
    if trials < 1:
        raise InputError("trials must be at least 1")
    states = list(extra_states) + random_inputs(dist.width, trials, seed)
    worst = 0.0
    for psi in states:
        rho = np.outer(psi, np.conj(psi))
        worst = max(worst, trace_distance(apply_ensemble_channel(dist, rho), ideal_output(dist, rho)))
    return worst


@dataclass(frozen=True)
class Lemma3Stats:
    v: float
    R: float
    dim: int  # dimension d of the unitaries

    def t_bound(self, eps: float, delta: float = DEFAULT_DELTA) -> int:
        """Sufficient sample count, natural log, at least 1."""
        if not (0 < eps < 1 and 0 < delta < 1):
            raise InputError("eps and delta must lie in (0, 1)")
        d2 = self.dim**2
        x = eps**2 / (2 * d2)
        T = (2 * self.v + (2 / 3) * self.R * x) / x**2 * math.log(2 * d2 / delta)
        return max(1, math.ceil(T))


def lemma3_quantities(ens: WeightedEnsemble) -> Lemma3Stats:
    """Variance ``v = ||sum p_i (J_i - J_U)^2||`` and deviation ``R = max ||J_i - J_U||`` of Choi matrices."""
    if not ens.members:
        raise InputError("ensemble is empty")
    Js = [choi_of_unitary(m.unitary) for m in ens.members]
    p = ens.weights
    J_U = sum(w * J for w, J in zip(p, Js))
    v_mat = np.zeros_like(J_U)
    R = 0.0
    for w, J in zip(p, Js):
        D = J - J_U
        v_mat += w * (D @ D)
        R = max(R, operator_norm(D))
    return Lemma3Stats(operator_norm(v_mat), R, ens.target.shape[0])


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[tuple[float, int, float, float, float], ...]  # (eps, T, mean, lo, hi)
    crossings: dict  # eps -> first T with mean <= eps^2, or None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "T", "mean", "lo", "hi"])
        for eps, T, mean, lo, hi in self.rows:
            w.writerow([f"{eps:.6g}", T, f"{mean:.6e}", f"{lo:.6e}", f"{hi:.6e}"])
        return buf.getvalue()


def convergence_study(dists: dict, T_grid, trials: int = DEFAULT_TRIALS, seed=0,
                      n_inputs: int = DEFAULT_TRIALS, reference: str = "ideal") -> ConvergenceTable:
    """Empirical-channel error against ``T`` for each ``eps -> distribution``.

    For each trial a fresh sample sequence is drawn and its prefixes give the
    empirical channels for every ``T``; the error of a trial is the largest
    output trace distance over ``n_inputs`` fixed Haar inputs.  ``reference``
    selects the comparison channel, ``"ideal"`` or ``"ensemble"``.
    """
    if reference not in ("ideal", "ensemble"):
        raise InputError("reference must be 'ideal' or 'ensemble'")
    T_grid = sorted(int(t) for t in T_grid)
    if not T_grid or T_grid[0] < 1:
        raise InputError("T_grid must contain positive integers")
    rng = np.random.default_rng(seed)
    rows, crossings = [], {}
    for eps in sorted(dists, reverse=True):
        dist = dists[eps]
        states = np.stack(random_inputs(dist.width, n_inputs, rng), axis=1)
        refs = []
        for s in states.T:
            rho = np.outer(s, s.conj())
            refs.append(ideal_output(dist, rho) if reference == "ideal" else apply_ensemble_channel(dist, rho))
        errs = np.empty((trials, len(T_grid)))
        for trial in range(trials):
            idx = sample_indices(dist, T_grid[-1], rng)
            psi = _propagate(dist, states, idx)  # (T, dim, S)
            for j, T in enumerate(T_grid):
                part = psi[:T]
                errs[trial, j] = max(
                    trace_distance(np.einsum("ti,tj->ij", part[:, :, s], part[:, :, s].conj()) / T, refs[s])
                    for s in range(n_inputs)
                )
        crossings[eps] = None
        for j, T in enumerate(T_grid):
            mean = float(errs[:, j].mean())
            rows.append((eps, T, mean, float(errs[:, j].min()), float(errs[:, j].max())))
            if crossings[eps] is None and mean <= eps**2:
                crossings[eps] = T
    return ConvergenceTable(tuple(rows), crossings)
