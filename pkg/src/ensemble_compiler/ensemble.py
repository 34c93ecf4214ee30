"""Optimal ensemble weights, quality metrics and block filtering.

For members ``U_i`` and target ``V`` the weighted ensemble error squared is
the simplex-constrained quadratic

    ||sum_i p_i U_i - V||_F^2 = 1/2 p^T H p + f^T p + c0,
    H_ij = 2 Re tr(U_i^dagger U_j),  f_i = -2 Re tr(U_i^dagger V),  c0 = tr(V^dagger V).

On the simplex this equals ``1/2 p^T G p`` with ``G_ij = 2 Re tr((U_i - V)^dagger
(U_j - V))``.  The solver works with ``G``, which avoids cancelling ``c0``
against terms of size ``d`` when the optimum is tiny.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, GateKind, unitary
from .errors import InputError, NumericalFailure
from .linalg import frobenius_norm

log = logging.getLogger(__name__)

QP_TOL = 1e-12
QP_MAX_ITER = 5000
DEDUP_TOL = 1e-9
PRUNE_WEIGHT = 1e-12
WARM_TOL = 1e-6


def rewee_constant(eps: float) -> float:
    """Filtering constant: 2 above eps = 1e-2, 20 at and below."""
    return 2.0 if eps > 1e-2 else 20.0


@dataclass(frozen=True)
class QPProblem:
    H: np.ndarray
    f: np.ndarray
    c0: float
    gram: np.ndarray = field(repr=False)  # 2 Re tr((U_i - V)^dagger (U_j - V))

    def __post_init__(self):
        if not np.allclose(self.H, self.H.T, atol=1e-10):
            raise InputError("H is not symmetric")

    @property
    def size(self) -> int:
        return len(self.f)

    def objective(self, p) -> float:
        p = np.asarray(p, dtype=float)
        return float(0.5 * p @ self.H @ p + self.f @ p + self.c0)

    def objective_gram(self, p) -> float:
        p = np.asarray(p, dtype=float)
        return float(0.5 * p @ self.gram @ p)


def _stack(members) -> np.ndarray:
    mats = [np.asarray(U, dtype=complex) for U in members]
    if not mats:
        raise InputError("no members")
    shape = mats[0].shape
    if any(M.shape != shape for M in mats):
        raise InputError("member dimensions differ")
    return np.stack(mats)


def build_qp(members, V) -> QPProblem:
    Us = _stack(members)
    V = np.asarray(V, dtype=complex)
    if V.shape != Us.shape[1:]:
        raise InputError(f"target shape {V.shape} does not match members {Us.shape[1:]}")
    flat = Us.reshape(len(Us), -1)
    H = 2 * np.real(flat.conj() @ flat.T)
    f = -2 * np.real(flat.conj() @ V.reshape(-1))
    D = flat - V.reshape(1, -1)
    G = 2 * np.real(D.conj() @ D.T)
    return QPProblem(0.5 * (H + H.T), f, float(np.real(np.vdot(V, V))), 0.5 * (G + G.T))


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = idx[u - css / idx > 0][-1]
    return np.maximum(v - css[rho - 1] / rho, 0.0)


def _fw_gap(G: np.ndarray, p: np.ndarray) -> float:
    g = G @ p
    return float(p @ g - g.min())


def _projected_gradient(G: np.ndarray, p0: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    L = max(float(np.linalg.eigvalsh(G)[-1]), 1e-300)
    p = y = p0
    t = 1.0
    obj = 0.5 * p @ G @ p
    for _ in range(max_iter):
        if _fw_gap(G, p) <= tol:
            break
        p_new = project_simplex(y - (G @ y) / L)
        obj_new = 0.5 * p_new @ G @ p_new
        if obj_new > obj:  # adaptive restart of the momentum
            if y is p:
                break  # a plain gradient step no longer decreases the objective
            t, y = 1.0, p
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = p_new + ((t - 1) / t_new) * (p_new - p)
        p, t, obj = p_new, t_new, obj_new
    return p


def _frank_wolfe(G: np.ndarray, p: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    for _ in range(max_iter):
        g = G @ p
        j = int(np.argmin(g))
        d = -p.copy()
        d[j] += 1.0
        gap = -float(g @ d)
        if gap <= tol:
            break
        curv = float(d @ G @ d)
        step = 1.0 if curv <= 0 else min(1.0, gap / curv)
        p = p + step * d
    return p


def _active_set(G: np.ndarray, p: np.ndarray, tol: float, max_iter: int = 200) -> np.ndarray:
    """Exact polish: solve the equality-constrained problem on the support, then fix signs."""
    M = len(p)
    support = set(np.flatnonzero(p > PRUNE_WEIGHT).tolist()) or {int(np.argmin(np.diag(G)))}
    p = p.copy()
    for _ in range(max_iter):
        S = sorted(support)
        k = len(S)
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = G[np.ix_(S, S)]
        K[:k, k] = -1.0
        K[k, :k] = 1.0
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        q = np.zeros(M)
        q[S] = sol[:k]
        if np.any(q[S] < 0):
            # move from p toward q until a support coordinate hits zero
            neg = [i for i in S if q[i] < 0]
            alpha = min(p[i] / (p[i] - q[i]) for i in neg)
            p = p + alpha * (q - p)
            p[np.abs(p) < 1e-15] = 0.0
            p = np.maximum(p, 0.0)
            p /= p.sum()
            support = {i for i in S if p[i] > 0} or {S[0]}
            continue
        p = q
        g = G @ p
        lam = float(np.mean(g[S]))
        outside = [i for i in range(M) if i not in support]
        if not outside:
            break
        j = min(outside, key=lambda i: g[i])
        if g[j] >= lam - tol:
            break
        support.add(j)
    return p


def solve_simplex_qp(qp: QPProblem, tol: float = QP_TOL, max_iter: int = QP_MAX_ITER) -> np.ndarray:
    """Minimize the QP over the probability simplex.

    Accelerated projected gradient, then an exact active-set polish; Frank-Wolfe
    takes over if the result is not certified.  Optimality is certified by
    the Frank-Wolfe gap ``p.g - min(g) <= tol`` with ``g = G p``.
    Raises :class:`NumericalFailure` carrying the best iterate otherwise.
    """
    M = qp.size
    if M == 1:
        return np.ones(1)
    G = qp.gram
    scale = max(float(np.abs(G).max()), 1e-300)
    Gs = G / scale  # scale-free tolerance on the normalized problem
    p0 = np.full(M, 1.0 / M)
    candidates = []
    # a coarse accelerated solve identifies the support; the polish is exact
    p = _projected_gradient(Gs, p0, max(tol, WARM_TOL), max_iter)
    candidates.append(p)
    p = _active_set(Gs, p, tol)
    candidates.append(p)
    if _fw_gap(Gs, p) > tol:
        candidates.append(_frank_wolfe(Gs, candidates[0], tol, max_iter))
    candidates = [project_simplex(c) if np.any(c < 0) or abs(c.sum() - 1) > 1e-12 else c for c in candidates]
    certified = [c for c in candidates if _fw_gap(Gs, c) <= tol]
    if certified:
        return min(certified, key=lambda c: 0.5 * c @ Gs @ c)
    best = min(candidates, key=lambda c: _fw_gap(Gs, c))
    if _fw_gap(Gs, best) > max(tol, 1e-10):
        raise NumericalFailure(f"simplex QP not converged (gap {_fw_gap(Gs, best):.3g})", best=best)
    return best


def kkt_residual(qp: QPProblem, p) -> float:
    """Largest KKT violation on the simplex, in gradient units of the original QP."""
    p = np.asarray(p, dtype=float)
    g = qp.H @ p + qp.f
    active = p > PRUNE_WEIGHT
    lam = float(np.mean(g[active]))
    res = np.abs(g[active] - lam).max(initial=0.0)
    res = max(res, float(np.max(lam - g[~active], initial=0.0)))
    return res


def weighted_ensemble_error(members, p, V) -> float:
    Us = _stack(members)
    p = np.asarray(p, dtype=float)
    if len(p) != len(Us):
        raise InputError("weight count does not match member count")
    return frobenius_norm(np.tensordot(p, Us, axes=1) - np.asarray(V, dtype=complex))


def bias_norm(members, V) -> float:
    Us = _stack(members)
    return frobenius_norm(Us.mean(axis=0) - np.asarray(V, dtype=complex))


def variance_estimate(members) -> float:
    Us = _stack(members)
    if len(Us) < 2:
        raise InputError("variance needs at least two members")
    D = Us - Us.mean(axis=0)
    return float(np.mean(np.sum(np.abs(D) ** 2, axis=(1, 2))))


def ensemble_size_bound(eps: float, eps_prime: float) -> int:
    if eps <= 0 or eps_prime < 0:
        raise InputError("eps must be positive and eps_prime nonnegative")
    return max(1, math.ceil(eps_prime / eps**4))


def dedupe(unitaries, tol: float = DEDUP_TOL) -> list[int]:
    """Indices of the first member of each group of near-identical unitaries."""
    keep: list[int] = []
    for i, U in enumerate(unitaries):
        if all(frobenius_norm(U - unitaries[j]) > tol for j in keep):
            keep.append(i)
    return keep


@dataclass(frozen=True)
class Member:
    circuit: Circuit
    unitary: np.ndarray = field(repr=False)
    weight: float
    expensive_count: float
    error: float = 0.0


@dataclass(frozen=True)
class WeightedEnsemble:
    target: np.ndarray = field(repr=False)
    members: tuple[Member, ...]
    eps: float
    wee: float
    bias: float
    accepted: bool
    pool_size: int = 1

    @property
    def gamma(self) -> float:
        return self.wee / self.eps**2

    @property
    def gamma_b(self) -> float:
        return self.bias / self.eps**2

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])

    @property
    def unitaries(self) -> list[np.ndarray]:
        return [m.unitary for m in self.members]

    @property
    def expected_cost(self) -> float:
        return float(sum(m.weight * m.expensive_count for m in self.members))

    @property
    def is_singleton(self) -> bool:
        return len(self.members) == 1


def optimize_ensemble(results, V, eps: float, tol: float = QP_TOL) -> WeightedEnsemble:
    """QP-weighted ensemble over synthesis results (objects with circuit, unitary, error, expensive_count)."""
    results = list(results)
    if not results:
        raise InputError("no members to weight")
    V = np.asarray(V, dtype=complex)
    keep = dedupe([r.unitary for r in results])
    pool = [results[i] for i in keep]
    Us = [r.unitary for r in pool]
    qp = build_qp(Us, V)
    try:
        p = solve_simplex_qp(qp, tol)
    except NumericalFailure as exc:
        log.warning("%s; using the best iterate", exc)
        p = exc.best
    p = np.where(p > PRUNE_WEIGHT, p, 0.0)
    p /= p.sum()
    members = tuple(
        Member(r.circuit, r.unitary, float(w), r.expensive_count, r.error) for r, w in zip(pool, p) if w > 0
    )
    wee = weighted_ensemble_error([m.unitary for m in members], [m.weight for m in members], V)
    return WeightedEnsemble(V, members, eps, wee, bias_norm(Us, V), wee <= rewee_constant(eps) * eps**2, len(pool))


def singleton(circuit: Circuit, unitary: np.ndarray, V, eps: float, cost: float) -> WeightedEnsemble:
    V = np.asarray(V, dtype=complex)
    err = frobenius_norm(unitary - V)
    return WeightedEnsemble(V, (Member(circuit, unitary, 1.0, cost, err),), eps, err, err, False, 1)


def filter_block(ens: WeightedEnsemble, original, eps: float, original_cost: float | None = None) -> WeightedEnsemble:
    """Keep ``ens`` if ``wee <= C(eps) eps^2``, else fall back to the original block circuit.

    ``original`` is a :class:`~ensemble_compiler.partition.Block` or a
    :class:`Circuit`; ``original_cost`` defaults to its expensive count in the
    ensemble's profile as measured by the caller (CNOTs if omitted).
    """
    if ens.wee <= rewee_constant(eps) * eps**2:
        return WeightedEnsemble(ens.target, ens.members, eps, ens.wee, ens.bias, True, ens.pool_size)
    circuit = getattr(original, "subcircuit", original)
    if original_cost is None:
        original_cost = sum(1 for g in circuit.gates if g.kind is GateKind.CNOT)
    U = unitary(circuit)
    # the original realizes the target exactly; align its phase to the stored target
    overlap = np.vdot(U, ens.target)
    if abs(overlap) > 0:
        phase = float(np.angle(overlap))
        circuit = circuit.with_phase(circuit.global_phase + phase)
        U = U * np.exp(1j * phase)
    return singleton(circuit, U, ens.target, eps, original_cost)
