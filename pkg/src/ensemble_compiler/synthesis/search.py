"""Template search over CNOT skeletons with resource-ordered termination.

Templates are enumerated level by level in nondecreasing CNOT count.  Small
levels are enumerated exhaustively (up to commutation of CNOTs on disjoint
pairs); once a level would exceed ``exhaustive_limit`` templates, only the
children of the ``beam`` best templates of the previous level are expanded,
each warm-started from its parent's optimum.  The search stops when the next
level would reach the block's original CNOT count, or after a level that
produced an exact solution (deeper templates cannot lower the error).

The search itself does not depend on ``eps``: it records every optimizer run
and :func:`synthesize_block` keeps the runs within ``eps``.  Searches are
cached per target so several ``eps`` values share one search.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from ..circuit import Circuit, GateKind, GateSetProfile, NISQ, ProfileName, u3_matrix, u3_params
from ..errors import InputError
from ..linalg import check_unitary, frobenius_norm, num_qubits
from .instantiate import (
    DEFAULT_RESTARTS,
    EXACT_TOL,
    AnsatzTemplate,
    SynthesisResult,
    instantiate_runs,
    optimize_params,
    result_from_params,
)
from ..qasm import emit_qasm

log = logging.getLogger(__name__)

DEFAULT_BEAM = 1
DEFAULT_BEAM_RESTARTS = 1
EXHAUSTIVE_LIMIT = 24
MAX_PER_TEMPLATE = 2
# distinct runs of one template closer than this are the same circuit
DISTINCT_TOL = 1e-6
DELETION_CANDIDATES = 2
SADDLE_KICK = 0.05
# the deletion path stops once its best error exceeds any admissible eps
DELETION_STOP_ERROR = 1.0


def canonical_layout(layout) -> tuple[tuple[int, int], ...]:
    """Lexicographically smallest ordering equivalent under commuting disjoint CNOTs."""
    layout = [tuple(p) for p in layout]
    m = len(layout)
    preds = [set() for _ in range(m)]
    for j in range(m):
        for i in range(j):
            if set(layout[i]) & set(layout[j]):
                preds[j].add(i)
    done: set[int] = set()
    out = []
    while len(out) < m:
        ready = [j for j in range(m) if j not in done and preds[j] <= done]
        j = min(ready, key=lambda k: (layout[k], k))
        done.add(j)
        out.append(layout[j])
    return tuple(out)


def coupling_pairs(width: int) -> list[tuple[int, int]]:
    """All unordered qubit pairs; U3 slots make CNOT orientation immaterial."""
    return list(itertools.combinations(range(width), 2))


@dataclass
class SearchRecord:
    template: AnsatzTemplate
    error: float
    params: np.ndarray


@dataclass
class SearchOutcome:
    records: list[SearchRecord]
    exact_found: bool
    levels: int


_CACHE: dict[tuple, SearchOutcome] = {}


def _key(V: np.ndarray, *settings) -> tuple:
    digest = hashlib.sha256(np.ascontiguousarray(np.round(V, 12)).tobytes()).hexdigest()
    return (digest, V.shape[0]) + settings


def clear_cache() -> None:
    _CACHE.clear()


def template_from_circuit(c: Circuit) -> tuple[AnsatzTemplate, np.ndarray]:
    """Template with the CNOT skeleton of ``c`` and parameters reproducing it up to phase."""
    n = c.width
    layout = [g.qubits for g in c.gates if g.kind is GateKind.CNOT]
    template = AnsatzTemplate(n, tuple(layout))
    x = np.zeros(template.num_params)
    slot = list(range(n))
    pending = [np.eye(2, dtype=complex) for _ in range(n)]

    def flush(q):
        x[3 * slot[q] : 3 * slot[q] + 3] = u3_params(pending[q])[:3]
        pending[q] = np.eye(2, dtype=complex)

    j = 0
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            for k, q in enumerate(g.qubits):
                flush(q)
                slot[q] = n + 2 * j + k
            j += 1
        elif g.kind.num_qubits == 1:
            q = g.qubits[0]
            pending[q] = g.matrix() @ pending[q]
        else:  # pragma: no cover - only CNOT is a two-qubit gate
            raise InputError(f"unsupported gate {g.kind.value} in skeleton")
    for q in range(n):
        flush(q)
    return template, x


def remove_cnot(template: AnsatzTemplate, x: np.ndarray, j: int) -> tuple[AnsatzTemplate, np.ndarray]:
    """Drop CNOT ``j``, folding its two trailing U3 slots into the preceding slots."""
    n = template.width
    slot = list(range(n))
    prev = None
    for i, (c, t) in enumerate(template.cnot_layout):
        if i == j:
            prev = (slot[c], slot[t])
            break
        slot[c], slot[t] = n + 2 * i, n + 2 * i + 1
    x = np.array(x, dtype=float)
    for k, p in enumerate(prev):
        s_new = n + 2 * j + k
        merged = u3_matrix(*x[3 * s_new : 3 * s_new + 3]) @ u3_matrix(*x[3 * p : 3 * p + 3])
        x[3 * p : 3 * p + 3] = u3_params(merged)[:3]
    keep = np.ones(len(x), dtype=bool)
    keep[3 * (n + 2 * j) : 3 * (n + 2 * j + 2)] = False
    layout = template.cnot_layout[:j] + template.cnot_layout[j + 1 :]
    return AnsatzTemplate(n, layout), x[keep]


def _record_runs(records: list, t: AnsatzTemplate, runs) -> SearchRecord:
    runs = sorted(runs, key=lambda r: r[0])
    kept: list[SearchRecord] = []
    for err, x in runs:
        rec = SearchRecord(t, err, x)
        if all(_distinct(rec, k) for k in kept):
            kept.append(rec)
        if len(kept) >= MAX_PER_TEMPLATE:
            break
    records.extend(kept)
    return kept[0]


def _bottom_up(V, n, max_cnots, ss, restarts, beam, beam_restarts, exhaustive_limit, exhaustive_only,
               records) -> tuple[bool, int]:
    pairs = coupling_pairs(n)
    level_nodes: list[SearchRecord] = []
    exact = False
    level = 0
    for level in range(max_cnots + 1):
        full = len(pairs) ** level <= exhaustive_limit
        if not full and exhaustive_only:
            return exact, level - 1
        if level == 0:
            children = [(AnsatzTemplate(n), None)]
        else:
            parents = level_nodes if full else sorted(level_nodes, key=lambda r: r.error)[:beam]
            seen = set()
            children = []
            for parent in parents:
                for p in pairs:
                    t = parent.template.extend(p)
                    canon = canonical_layout(t.cnot_layout)
                    if canon not in seen:
                        seen.add(canon)
                        children.append((t, parent))
        level_nodes = []
        for t, parent in children:
            # new U3 slots start at the identity
            warm = [] if parent is None else [np.concatenate([parent.params, np.zeros(6)])]
            runs = instantiate_runs(t, V, ss.spawn(1)[0], restarts if full else beam_restarts,
                                    warm_starts=warm, stop_below=EXACT_TOL)
            best = _record_runs(records, t, runs)
            level_nodes.append(best)
            exact = exact or best.error <= EXACT_TOL
        log.debug("level %d: best error %.3e", level, min(r.error for r in level_nodes))
        if exact:
            break
    return exact, level


def _deletion_candidates(template: AnsatzTemplate, x: np.ndarray):
    """Single CNOT deletions and deletions of same-pair CNOT neighbours."""
    layout = template.cnot_layout
    out = [((j,), *remove_cnot(template, x, j)) for j in range(len(layout))]
    for j, (c, t) in enumerate(layout):
        for i in range(j + 1, len(layout)):
            if set(layout[i]) & {c, t}:
                if set(layout[i]) == {c, t}:
                    t1, x1 = remove_cnot(template, x, i)
                    out.append(((j, i), *remove_cnot(t1, x1, j)))
                break
    return out


def _top_down(V, skeleton: Circuit, candidates: int, stop_error: float, records, rng) -> int:
    """Greedy CNOT deletion starting from the block's own skeleton.

    Each step scores every single and paired deletion by its error before
    re-optimization, then re-optimizes the best ``candidates`` pair deletions
    and the best single deletion.  Single deletions from a CNOT-phase-CNOT
    pattern sit on a saddle, so their warm start gets a small perturbation.
    """
    template, x = template_from_circuit(skeleton)
    err, x = optimize_params(template.param_circuit(), V, x)
    steps = 0
    while template.cnot_count > 0:
        seen = set()
        singles, pairs = [], []
        for removed, t, xj in _deletion_candidates(template, x):
            canon = canonical_layout(t.cnot_layout)
            if canon in seen:
                continue
            seen.add(canon)
            f0, _ = t.param_circuit().cost_grad(xj, V)
            (singles if len(removed) == 1 else pairs).append((f0, removed, t, xj))
        singles.sort(key=lambda s: (s[0], s[1]))
        pairs.sort(key=lambda s: (s[0], s[1]))
        best = None
        for f0, removed, t, xj in pairs[:candidates] + singles[:1]:
            if len(removed) == 1:
                xj = xj + rng.normal(0.0, SADDLE_KICK, len(xj))
            e, xo = optimize_params(t.param_circuit(), V, xj)
            rec = _record_runs(records, t, [(e, xo)])
            if best is None or rec.error < best.error:
                best = rec
        steps += 1
        log.debug("deletion to %d CNOTs: best error %.3e", best.template.cnot_count, best.error)
        if best.error > stop_error:
            break
        template, x = best.template, best.params
    return steps


def search_templates(V: np.ndarray, max_cnots: int, seed: int = 0, restarts: int = DEFAULT_RESTARTS,
                     beam: int = DEFAULT_BEAM, beam_restarts: int = DEFAULT_BEAM_RESTARTS,
                     exhaustive_limit: int = EXHAUSTIVE_LIMIT, skeleton: Circuit | None = None,
                     deletion_candidates: int = DELETION_CANDIDATES,
                     stop_error: float = DELETION_STOP_ERROR) -> SearchOutcome:
    """Run (or fetch from cache) the template search up to ``max_cnots`` CNOTs.

    Without a skeleton the bottom-up search runs to ``max_cnots``.  With one,
    bottom-up covers only the exhaustive levels and the deletion path from
    the skeleton covers the rest.
    """
    V = check_unitary(V, tol=1e-8)
    skel_key = None if skeleton is None else emit_qasm(skeleton)
    key = _key(V, max_cnots, seed, restarts, beam, beam_restarts, exhaustive_limit, skel_key,
               deletion_candidates, stop_error)
    if key in _CACHE:
        return _CACHE[key]
    n = num_qubits(V.shape[0])
    if skeleton is not None and skeleton.width != n:
        raise InputError("skeleton width does not match the target")
    ss = np.random.SeedSequence(seed)
    records: list[SearchRecord] = []
    exact, level = _bottom_up(V, n, max_cnots, ss, restarts, beam, beam_restarts, exhaustive_limit,
                              skeleton is not None, records)
    if skeleton is not None and not exact:
        _top_down(V, skeleton, deletion_candidates, stop_error, records, np.random.default_rng(ss.spawn(1)[0]))
    records = [r for r in records if r.template.cnot_count <= max_cnots]
    outcome = SearchOutcome(records, exact or any(r.error <= EXACT_TOL for r in records), level)
    _CACHE[key] = outcome
    return outcome


def _distinct(a: SearchRecord, b: SearchRecord) -> bool:
    if abs(a.error - b.error) > DISTINCT_TOL:
        return True
    pc = a.template.param_circuit()
    return frobenius_norm(pc.matrix(a.params) - pc.matrix(b.params)) > DISTINCT_TOL


def synthesize_block(V, profile: GateSetProfile = NISQ, eps: float = 0.1, original_expensive: int = 0,
                     seed: int = 0, restarts: int = DEFAULT_RESTARTS, beam: int = DEFAULT_BEAM,
                     beam_restarts: int = DEFAULT_BEAM_RESTARTS,
                     max_results: int | None = None,
                     skeleton: Circuit | None = None) -> list[SynthesisResult]:
    """Circuits within ``eps`` of ``V`` using fewer CNOTs than ``original_expensive``.

    Results are sorted by (expensive count, error); every error is recomputed
    from the emitted circuit.  Only the NISQ profile uses template search.
    """
    if profile.name is not ProfileName.NISQ:
        raise InputError("template search targets the NISQ gate set; use ntro_pass for FT blocks")
    V = check_unitary(V, tol=1e-8)
    if original_expensive < 0:
        raise InputError("original expensive count must be nonnegative")
    # templates stop one CNOT short of the original circuit, except that a
    # CNOT-free target still gets the zero-CNOT template
    max_cnots = max(original_expensive - 1, 0)
    outcome = search_templates(V, max_cnots, seed, restarts, beam, beam_restarts, skeleton=skeleton)
    results: list[SynthesisResult] = []
    for rec in sorted(outcome.records, key=lambda r: (r.template.cnot_count, r.error)):
        if rec.error > eps + 1e-9:
            continue
        res = result_from_params(rec.template, rec.params, V, profile)
        if res.error <= eps and (res.expensive_count < original_expensive or original_expensive == 0):
            results.append(res)
    results.sort(key=lambda r: (r.expensive_count, r.error))
    if max_results is not None:
        results = results[:max_results]
    return results
