"""End-to-end compilation: partition, synthesize, diversify, weight, filter, assemble.

Every block is processed independently and falls back to its original
circuit on any stage failure, so a compile run never aborts on one block.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .benchmarks import benchmark_circuit
from .channels import (
    BlockEnsemble, CircuitDistribution, MAX_CHANNEL_WIDTH, convergence_study, lemma3_quantities,
    max_trace_distance, observable_error, zz_chain,
)
from .circuit import (
    FT, NISQ, Circuit, GateKind, GateSetProfile, ProfileName, count_expensive, count_non_clifford_rz,
    is_clifford_angle, lower_to_clifford_rz, profile_by_name, unitary,
)
from .diversify import DEFAULT_COUNT, VARIANT_CAP, diversify_ft, diversify_nisq
from .ensemble import WeightedEnsemble, filter_block, optimize_ensemble, rewee_constant, singleton
from .errors import CompilerError, InputError
from .partition import Block, partition
from .qasm import emit_qasm, parse_qasm
from .synthesis.clifford_t import DEFAULT_T_CAP, min_t_count
from .synthesis.instantiate import DEFAULT_RESTARTS, make_result
from .synthesis.ntro import ft_error_budget, ntro_pass
from .synthesis.search import synthesize_block

log = logging.getLogger(__name__)

# share of eps given to RZ snapping in FT blocks; the rest goes to Clifford+T words
NTRO_SHARE = 0.5


@dataclass(frozen=True)
class CompileConfig:
    input_path: str | None = None
    benchmark: str | None = None  # "name:n:steps"
    profile: str = "nisq"
    eps: float = 0.1
    block_width: int = 4
    partitioner: str = "scan"
    diversify_count: int = DEFAULT_COUNT
    seed: int = 0
    out_dir: str | None = None
    restarts: int = DEFAULT_RESTARTS
    t_cap: int = DEFAULT_T_CAP
    variant_cap: int = VARIANT_CAP
    workers: int = 1
    outer_width: int = 8

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise InputError(f"eps must lie in (0, 1), got {self.eps}")
        if not 2 <= self.block_width <= 5:
            raise InputError(f"block width must lie in [2, 5], got {self.block_width}")
        if (self.input_path is None) == (self.benchmark is None):
            raise InputError("give exactly one of an input path or a benchmark spec")
        profile_by_name(self.profile)
        if self.diversify_count < 2 or self.diversify_count % 2:
            raise InputError("diversify count must be a positive even integer")


def parse_benchmark_spec(spec: str) -> tuple[str, int, int]:
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise InputError(f"benchmark spec must be name:n[:steps], got '{spec}'")
    try:
        n = int(parts[1])
        steps = int(parts[2]) if len(parts) == 3 else 1
    except ValueError as exc:
        raise InputError(f"bad benchmark spec '{spec}'") from exc
    name = {"qaoa": "qaoa_ring", "adder": "qft_adder"}.get(parts[0], parts[0])
    return name, n, steps


def load_circuit(cfg: CompileConfig) -> Circuit:
    if cfg.input_path is not None:
        with open(cfg.input_path) as fh:
            return parse_qasm(fh.read())
    name, n, steps = parse_benchmark_spec(cfg.benchmark)
    return benchmark_circuit(name, n, steps, cfg.seed)


def target_hash(V: np.ndarray) -> str:
    data = np.round(np.asarray(V, dtype=complex), 12).tobytes()
    return hashlib.sha256(data).hexdigest()[:16]


# --- per-block pipeline -------------------------------------------------------


@dataclass(frozen=True)
class BlockOutcome:
    block_id: int
    qubit_map: tuple[int, ...]
    ensemble: WeightedEnsemble
    original_cost: float
    pool_size: int
    status: str


def _interleave_pairs(members: list) -> list:
    """Reorder ``[d1..dk, -d1..-dk]`` outputs so sign pairs stay adjacent under truncation."""
    k = len(members) // 2
    if len(members) % 2:
        return members
    out = []
    for a, b in zip(members[:k], members[k:]):
        out += [a, b]
    return out


def _nisq_pool(block: Block, V: np.ndarray, cfg: CompileConfig, seed: int) -> list:
    original = count_expensive(block.subcircuit, NISQ)
    results = synthesize_block(V, NISQ, cfg.eps, original, seed=seed, restarts=cfg.restarts,
                               skeleton=block.subcircuit)
    pool = list(results[: cfg.variant_cap])
    perturbed = [
        _interleave_pairs(diversify_nisq(r, V, cfg.eps, cfg.diversify_count, seed=seed + 7919 * (i + 1)))
        for i, r in enumerate(pool)
    ]
    # round-robin over results, one sign pair at a time
    depth = max((len(p) for p in perturbed), default=0)
    for j in range(0, depth, 2):
        for p in perturbed:
            if len(pool) >= cfg.variant_cap:
                return pool
            pool += p[j : j + 2][: cfg.variant_cap - len(pool)]
    return pool


def _ft_pool(block: Block, V: np.ndarray, cfg: CompileConfig, seed: int) -> list:
    snapped = ntro_pass(block.subcircuit, V, NTRO_SHARE * cfg.eps)
    base = make_result(snapped, V, FT)
    n_z = count_non_clifford_rz(snapped)
    if n_z == 0:
        return [base]
    eps_rz = ft_error_budget(n_z, cfg.eps - base.error)
    return diversify_ft(base, V, cfg.eps, eps_rz, cfg.t_cap, seed=seed, cap=cfg.variant_cap)


def reference_rz_cost(c: Circuit, n_z_total: int, eps: float, t_cap: int = DEFAULT_T_CAP) -> tuple[int, bool]:
    """T-count of the reference: explicit T gates plus the best word per RZ at ``eps^2 / n_Z``.

    Returns ``(cost, certified)``; uncertified costs are lower bounds.
    """
    cost = count_expensive(c, FT)
    certified = True
    if n_z_total == 0:
        return cost, True
    budget = ft_error_budget(n_z_total, eps, reference=True)
    for g in c.gates:
        if g.kind is GateKind.RZ and not is_clifford_angle(g.params[0]):
            t, ok = min_t_count(g.params[0], budget, t_cap)
            cost += t
            certified &= ok
    return cost, certified


def process_block(block: Block, cfg: CompileConfig, original_cost: float) -> BlockOutcome:
    V = unitary(block.subcircuit)
    seed = cfg.seed * 100003 + block.block_id
    profile = profile_by_name(cfg.profile)
    try:
        if profile.name is ProfileName.NISQ:
            if count_expensive(block.subcircuit, NISQ) == 0:
                return _singleton_outcome(block, V, cfg, original_cost, "no expensive gates")
            pool = _nisq_pool(block, V, cfg, seed)
        else:
            if count_non_clifford_rz(block.subcircuit) == 0:
                return _singleton_outcome(block, V, cfg, original_cost, "no non-Clifford rotations")
            pool = _ft_pool(block, V, cfg, seed)
        if not pool:
            return _singleton_outcome(block, V, cfg, original_cost, "no approximations found")
        ens = optimize_ensemble(pool, V, cfg.eps)
        ens = filter_block(ens, block, cfg.eps, original_cost)
        return BlockOutcome(block.block_id, block.qubit_map, ens, original_cost, len(pool),
                            "accepted" if ens.accepted else "rejected")
    except CompilerError as exc:
        log.warning("block %d failed (%s); keeping the original", block.block_id, exc)
        return _singleton_outcome(block, V, cfg, original_cost, f"failed: {exc}")


def _singleton_outcome(block: Block, V, cfg: CompileConfig, cost: float, status: str) -> BlockOutcome:
    ens = singleton(block.subcircuit, V, V, cfg.eps, cost)
    return BlockOutcome(block.block_id, block.qubit_map, ens, cost, 1, status)


def _process_star(args):
    return process_block(*args)


# --- reports -------------------------------------------------------------------


@dataclass
class BlockReport:
    block_id: int
    qubits: list
    status: str
    accepted: bool
    pool_size: int
    members: int
    wee: float
    bias: float
    gamma: float
    gamma_b: float
    original_cost: float
    expected_cost: float
    v: float
    R: float
    t_bound: int


@dataclass
class ChannelReport:
    profile: str
    eps: float
    K: int
    reference_count: float
    reference_certified: bool
    expected_count: float
    percent_change: float
    sum_wee: float
    observable_error: float | None
    max_trace_distance: float | None
    bound: float  # K eps^2
    blocks: list = field(default_factory=list)

    @property
    def v_max(self) -> float:
        return max((b.v for b in self.blocks), default=0.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CompileResult:
    distribution: CircuitDistribution
    report: ChannelReport
    ensemble_json: str
    circuit: Circuit


def _ensemble_json(cfg: CompileConfig, outcomes: list[BlockOutcome], report: ChannelReport) -> str:
    blocks = []
    for o in outcomes:
        e = o.ensemble
        blocks.append({
            "block_id": o.block_id,
            "qubits": list(o.qubit_map),
            "target_hash": target_hash(e.target),
            "epsilon": cfg.eps,
            "members": [emit_qasm(m.circuit) for m in e.members],
            "weights": [float(m.weight) for m in e.members],
            "costs": [float(m.expensive_count) for m in e.members],
            "wee": e.wee,
            "bias": e.bias,
            "gamma": e.gamma,
            "gamma_b": e.gamma_b,
            "accepted": e.accepted,
        })
    doc = {
        "profile": cfg.profile,
        "epsilon": cfg.eps,
        "seed": cfg.seed,
        "width": max(max(b["qubits"]) for b in blocks) + 1 if blocks else 0,
        "expected_count": report.expected_count,
        "reference_count": report.reference_count,
        "blocks": blocks,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def compile_circuit(cfg: CompileConfig, circuit: Circuit | None = None) -> CompileResult:
    """Run the full pipeline on ``circuit`` (or the circuit named by ``cfg``)."""
    if circuit is None:
        circuit = load_circuit(cfg)
    profile = profile_by_name(cfg.profile)
    work = lower_to_clifford_rz(circuit) if profile.name is ProfileName.FT else circuit
    parts = partition(work, cfg.partitioner, cfg.block_width, cfg.outer_width)

    if profile.name is ProfileName.FT:
        n_z = count_non_clifford_rz(work)
        costs, certified = [], True
        for b in parts.blocks:
            cost, ok = reference_rz_cost(b.subcircuit, n_z, cfg.eps, cfg.t_cap)
            costs.append(cost)
            certified &= ok
    else:
        costs = [count_expensive(b.subcircuit, NISQ) for b in parts.blocks]
        certified = True
    reference = float(sum(costs))

    jobs = [(b, cfg, c) for b, c in zip(parts.blocks, costs)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_process_star, jobs))
    else:
        outcomes = [process_block(*job) for job in jobs]
    outcomes.sort(key=lambda o: o.block_id)

    dist = CircuitDistribution(
        work.width, tuple(BlockEnsemble(o.qubit_map, o.ensemble, o.block_id) for o in outcomes)
    )
    report = build_report(cfg, dist, outcomes, reference, certified)
    text = _ensemble_json(cfg, outcomes, report)
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "ensemble.json"), "w") as fh:
            fh.write(text)
        with open(os.path.join(cfg.out_dir, "report.json"), "w") as fh:
            fh.write(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    return CompileResult(dist, report, text, circuit)


def build_report(cfg: CompileConfig, dist: CircuitDistribution, outcomes: list[BlockOutcome],
                 reference: float, certified: bool) -> ChannelReport:
    blocks = []
    for o in outcomes:
        e = o.ensemble
        stats = lemma3_quantities(e)
        blocks.append(BlockReport(
            o.block_id, list(o.qubit_map), o.status, e.accepted, o.pool_size, len(e.members), e.wee,
            e.bias, e.gamma, e.gamma_b, o.original_cost, e.expected_cost, stats.v, stats.R,
            stats.t_bound(cfg.eps),
        ))
    expected = dist.expected_cost()
    obs = mtd = None
    if dist.width <= MAX_CHANNEL_WIDTH:
        obs = observable_error(dist, zz_chain(dist.width))
        mtd = max_trace_distance(dist, trials=10, seed=cfg.seed)
    change = 100.0 * (expected - reference) / reference if reference else 0.0
    return ChannelReport(cfg.profile, cfg.eps, dist.K, reference, certified, expected, change,
                         float(sum(o.ensemble.wee for o in outcomes)), obs, mtd, dist.K * cfg.eps**2, blocks)


# --- tables ------------------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{x:.6g}" if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def report_tables(benchmarks, eps2_grid, base: CompileConfig) -> str:
    """Rows ``(benchmark, eps2, reference, ensemble mean, percent change)``."""
    rows = []
    for spec in benchmarks:
        for eps2 in eps2_grid:
            cfg = replace(base, benchmark=spec, input_path=None, eps=math.sqrt(eps2), out_dir=None)
            r = compile_circuit(cfg).report
            rows.append((spec, float(eps2), r.reference_count, r.expected_count, r.percent_change))
    return _csv(["benchmark", "epsilon2", "reference", "ensemble_mean", "percent_change"], rows)


SCALING_HEADER = ["benchmark", "epsilon", "K", "bound", "filter_bound", "sum_wee", "observable_error",
                  "max_trace_distance"]


def report_scaling(benchmarks, eps_grid, base: CompileConfig) -> str:
    """Observable error and max trace distance next to the ``K eps^2`` line."""
    rows = []
    for spec in benchmarks:
        for eps in eps_grid:
            cfg = replace(base, benchmark=spec, input_path=None, eps=float(eps), out_dir=None)
            r = compile_circuit(cfg).report
            rows.append((spec, float(eps), r.K, r.K * eps**2, r.K * rewee_constant(eps) * eps**2, r.sum_wee,
                         r.observable_error, r.max_trace_distance))
    return _csv(SCALING_HEADER, rows)


def report_convergence(spec: str, eps_list, T_grid, base: CompileConfig, trials: int = 10) -> str:
    dists = {}
    for eps in eps_list:
        cfg = replace(base, benchmark=spec, input_path=None, eps=float(eps), out_dir=None)
        dists[float(eps)] = compile_circuit(cfg).distribution
    table = convergence_study(dists, T_grid, trials=trials, seed=base.seed)
    return table.to_csv()
