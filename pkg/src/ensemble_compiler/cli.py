"""Command-line interface.

Subcommands: ``compile``, ``tables``, ``scaling``, ``convergence`` and
``inspect``.  Options may also come from a ``key = value`` file passed with
``--config``; flags given on the command line win.

Exit codes: 0 success, 2 bad input, 3 capacity exceeded, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from .errors import CompilerError, InputError
from .workflow import CompileConfig, compile_circuit, report_convergence, report_scaling, report_tables

log = logging.getLogger("ensemble_compiler")


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, keys use dashes or underscores."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value.strip("\"'")
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"expected a comma-separated list of numbers, got '{text}'") from exc


def _ints(text: str) -> list[int]:
    return [int(round(x)) for x in _floats(text)]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file with defaults for these options")
    p.add_argument("--profile", choices=["nisq", "ft"], default="nisq")
    p.add_argument("--block-width", type=int, default=4)
    p.add_argument("--partitioner", choices=["scan", "quick", "hier", "hierarchical"], default="scan")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--t-cap", type=int, default=40)
    p.add_argument("--diversify-count", type=int, default=8)
    p.add_argument("--variant-cap", type=int, default=64)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ensemble-compile", description="Ensemble approximate circuit compiler")
    sub = ap.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("compile", help="compile one circuit into a weighted ensemble")
    _add_common(pc)
    src = pc.add_mutually_exclusive_group()
    src.add_argument("--input", help="OpenQASM 2 file")
    src.add_argument("--benchmark", help="name:n:steps, e.g. heisenberg:4:2")
    tol = pc.add_mutually_exclusive_group()
    tol.add_argument("--epsilon2", type=float, help="target output error eps^2")
    tol.add_argument("--epsilon", type=float, help="per-block synthesis tolerance eps")

    pt = sub.add_parser("tables", help="expensive-gate reductions over an eps^2 grid")
    _add_common(pt)
    pt.add_argument("--benchmarks", default="heisenberg:4:2", help="comma-separated benchmark specs")
    pt.add_argument("--epsilon2-grid", default="1e-2,1e-4")

    ps = sub.add_parser("scaling", help="observable error and trace distance against K eps^2")
    _add_common(ps)
    ps.add_argument("--benchmarks", default="heisenberg:4:2")
    ps.add_argument("--epsilon-grid", default="1e-1,1e-2,1e-3")

    pv = sub.add_parser("convergence", help="empirical channel error against sample count")
    _add_common(pv)
    pv.add_argument("--benchmark", default="heisenberg:4:2")
    pv.add_argument("--epsilon-grid", default="1e-1,1e-2")
    pv.add_argument("--T-grid", dest="t_grid", default="1,2,5,10,20,50,100,200,500,1000,2000,5000,10000")
    pv.add_argument("--trials", type=int, default=10)

    pi = sub.add_parser("inspect", help="print a block ensemble from an ensemble JSON file")
    pi.add_argument("path", help="ensemble.json written by compile")
    pi.add_argument("--block", type=int, help="block id (default: all blocks)")
    pi.add_argument("--circuits", action="store_true", help="also print member circuits")
    pi.add_argument("--config", help=argparse.SUPPRESS)
    pi.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def _parse(argv) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        # re-parse with the file as defaults so explicit flags still win
        values = read_config_file(args.config)
        subparser = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        subparser.set_defaults(**values)
        args = ap.parse_args(argv)
        # argparse does not convert string defaults for typed options without a type-aware default
        for action in subparser._actions:
            if action.dest in values and action.type is not None:
                current = getattr(args, action.dest)
                if isinstance(current, str):
                    setattr(args, action.dest, action.type(current))
    return args


def _config(args: argparse.Namespace, eps: float, **overrides) -> CompileConfig:
    base = dict(
        input_path=getattr(args, "input", None),
        benchmark=getattr(args, "benchmark", None),
        profile=args.profile,
        eps=eps,
        block_width=args.block_width,
        partitioner=args.partitioner,
        diversify_count=args.diversify_count,
        seed=args.seed,
        out_dir=args.out,
        restarts=args.restarts,
        t_cap=args.t_cap,
        variant_cap=args.variant_cap,
        workers=args.workers,
    )
    base.update(overrides)
    return CompileConfig(**base)


def _eps(args: argparse.Namespace) -> float:
    if args.epsilon is not None:
        return args.epsilon
    if args.epsilon2 is not None:
        if args.epsilon2 <= 0:
            raise InputError("epsilon2 must be positive")
        return math.sqrt(args.epsilon2)
    return 0.1


def _write(args, name: str, text: str) -> None:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def cmd_compile(args: argparse.Namespace) -> None:
    if args.input is None and args.benchmark is None:
        raise InputError("compile needs --input or --benchmark")
    result = compile_circuit(_config(args, _eps(args)))
    r = result.report
    print(f"blocks: {r.K}  accepted: {sum(b.accepted for b in r.blocks)}")
    print(f"reference count: {r.reference_count:g}{'' if r.reference_certified else ' (lower bound)'}")
    print(f"ensemble mean count: {r.expected_count:.4f}  change: {r.percent_change:+.2f}%")
    print(f"sum of block wee: {r.sum_wee:.3e}  bound K*eps^2: {r.bound:.3e}")
    if r.observable_error is not None:
        print(f"observable error: {r.observable_error:.3e}  max trace distance: {r.max_trace_distance:.3e}")
    if args.out:
        print(f"wrote {os.path.join(args.out, 'ensemble.json')}")


def cmd_tables(args: argparse.Namespace) -> None:
    base = _config(args, 0.1, benchmark="placeholder:2")
    text = report_tables([s for s in args.benchmarks.split(",") if s], _floats(args.epsilon2_grid), base)
    _write(args, "tables.csv", text)


def cmd_scaling(args: argparse.Namespace) -> None:
    base = _config(args, 0.1, benchmark="placeholder:2")
    text = report_scaling([s for s in args.benchmarks.split(",") if s], _floats(args.epsilon_grid), base)
    _write(args, "scaling.csv", text)


def cmd_convergence(args: argparse.Namespace) -> None:
    base = _config(args, 0.1)
    text = report_convergence(args.benchmark, _floats(args.epsilon_grid), _ints(args.t_grid), base, args.trials)
    _write(args, "convergence.csv", text)


def cmd_inspect(args: argparse.Namespace) -> None:
    with open(args.path) as fh:
        doc = json.load(fh)
    print(f"profile {doc['profile']}  eps {doc['epsilon']:g}  seed {doc['seed']}")
    for b in doc["blocks"]:
        if args.block is not None and b["block_id"] != args.block:
            continue
        state = "accepted" if b["accepted"] else "original"
        print(f"block {b['block_id']} on qubits {b['qubits']}: {state}, {len(b['members'])} member(s)")
        print(f"  wee {b['wee']:.3e}  bias {b['bias']:.3e}  gamma {b['gamma']:.3f}  gamma_B {b['gamma_b']:.3f}")
        for i, (w, c) in enumerate(zip(b["weights"], b["costs"])):
            print(f"  [{i}] weight {w:.6f}  cost {c:g}")
            if args.circuits:
                print("      " + b["members"][i].replace("\n", "\n      "))


COMMANDS = {
    "compile": cmd_compile,
    "tables": cmd_tables,
    "scaling": cmd_scaling,
    "convergence": cmd_convergence,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    try:
        args = _parse(argv)
        level = logging.WARNING - 10 * min(args.verbose, 2)
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except CompilerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
