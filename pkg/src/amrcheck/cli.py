"""Command-line entry point: ``amrcheck <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import bench
from .checker import CheckerConfig, ConfigError, check_subtype, check_with_chain
from .core import Fsm, SortTable
from .oracle import DEFAULT_BOUND, DEFAULT_BUDGET, Outcome, compose_system, run_bounded
from .projection import ProjectionError, local_to_fsm, project
from .sync import check_sync_subtype
from .syntax import SourceError, format_local, parse_fsm_dot, parse_global, parse_local, write_fsm_dot

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc


def load_machine(path: str, role: str = "") -> Fsm:
    """An FSM from a ``.dot`` file, or from a local type in any other file."""
    text = _read(path)
    try:
        if path.endswith(".dot"):
            fsm = parse_fsm_dot(text, role or None)
        else:
            fsm = local_to_fsm(parse_local(text), role)
    except SourceError as exc:
        raise InputError(f"{path}:{exc}") from exc
    return fsm


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _sort_table(pairs: list[str]) -> SortTable:
    parsed = []
    for item in pairs:
        sub, sep, sup = item.partition(":")
        if not sep or not sub or not sup:
            raise InputError(f"--coerce expects SUB:SUP, got {item!r}")
        parsed.append((sub, sup))
    return SortTable(parsed)


def cmd_project(args) -> int:
    protocol = _load_protocol(args.protocol)
    if args.role not in protocol.roles:
        raise InputError(f"role {args.role!r} is not declared in {args.protocol}")
    local = project(protocol.body, args.role)
    if args.dot:
        _emit(write_fsm_dot(local_to_fsm(local, args.role)), args.output)
    else:
        _emit(format_local(local) + "\n", args.output)
    return EXIT_OK


def cmd_fsm(args) -> int:
    text = _read(args.local)
    try:
        local = parse_local(text)
    except SourceError as exc:
        raise InputError(f"{args.local}:{exc}") from exc
    _emit(write_fsm_dot(local_to_fsm(local, args.role)), args.output)
    return EXIT_OK


def cmd_subtype(args) -> int:
    sub = load_machine(args.sub)
    sup = load_machine(args.sup)
    cfg = CheckerConfig(
        visits=args.visits,
        sort_table=_sort_table(args.coerce),
        windows=args.trace,
    )
    if args.chain:
        mids = [load_machine(p) for p in args.chain.split(",") if p]
        verdict = check_with_chain(sub, mids, sup, cfg)
    else:
        verdict = check_subtype(sub, sup, cfg)
    if args.json:
        print(json.dumps(verdict.to_json(trace=args.trace), indent=2))
    else:
        reason = f" ({verdict.reason.value})" if verdict.reason else ""
        print(f"{verdict.kind}{reason}")
        print(f"nodes explored: {verdict.stats.nodes}, elapsed: {verdict.elapsed:.6f}s")
        if args.trace and verdict.derivation is not None:
            print("\n".join(verdict.derivation.lines()))
    return EXIT_OK if verdict.proven else EXIT_NEGATIVE


def cmd_sync_subtype(args) -> int:
    sub = load_machine(args.sub)
    sup = load_machine(args.sup)
    started = time.perf_counter()
    ok = check_sync_subtype(sub, sup, _sort_table(args.coerce))
    elapsed = time.perf_counter() - started
    verdict = "Proven" if ok else "Refuted"
    if args.json:
        print(json.dumps({"verdict": verdict, "reason": None, "nodes_explored": None, "elapsed_seconds": elapsed}))
    else:
        print(verdict)
    return EXIT_OK if ok else EXIT_NEGATIVE


def _load_protocol(path: str):
    try:
        return parse_global(_read(path))
    except SourceError as exc:
        raise InputError(f"{path}:{exc}") from exc


def cmd_simulate(args) -> int:
    protocol = _load_protocol(args.protocol)
    replacements = {}
    for item in args.replace:
        role, sep, path = item.partition("=")
        if not sep:
            raise InputError(f"--replace expects ROLE=FILE, got {item!r}")
        replacements[role] = load_machine(path, role)
    try:
        system = compose_system(
            protocol.body,
            replacements,
            roles=list(protocol.roles),
            channel_bound=args.bound,
            max_configs=args.budget,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    started = time.perf_counter()
    result = run_bounded(system)
    elapsed = time.perf_counter() - started
    stuck = result.outcome in (Outcome.DEADLOCK, Outcome.ORPHAN)
    if args.json:
        out = {
            "verdict": result.outcome.value,
            "reason": None,
            "nodes_explored": result.explored,
            "elapsed_seconds": elapsed,
        }
        if stuck:
            out["trace"] = [str(s) for s in result.trace]
        print(json.dumps(out, indent=2))
    else:
        print(result.outcome.value)
        print(f"configurations explored: {result.explored}")
        if stuck:
            print("trace: " + (" ; ".join(str(s) for s in result.trace) or "(initial configuration)"))
    return EXIT_OK if result.outcome is Outcome.DEADLOCK_FREE else EXIT_NEGATIVE


def cmd_bench(args) -> int:
    try:
        params = bench.parse_range(args.param_range, args.family, args.step)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    records = []
    for n in params:
        record = bench.bench_one(args.family, n, args.runs)
        records.append(record)
        print(f"{record.family} n={n}: {record.verdict} {record.mean_seconds * 1e3:.3f} ms", file=sys.stderr)
    text = bench.write_csv(records)
    _emit(text, args.output)
    return EXIT_OK if all(r.verdict == "Proven" for r in records) else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amrcheck",
        description="Asynchronous subtyping and deadlock checks for multiparty protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="project a global protocol onto one role")
    p.add_argument("protocol", help="global protocol (.scr)")
    p.add_argument("--role", required=True)
    p.add_argument("--dot", action="store_true", help="write the FSM as DOT instead of a local type")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("fsm", help="convert a local type to a DOT FSM")
    p.add_argument("local", help="local type (.mpst)")
    p.add_argument("--role", default="")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fsm)

    p = sub.add_parser("subtype", help="asynchronous subtyping check")
    p.add_argument("--sub", required=True, help=".mpst or .dot")
    p.add_argument("--sup", required=True, help=".mpst or .dot")
    p.add_argument("--visits", type=int, default=None, help="per state-pair visit bound")
    p.add_argument("--chain", help="comma-separated intermediate machines")
    p.add_argument("--coerce", action="append", default=[], metavar="SUB:SUP")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_subtype)

    p = sub.add_parser("sync-subtype", help="synchronous subtyping check")
    p.add_argument("--sub", required=True)
    p.add_argument("--sup", required=True)
    p.add_argument("--coerce", action="append", default=[], metavar="SUB:SUP")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sync_subtype)

    p = sub.add_parser("simulate", help="bounded deadlock search over the projected system")
    p.add_argument("protocol", help="global protocol (.scr)")
    p.add_argument("--replace", action="append", default=[], metavar="ROLE=FILE")
    p.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="channel capacity")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="configuration budget")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="time a benchmark family")
    p.add_argument("--family", required=True, choices=bench.FAMILIES)
    p.add_argument("--param-range", required=True, metavar="A..B")
    p.add_argument("--step", type=int, default=None)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SourceError, ProjectionError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
