"""Command-line entry point.

Exit codes: 0 success, 1 a checked identity failed, 2 bad input, 3 a size
guard was exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path as FsPath

import yaml

from . import classify, derived, factor, fock, ktheory, odometer
from .errors import BDGraphError, ConsistencyError, GuardError
from .graph import (
    DEFAULT_PATH_GUARD,
    EXTEND_REPEAT_LAST,
    EXTEND_STRICT,
    DirectedMultigraph,
    DivisibilitySequence,
    reduce_tilde,
    validate_graph,
)
from .io import emit_dot, emit_report, load_document, load_graph, load_sequence, parse_path

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_GUARD = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, formats=("json", "text")) -> None:
    p.add_argument("--format", choices=formats, default="json")
    p.add_argument("--guard-paths", type=_positive, default=DEFAULT_PATH_GUARD)
    p.add_argument("--guard-dim", type=_positive, default=fock.DEFAULT_DIM_GUARD)


def _sequence_args(p: argparse.ArgumentParser, suffix: str = "") -> None:
    p.add_argument(f"--seq{suffix}", help="comma-separated prefix n_1,n_2,...")
    p.add_argument(f"--seq{suffix}-file", help="sequence document {prefix, extend}")
    p.add_argument(f"--extend{suffix}", choices=(EXTEND_REPEAT_LAST, EXTEND_STRICT), default=None)


def _sequence(args, suffix: str = "") -> DivisibilitySequence:
    key = suffix.lstrip("-").replace("-", "_")
    text = getattr(args, f"seq{key}")
    path = getattr(args, f"seq{key}_file")
    extend = getattr(args, f"extend{key}")
    if (text is None) == (path is None):
        raise UsageError(f"give exactly one of --seq{suffix} and --seq{suffix}-file")
    if path is not None:
        seq = load_sequence(path)
        return DivisibilitySequence(seq.prefix, extend or seq.extend)
    return DivisibilitySequence.parse(text, extend or EXTEND_REPEAT_LAST)


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="bdgraph", description="Finite-level computations for graph limit algebras.")
    groups = root.add_subparsers(dest="group", required=True, parser_class=_Parser)

    g = groups.add_parser("graph").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = g.add_parser("check")
    p.add_argument("file")
    _common(p)
    p = g.add_parser("reduce")
    p.add_argument("file")
    _common(p, ("json", "text", "dot"))

    d = groups.add_parser("derive").add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in ("en", "eqn", "bracket"):
        p = d.add_parser(kind)
        p.add_argument("file")
        p.add_argument("--n", type=_positive, required=True)
        _common(p, ("json", "text", "dot"))

    c = groups.add_parser("cycle").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = c.add_parser("decompose")
    p.add_argument("--j", type=_positive, required=True)
    p.add_argument("--n", type=_positive, required=True)
    _common(p)

    f = groups.add_parser("factor").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = f.add_parser("verify")
    p.add_argument("file", help="document {source, target, vertex_map, edge_map}")
    _common(p)
    for name in ("canonical", "induced"):
        p = f.add_parser(name)
        p.add_argument("file")
        p.add_argument("--n", type=_positive, required=True)
        p.add_argument("--k", type=_positive, required=True)
        p.add_argument("--bracket", action="store_true", help="use E[nk] -> E[n] instead of E(nk) -> E(n)")
        _common(p)

    o = groups.add_parser("odometer").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = o.add_parser("orbit")
    p.add_argument("file")
    _sequence_args(p)
    p.add_argument("--start", required=True, help="path name, e.g. v or e2.e1 (last-walked edge first)")
    p.add_argument("--word", required=True, help="comma-separated edges, applied first to last")
    _common(p)
    p = o.add_parser("simplicity")
    p.add_argument("file")
    _sequence_args(p)
    _common(p)

    k = groups.add_parser("ktheory").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = k.add_parser("compute")
    p.add_argument("file")
    _sequence_args(p)
    p.add_argument("--levels", type=_int_list, required=True)
    p.add_argument("--dump-dir", help="write Delta, U, V, D and connecting matrices as plain text")
    _common(p)

    fk = groups.add_parser("fock").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = fk.add_parser("verify")
    p.add_argument("file")
    p.add_argument("--depth", type=_positive, required=True)
    p.add_argument("--n", type=_positive, help="period for the periodic generators and block checks")
    p.add_argument("--gauge", type=_int_list, default=[1, 2, 4], help="orders m of the roots exp(2 pi i / m)")
    _common(p)

    cl = groups.add_parser("classify").add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("invariant", "simple"):
        p = cl.add_parser(name)
        p.add_argument("--j", type=_positive, required=True)
        _sequence_args(p)
        _common(p)
    p = cl.add_parser("iso")
    p.add_argument("--j", type=_positive, required=True)
    _sequence_args(p)
    p.add_argument("--j2", type=_positive, required=True)
    _sequence_args(p, "2")
    _common(p)
    return root


def _graph_output(args, graph: DirectedMultigraph, doc: dict, name: str) -> tuple[str, int]:
    if args.format == "dot":
        return emit_dot(graph, name), EXIT_OK
    return emit_report(doc, args.format), EXIT_OK


def _cmd_graph(args):
    g = load_graph(args.file)
    if args.command == "check":
        report = validate_graph(g)
        doc = {
            "admissible": report.admissible,
            "sinks": list(report.sinks),
            "sources": list(report.sources),
            "vertices": len(g.vertices),
            "edges": len(g.edges),
        }
        return emit_report(doc, args.format), EXIT_OK if report.admissible else EXIT_FAILED
    reduced = reduce_tilde(g)
    return _graph_output(args, reduced, reduced.to_mapping(), "reduced")


def _cmd_derive(args):
    g = load_graph(args.file)
    build = {"en": derived.build_E_n, "eqn": derived.build_E_eq_n, "bracket": derived.build_E_bracket_n}
    dg = build[args.command](g, args.n, guard=args.guard_paths)
    return _graph_output(args, dg.graph, dg.to_mapping(), f"{dg.kind}[n={args.n}]")


def _cmd_cycle(args):
    dec = derived.loop_decompose(args.j, args.n, guard=args.guard_paths)
    return emit_report(dec.to_mapping(), args.format), EXIT_OK


def _cmd_factor(args):
    if args.command == "verify":
        doc = load_document(args.file)
        try:
            source = DirectedMultigraph.from_mapping(doc["source"])
            target = DirectedMultigraph.from_mapping(doc["target"])
            m = factor.FactorMap(source, target, dict(doc["vertex_map"]), dict(doc["edge_map"]))
        except KeyError as exc:
            raise UsageError(f"factor map document is missing {exc}") from None
        report = factor.verify_factor_map(m)
        return emit_report(report.to_mapping(), args.format), EXIT_OK if report.is_regular else EXIT_FAILED
    g = load_graph(args.file)
    build = factor.canonical_q if args.bracket else factor.canonical_m
    cm = build(g, args.n, args.k, guard=args.guard_paths)
    report = factor.verify_factor_map(cm.map)
    if args.command == "canonical":
        doc = {"n": args.n, "k": args.k, "bracket": args.bracket, "map": cm.map.to_mapping(), "report": report.to_mapping()}
        return emit_report(doc, args.format), EXIT_OK if report.is_regular else EXIT_FAILED
    gen = factor.induced_generator_map(cm.map)
    doc = {"n": args.n, "k": args.k, "bracket": args.bracket, "generators": gen.to_mapping()}
    return emit_report(doc, args.format), EXIT_OK


def _cmd_odometer(args):
    g = load_graph(args.file)
    seq = _sequence(args)
    if args.command == "orbit":
        start = odometer.tau(g, parse_path(g, args.start), seq)
        word = [w.strip() for w in args.word.split(",") if w.strip()]
        points = odometer.orbit(start, word)
        doc = {"sequence": seq.to_mapping(), "word": word, "orbit": [p.to_mapping() for p in points]}
        return emit_report(doc, args.format), EXIT_OK
    verdict = odometer.simplicity_verdict(g, seq)
    doc = {"sequence": seq.to_mapping(), **verdict.to_mapping()}
    return emit_report(doc, args.format), EXIT_OK


def _cmd_ktheory(args):
    g = load_graph(args.file)
    seq = _sequence(args)
    report = ktheory.k_groups(g, seq, args.levels, guard=args.guard_paths)
    if args.dump_dir:
        out = FsPath(args.dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        for lvl in report.levels:
            (out / f"delta_{lvl.level}.txt").write_text(lvl.delta.dump())
            for name in ("U", "V", "D"):
                mat = getattr(lvl.snf, name)
                labels = [str(i) for i in range(len(mat))]
                cols = [str(j) for j in range(len(mat[0]) if mat else 0)]
                text = ktheory.IntegerMatrix.build(mat, labels, cols).dump()
                (out / f"{name}_{lvl.level}.txt").write_text(text)
        for i, (m0, m1) in enumerate(zip(report.k0_maps, report.k1_maps)):
            (out / f"k0_map_{i}.txt").write_text(m0.dump())
            (out / f"k1_map_{i}.txt").write_text(m1.dump())
    doc = {"sequence": seq.to_mapping(), **report.to_mapping()}
    return emit_report(doc, args.format), EXIT_OK


def _cmd_fock(args):
    g = load_graph(args.file)
    space = fock.TruncatedFockSpace(g, args.depth, guard=args.guard_dim)
    gens = fock.build_generators(space)
    results = fock.check_generators(space, gens) + fock.verify_tck(space, gens.L, gens.P)
    for m in args.gauge:
        results += fock.gauge_check(space, 1, m, n=args.n)
    doc = {"dim": space.dim, "depth": args.depth, "n": args.n}
    blocks_ok = True
    if args.n is not None:
        fam = fock.periodic_generators(space, args.n)
        results += fock.check_periodic_family(fam)
        if args.depth >= 2 * args.n - 1:
            blocks = fock.block_decomposition(g, args.n, args.depth, guard=args.guard_dim)
            doc["blocks"] = blocks.to_mapping()
            blocks_ok = blocks.holds
    failures = [r.to_mapping() for r in results if not r.holds]
    doc.update({"checked": len(results), "failures": failures, "holds": not failures and blocks_ok})
    return emit_report(doc, args.format), EXIT_OK if doc["holds"] else EXIT_FAILED


def _cmd_classify(args):
    seq = _sequence(args)
    if args.command == "invariant":
        return emit_report(classify.bd_invariant(args.j, seq).to_mapping(), args.format), EXIT_OK
    if args.command == "simple":
        return emit_report(classify.bd_simple(args.j, seq).to_mapping(), args.format), EXIT_OK
    seq2 = _sequence(args, "2")
    verdict = classify.bd_isomorphic((args.j, seq), (args.j2, seq2))
    return emit_report(verdict.to_mapping(), args.format), EXIT_OK


COMMANDS = {
    "graph": _cmd_graph,
    "derive": _cmd_derive,
    "cycle": _cmd_cycle,
    "factor": _cmd_factor,
    "odometer": _cmd_odometer,
    "ktheory": _cmd_ktheory,
    "fock": _cmd_fock,
    "classify": _cmd_classify,
}


def schema_name(argv: list[str]) -> str:
    """Schema file stem for a command line, e.g. ``derive_en``."""
    args = build_parser().parse_args(argv)
    return f"{args.group}_{args.command}"


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        text, code = COMMANDS[args.group](args)
    except GuardError as exc:
        print(f"bdgraph: guard exceeded: {exc}", file=stderr)
        return EXIT_GUARD
    except ConsistencyError as exc:
        print(f"bdgraph: internal identity failed: {exc}", file=stderr)
        return EXIT_FAILED
    except (BDGraphError, UsageError, ValueError, KeyError, OSError, yaml.YAMLError) as exc:
        print(f"bdgraph: {exc}", file=stderr)
        return EXIT_INPUT
    stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())
