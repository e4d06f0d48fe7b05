"""Command-line front end: parse, validate, expand, compose, emit, verify.

Exit codes: 0 success, 1 semantic failure (diagnostics, conformance FAIL,
round-trip mismatch), 2 unreadable or unparseable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bpmn import BpmnGraph, to_dot, validate_bpmn
from .bpmn_xml import DanglingReferenceError, UnsupportedElementError, XmlSyntaxError, from_xml, to_xml
from .compose import AnchorMissingError, InvalidModelError, compose_each
from .ctp import PatternLevel
from .diagnostics import render_diagnostics
from .expand import ExpandOptions, expand_transaction
from .model import ParseResult, TransactionKind, parse_model, parse_model_json
from .simulate import (
    ChoicePolicy,
    SimulationError,
    check_conformance,
    simulate,
    trace_line,
)

__all__ = ["main", "run"]


def _add_common(parser: argparse.ArgumentParser, bounds: bool = True) -> None:
    parser.add_argument(
        "--level",
        choices=[l.value for l in PatternLevel],
        default=PatternLevel.STANDARD.value,
        help="pattern level (default: standard)",
    )
    parser.add_argument("--include-production", action="store_true")
    if bounds:
        parser.add_argument("--loop-bound", type=int, default=2)
        parser.add_argument("--revoke-bound", type=int, default=2)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demo2bpmn",
        description="Translate DEMO transaction trees to BPMN collaborations and verify them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="model file -> BPMN collaboration")
    p_compile.add_argument("input")
    p_compile.add_argument("-o", "--output", default=None)
    p_compile.add_argument("--format", choices=["xml", "dot"], default="xml")
    p_compile.add_argument("--layout", action="store_true", help="emit naive diagram layout")
    _add_common(p_compile, bounds=False)

    p_expand = sub.add_parser("expand", help="one transaction id -> block")
    p_expand.add_argument("transaction_id")
    p_expand.add_argument("--model", default=None, help="model file declaring the transaction")
    p_expand.add_argument("-o", "--output", default=None)
    p_expand.add_argument("--format", choices=["xml", "dot"], default="xml")
    p_expand.add_argument("--layout", action="store_true")
    _add_common(p_expand, bounds=False)

    p_validate = sub.add_parser("validate", help="check a model or BPMN file")
    p_validate.add_argument("input")

    p_sim = sub.add_parser("simulate", help="run a collaboration once, print the trace")
    p_sim.add_argument("input")
    p_sim.add_argument("--seed", type=int, default=None, help="random policy seed")
    p_sim.add_argument("--script", default=None, help="comma-separated choice labels")
    _add_common(p_sim)

    p_conf = sub.add_parser("conformance", help="check a block against the transaction machine")
    p_conf.add_argument("input", nargs="?", default=None, help="BPMN file (default: a generated block)")
    p_conf.add_argument("--format", choices=["text", "json"], default="text")
    _add_common(p_conf)

    p_round = sub.add_parser("roundtrip", help="XML -> graph -> XML, byte-compare")
    p_round.add_argument("input")
    return parser


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_model(path: str) -> ParseResult:
    text = _read(path)
    if path.endswith(".json"):
        return parse_model_json(text)
    return parse_model(text)


def _load_graph(path: str, level: PatternLevel, include_production: bool) -> BpmnGraph:
    """A BPMN file directly, or a model file composed at the given level."""
    if path.endswith(".bpmn") or path.endswith(".xml"):
        return from_xml(_read(path))
    result = _load_model(path)
    if result.model is None:
        raise InvalidModelError("model has diagnostics", result.diagnostics)
    compiled = compose_each(result.model, ExpandOptions(level, include_production))
    if len(compiled) != 1:
        raise InvalidModelError(f"expected one root, found {len(compiled)}")
    return compiled[0][1]


def _emit_graph(graph: BpmnGraph, fmt: str, layout: bool, output: Path, stdout) -> None:
    text = to_xml(graph, include_layout=layout) if fmt == "xml" else to_dot(graph)
    output.write_text(text, encoding="utf-8")
    print(f"wrote {output}", file=stdout)


def run(argv: list[str], stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args, stdout, stderr)
    except (OSError, XmlSyntaxError, UnsupportedElementError, DanglingReferenceError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except (InvalidModelError, AnchorMissingError, SimulationError) as exc:
        message = str(exc)
        if isinstance(exc, InvalidModelError) and exc.diagnostics:
            message += "\n" + render_diagnostics(exc.diagnostics)
        print(f"error: {message}", file=stderr)
        return 1


def _dispatch(args: argparse.Namespace, stdout, stderr) -> int:
    if args.command == "compile":
        return _cmd_compile(args, stdout, stderr)
    if args.command == "expand":
        return _cmd_expand(args, stdout, stderr)
    if args.command == "validate":
        return _cmd_validate(args, stdout, stderr)
    if args.command == "simulate":
        return _cmd_simulate(args, stdout, stderr)
    if args.command == "conformance":
        return _cmd_conformance(args, stdout, stderr)
    return _cmd_roundtrip(args, stdout, stderr)


def _cmd_compile(args, stdout, stderr) -> int:
    result = _load_model(args.input)
    if result.model is None:
        print(render_diagnostics(result.diagnostics), file=stderr)
        syntactic = any(d.rule == "SYNTAX" for d in result.diagnostics)
        return 2 if syntactic else 1
    opts = ExpandOptions(PatternLevel(args.level), args.include_production)
    compiled = compose_each(result.model, opts)
    default = Path(args.input).with_suffix(".bpmn")
    output = Path(args.output) if args.output else default
    suffix = ".dot" if args.format == "dot" else output.suffix or ".bpmn"
    if len(compiled) == 1:
        _emit_graph(compiled[0][1], args.format, args.layout, output.with_suffix(suffix), stdout)
    else:
        for root_id, graph in compiled:
            target = output.with_name(f"{output.stem}_{root_id}{suffix}")
            _emit_graph(graph, args.format, args.layout, target, stdout)
    return 0


def _cmd_expand(args, stdout, stderr) -> int:
    tk = TransactionKind(args.transaction_id, args.transaction_id, "initiator", "executor")
    if args.model:
        result = _load_model(args.model)
        if result.model is None:
            print(render_diagnostics(result.diagnostics), file=stderr)
            return 1
        tk = result.model.kind(args.transaction_id)
    opts = ExpandOptions(PatternLevel(args.level), args.include_production)
    graph = expand_transaction(tk, opts)
    suffix = ".dot" if args.format == "dot" else ".bpmn"
    default = Path(f"{args.transaction_id}_{args.level}{suffix}")
    output = Path(args.output) if args.output else default
    _emit_graph(graph, args.format, args.layout, output, stdout)
    return 0


def _cmd_validate(args, stdout, stderr) -> int:
    if args.input.endswith(".bpmn") or args.input.endswith(".xml"):
        diagnostics = validate_bpmn(from_xml(_read(args.input)))
    else:
        result = _load_model(args.input)
        diagnostics = result.diagnostics
    if diagnostics:
        for diagnostic in diagnostics:
            print(f"{args.input}:{diagnostic}", file=stderr)
        return 1
    print("ok", file=stdout)
    return 0


def _cmd_simulate(args, stdout, stderr) -> int:
    graph = _load_graph(args.input, PatternLevel(args.level), args.include_production)
    if args.script is not None:
        policy = ChoicePolicy.scripted([t.strip() for t in args.script.split(",") if t.strip()])
    elif args.seed is not None:
        policy = ChoicePolicy.random(args.seed)
    else:
        policy = ChoicePolicy.exhaustive()
    trace = simulate(graph, policy, args.loop_bound, args.revoke_bound)
    print(trace_line(trace), file=stdout)
    return 0


def _cmd_conformance(args, stdout, stderr) -> int:
    level = PatternLevel(args.level)
    if args.input:
        graph = from_xml(_read(args.input))
    else:
        tk = TransactionKind("TK01", "generated block", "initiator", "executor")
        graph = expand_transaction(tk, ExpandOptions(level, args.include_production))
    report = check_conformance(graph, level, args.loop_bound, args.revoke_bound)
    if args.format == "json":
        print(json.dumps(report.to_json(), indent=2, sort_keys=True), file=stdout)
    else:
        print(report.to_text(), file=stdout)
    return 0 if report.passed else 1


def _cmd_roundtrip(args, stdout, stderr) -> int:
    original = Path(args.input).read_bytes()
    emitted = to_xml(from_xml(original.decode("utf-8")))
    if emitted.encode("utf-8") == original:
        print("roundtrip ok", file=stdout)
        return 0
    print("roundtrip mismatch", file=stderr)
    return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))
