"""Command-line interface.

Exit codes follow the CI gating convention: 0 when everything passes,
1 when a violation was found, 2 on tool or usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, builtins, checker, compose, irfmt, report, tla
from .replay import generate_tests, run as replay_run

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_ERROR = 2


class CliError(Exception):
    pass


def _parse_bounds(spec: str) -> checker.Bounds:
    """Bounds from 'agents=2,caps=2,counter_max=3,depth=20,states=1000000'."""
    bounds = checker.DEFAULT_BOUNDS
    if not spec:
        return bounds
    caps = {}
    for part in spec.split(","):
        if "=" not in part:
            raise CliError(f"bad bounds entry {part!r}; expected key=value")
        key, _, raw = part.partition("=")
        key = key.strip().lower()
        try:
            value = int(raw)
        except ValueError:
            raise CliError(f"bounds value for {key!r} must be an int")
        if key == "counter_max":
            bounds = checker.replace(bounds, counter_max=value)
        elif key in ("depth", "max_depth"):
            bounds = checker.replace(bounds, max_depth=value)
        elif key in ("states", "max_states"):
            bounds = checker.replace(bounds, max_states=value)
        else:
            caps[key] = value
    if caps:
        bounds = bounds.with_caps(**caps)
    return bounds


def _load_model(ref: str):
    """A builtin name or a path to an .ir file."""
    if ref in builtins.BUILTIN_NAMES:
        return builtins.builtin(ref)
    path = Path(ref)
    if not path.exists():
        raise CliError(f"{ref!r} is neither a builtin model "
                       f"({', '.join(builtins.BUILTIN_NAMES)}) nor a file")
    return irfmt.load_model(path)


def _write_out(out, text: str):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_check(args) -> int:
    model = _load_model(args.model)
    bounds = _parse_bounds(args.bounds)
    if args.property:
        props = [model.property_by_id(args.property)]
    else:
        props = list(model.properties)
    results = checker.check_all(model, props, bounds, workers=args.workers)
    lines = []
    rc = EXIT_OK
    for pid in sorted(results):
        res = results[pid]
        line = f"{model.name} {pid}: {res.verdict}"
        if res.failed:
            rc = EXIT_VIOLATION
            line += f" at depth {res.counterexample.depth}"
            steps = " -> ".join(
                s.transition_id for s in res.counterexample.steps)
            line += f" [{steps}]" if steps else " [initial state]"
        if res.verdict.startswith("ERROR"):
            rc = EXIT_ERROR
        lines.append(line + "\n")
    _write_out(args.out, "".join(lines))
    if args.counterexample_out:
        failing = [results[p] for p in sorted(results) if results[p].failed]
        if failing:
            Path(args.counterexample_out).write_text(
                checker.export_counterexample(
                    model, failing[0].counterexample))
    return rc


def _cmd_matrix(args) -> int:
    if args.models_dir:
        return _matrix_over_dir(args)
    matrix = report.bundled_matrix(bounds=_parse_bounds(args.bounds),
                                   workers=args.workers)
    _write_out(args.out, report.render(matrix, args.format))
    return EXIT_VIOLATION if matrix.spec_level_count else EXIT_OK


def _matrix_over_dir(args) -> int:
    """Per-model property verdicts for every .ir file in a directory."""
    paths = sorted(Path(args.models_dir).glob("*.ir"))
    if not paths:
        raise CliError(f"no .ir files under {args.models_dir!r}")
    bounds = _parse_bounds(args.bounds)
    lines = []
    rc = EXIT_OK
    for path in paths:
        model = irfmt.load_model(path)
        results = checker.check_all(model, model.properties, bounds,
                                    workers=args.workers)
        for pid in sorted(results):
            verdict = results[pid].verdict
            if verdict == "FAIL":
                rc = EXIT_VIOLATION
            lines.append(f"{model.name} {pid}: {verdict}\n")
    _write_out(args.out, "".join(lines))
    return rc


def _cmd_compose(args) -> int:
    if args.pattern not in compose.PATTERNS:
        raise CliError(f"unknown pattern {args.pattern!r}; "
                       f"known: {', '.join(sorted(compose.PATTERNS))}")
    for pattern, a, b, bridge in compose.builtin_compositions():
        if pattern != args.pattern:
            continue
        composed = compose.compose(a, b, bridge)
        if args.out:
            Path(args.out).write_text(irfmt.serialize_model(composed))
        props = compose.cs_properties(composed, pattern)
        results = checker.check_all(composed, props,
                                    _parse_bounds(args.bounds),
                                    workers=args.workers)
        rc = EXIT_OK
        for pid in sorted(results):
            res = results[pid]
            line = f"{composed.name} {pid}: {res.verdict}"
            if res.failed:
                rc = EXIT_VIOLATION
                line += f" at depth {res.counterexample.depth}"
            sys.stdout.write(line + "\n")
        return rc
    raise CliError(f"pattern {args.pattern!r} has no builtin composition")


def _cmd_emit_tla(args) -> int:
    model = _load_model(args.model)
    artifact = tla.emit_artifact(model, _parse_bounds(args.bounds))
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = model.name.replace("-", "_")
        (outdir / f"{stem}.tla").write_text(artifact.module_text)
        for pid, cfg in artifact.config_texts:
            (outdir / f"{stem}_{pid}.cfg").write_text(cfg)
        sys.stdout.write(f"wrote {stem}.tla and "
                         f"{len(artifact.config_texts)} configs to {outdir}\n")
    else:
        sys.stdout.write(artifact.module_text)
        for _, cfg in artifact.config_texts:
            sys.stdout.write("\n" + cfg)
    return EXIT_OK


def _cmd_parse_tlc(args) -> int:
    text = Path(args.log).read_text()
    parse = tla.parse_tlc_output(text)
    if parse.violated:
        sys.stdout.write(f"violated: {parse.violated} "
                         f"(trace depth {parse.depth})\n")
        return EXIT_VIOLATION
    sys.stdout.write(f"no violation; {parse.distinct_states} distinct "
                     f"states\n")
    return EXIT_OK


def _cmd_replay(args) -> int:
    text = Path(args.counterexample).read_text()
    import json
    model_name = json.loads(text).get("model")
    if model_name not in builtins.BUILTIN_NAMES:
        raise CliError(f"counterexample names unknown model {model_name!r}")
    model = builtins.builtin(model_name)
    cx = checker.import_counterexample(model, text)
    tests, skipped = generate_tests([cx])
    if not tests:
        reason = skipped[0][1] if skipped else "no test generated"
        raise CliError(f"cannot replay: {reason}")
    rc = EXIT_OK
    reports = []
    for test in tests:
        adapter_report = replay_run(test, args.profile, mode=args.mode,
                                    endpoint=args.endpoint)
        reports.append(adapter_report.to_json())
        if adapter_report.outcome == "VIOLATED":
            rc = EXIT_VIOLATION
    _write_out(args.out, "\n".join(reports) + "\n")
    return rc


def _cmd_report(args) -> int:
    matrix = report.bundled_matrix(bounds=_parse_bounds(args.bounds),
                                   workers=args.workers)
    fmt = {"table": "table-text", "structured": "structured"}.get(
        args.format, args.format)
    _write_out(args.out, report.render(matrix, fmt))
    return EXIT_VIOLATION if matrix.spec_level_count else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentconform",
        description="Conformance checker for AI agent protocols")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--bounds", default="",
                       help="domain caps and limits, e.g. agents=2,caps=2")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=None, help="write output to a file")

    p = sub.add_parser("check", help="model-check a protocol model")
    p.add_argument("model", help="builtin name or .ir file path")
    p.add_argument("--property", default=None, help="check one property id")
    p.add_argument("--counterexample-out", default=None,
                   help="write the first counterexample as JSON")
    common(p)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("matrix", help="build the conformance matrix")
    p.add_argument("--models-dir", default=None,
                   help="check .ir files in a directory instead of the "
                        "bundled protocols (no triage or composition)")
    p.add_argument("--format", default="table-text",
                   choices=("table-text", "structured"))
    common(p)
    p.set_defaults(fn=_cmd_matrix)

    p = sub.add_parser("compose", help="check a cross-protocol composition")
    p.add_argument("pattern", help="composition pattern name")
    common(p)
    p.set_defaults(fn=_cmd_compose)

    p = sub.add_parser("emit-tla", help="emit a TLA+ module and TLC configs")
    p.add_argument("model", help="builtin name or .ir file path")
    common(p)
    p.set_defaults(fn=_cmd_emit_tla)

    p = sub.add_parser("parse-tlc", help="parse a TLC output log")
    p.add_argument("log", help="path to the TLC log file")
    p.set_defaults(fn=_cmd_parse_tlc)

    p = sub.add_parser("replay", help="replay a counterexample as a "
                                      "protocol-level test")
    p.add_argument("counterexample", help="counterexample JSON file")
    p.add_argument("--profile", required=True,
                   choices=("vulnerable", "hardened"))
    p.add_argument("--mode", default="mock", choices=("mock", "live"))
    p.add_argument("--endpoint", default=None,
                   help="live-mode endpoint URL")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("report", help="render the bundled conformance report")
    p.add_argument("--format", default="table",
                   choices=("table", "structured", "table-text"))
    common(p)
    p.set_defaults(fn=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
