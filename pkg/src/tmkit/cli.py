"""``tm`` command-line front end.

Exit status: 0 on success, 1 when validation or conformance fails (or
``fmt --check`` finds a non-canonical file), 2 on usage, I/O and scenario
errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, TextIO

from .diagnostics import Diagnostic, Severity, count_errors, sort_diagnostics
from .dsl import format_model, parse_model
from .events import check_decomposition
from .export import FLAVORS, ExportOptions, SchemaError, export, from_json
from .model import Profile, extract_components
from .simulator import Scenario, ScenarioError, check_trace_conformance, run_scenario
from .validator import validate_model

VERBS = ("check", "components", "events", "simulate", "export", "fmt")
OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class CommandSpec:
    verb: str
    inputs: list[str]
    flags: dict = field(default_factory=dict)


@dataclass
class _Loaded:
    model: object
    events: list
    behavior: object
    diagnostics: list[Diagnostic]


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _write(path: str, text: str):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _load(path: str, profile: Profile) -> _Loaded:
    text = _read(path)
    if path.endswith(".json"):
        try:
            model, events, behavior = from_json(text)
        except SchemaError as exc:
            raise UsageError(f"{path}: {exc}") from None
        return _Loaded(model, events, behavior, [])
    result = parse_model(text, profile, Path(path).name)
    return _Loaded(result.model, result.events, result.behavior, result.diagnostics)


def _summary(diags: Sequence[Diagnostic]) -> str:
    errors = count_errors(diags)
    warnings = sum(d.severity is Severity.WARNING for d in diags)
    return f"{errors} error{'s' * (errors != 1)}, {warnings} warning{'s' * (warnings != 1)}"


def _load_valid(path: str, profile: Profile, err: TextIO) -> Optional[_Loaded]:
    """Load and validate; print errors and return None if there are any."""
    loaded = _load(path, profile)
    diags = loaded.diagnostics
    if loaded.model is not None:
        diags = diags + validate_model(loaded.model)
    if count_errors(diags):
        for d in sort_diagnostics(diags):
            if d.severity is Severity.ERROR:
                print(d.render(), file=err)
        print(f"{path}: {_summary(diags)}", file=err)
        return None
    return loaded


def _emit(text: str, out_path: Optional[str], out: TextIO):
    if out_path:
        _write(out_path, text)
    else:
        out.write(text)


def _cmd_check(spec: CommandSpec, profile: Profile, out: TextIO, err: TextIO) -> int:
    status = OK
    for path in spec.inputs:
        loaded = _load(path, profile)
        diags = list(loaded.diagnostics)
        if loaded.model is not None:
            diags += validate_model(loaded.model)
        for d in sort_diagnostics(diags):
            print(d.render(), file=out)
        print(f"{path}: {_summary(diags)}", file=out)
        if count_errors(diags):
            status = FAILED
    return status


def _cmd_components(spec: CommandSpec, profile: Profile, out: TextIO, err: TextIO) -> int:
    status = OK
    chunks = []
    for path in spec.inputs:
        loaded = _load_valid(path, profile, err)
        if loaded is None:
            status = FAILED
            continue
        model = loaded.model
        if spec.flags.get("flavor") == "components-dot":
            chunks.append(export(model, options=ExportOptions("components-dot")))
            continue
        view = extract_components(model)
        lines = []
        for tid in view.nodes:
            lines.append("  " * (len(model.ancestors(tid)) - 1) + model.path(tid))
        for (a, b), kinds in view.edges.items():
            lines.append(f"{model.path(a)} -- {model.path(b)} [{', '.join(sorted(k.value for k in kinds))}]")
        chunks.append("\n".join(lines) + "\n" if lines else "")
    _emit("".join(chunks), spec.flags.get("out"), out)
    return status


def _cmd_events(spec: CommandSpec, profile: Profile, out: TextIO, err: TextIO) -> int:
    status = OK
    for path in spec.inputs:
        loaded = _load_valid(path, profile, err)
        if loaded is None:
            status = FAILED
            continue
        model = loaded.model
        for e in loaded.events:
            desc = f"  {e.description}" if e.description else ""
            print(f"{e.name}: {len(e.stages)} stages, {len(e.arcs)} arcs{desc}", file=out)
        diags = check_decomposition(model, loaded.events)
        if loaded.behavior is not None:
            diags = sort_diagnostics(diags + loaded.behavior.diagnostics())
            print("initial: " + ", ".join(loaded.behavior.initial), file=out)
        for d in diags:
            print(d.render(), file=out)
        print(f"{path}: {len(loaded.events)} events, {_summary(diags)}", file=out)
        if count_errors(diags):
            status = FAILED
    return status


def _cmd_simulate(spec: CommandSpec, profile: Profile, out: TextIO, err: TextIO) -> int:
    if len(spec.inputs) != 1:
        raise UsageError("simulate takes exactly one model file")
    if not spec.flags.get("scenario"):
        raise UsageError("simulate needs --scenario FILE")
    try:
        scenario = Scenario.from_json(_read(spec.flags["scenario"]))
    except ScenarioError as exc:
        raise UsageError(f"{spec.flags['scenario']}: {exc}") from None
    loaded = _load_valid(spec.inputs[0], profile, err)
    if loaded is None:
        return FAILED
    if spec.flags.get("behavior_check") and loaded.behavior is None:
        raise UsageError(f"{spec.inputs[0]} has no behavior graph to check against")
    try:
        trace = run_scenario(loaded.model, loaded.events, scenario)
    except ScenarioError as exc:
        if exc.code == "validation-failed":
            print(f"error: {exc}", file=err)
            return FAILED
        raise UsageError(f"{spec.flags['scenario']}: {exc}") from None
    _emit(trace.to_jsonl(), spec.flags.get("out"), out)
    if spec.flags.get("behavior_check"):
        diags = check_trace_conformance(trace, loaded.behavior)
        for d in diags:
            print(d.render(), file=err)
        if diags:
            return FAILED
    return OK


def _cmd_export(spec: CommandSpec, profile: Profile, out: TextIO, err: TextIO) -> int:
    if len(spec.inputs) != 1:
        raise UsageError("export takes exactly one model file")
    loaded = _load_valid(spec.inputs[0], profile, err)
    if loaded is None:
        return FAILED
    options = ExportOptions(spec.flags.get("flavor") or "model-dot", not spec.flags.get("no_labels"))
    _emit(export(loaded.model, loaded.events, loaded.behavior, options), spec.flags.get("out"), out)
    return OK


def _cmd_fmt(spec: CommandSpec, profile: Profile, out: TextIO, err: TextIO) -> int:
    status = OK
    if spec.flags.get("out") and len(spec.inputs) != 1:
        raise UsageError("--out needs exactly one input file")
    for path in spec.inputs:
        text = _read(path)
        result = parse_model(text, profile, Path(path).name)
        if not result.ok:
            for d in result.diagnostics:
                print(d.render(), file=err)
            status = FAILED
            continue
        canonical = format_model(result.model, result.events, result.behavior)
        if spec.flags.get("check"):
            if canonical != text:
                print(f"{path}: not canonically formatted", file=out)
                status = FAILED
        elif spec.flags.get("out"):
            _write(spec.flags["out"], canonical)
        elif canonical != text:
            _write(path, canonical)
    return status


_HANDLERS = {
    "check": _cmd_check,
    "components": _cmd_components,
    "events": _cmd_events,
    "simulate": _cmd_simulate,
    "export": _cmd_export,
    "fmt": _cmd_fmt,
}


def execute_command(spec: CommandSpec, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        if spec.verb not in _HANDLERS:
            raise UsageError(f"unknown verb {spec.verb!r}")
        if not spec.inputs:
            raise UsageError(f"{spec.verb} needs at least one input file")
        raw = spec.flags.get("profile") or os.environ.get("TM_PROFILE") or "strict"
        try:
            profile = Profile(raw)
        except ValueError:
            raise UsageError(f"unknown profile {raw!r}; expected strict, lenient or extended") from None
        return _HANDLERS[spec.verb](spec, profile, out, err)
    except UsageError as exc:
        print(f"tm: {exc}", file=err)
        return USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tm", description="Thinging-machine model toolkit")
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("inputs", nargs="+", metavar="FILE")
    parser.add_argument("--profile", choices=[p.value for p in Profile],
                        help="validation profile (default: $TM_PROFILE or strict)")
    parser.add_argument("--scenario", metavar="FILE", help="scenario JSON for simulate")
    parser.add_argument("--behavior-check", action="store_true",
                        help="check the trace against the file's behavior graph")
    parser.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    parser.add_argument("--flavor", choices=FLAVORS, help="export/components output flavor")
    parser.add_argument("--no-labels", action="store_true", help="omit arc labels from DOT output")
    parser.add_argument("--check", action="store_true", help="fmt: report non-canonical files without rewriting")
    return parser


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None,
         err: Optional[TextIO] = None) -> int:
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE
    flags = {k: v for k, v in vars(args).items() if k not in ("verb", "inputs")}
    return execute_command(CommandSpec(args.verb, list(args.inputs), flags), out, err)


def _entry():
    for stream in (sys.stdout, sys.stderr):
        if hasattr(stream, "reconfigure"):
            stream.reconfigure(encoding="utf-8")
    sys.exit(main())


if __name__ == "__main__":
    _entry()
