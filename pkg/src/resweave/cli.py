"""Command-line front end: annotate, integrate, simulate, check, export.

Exit codes: 0 success (all properties hold), 1 property violation,
2 usage/parse/validation error. Warnings never change the exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import verify as chk
from . import resources as res
from . import sim
from . import weave
from .errors import ResweaveError
from .model import StatechartModel, parse_model, serialize_model
from .xta import export_queries, export_xta

DEFAULT_HORIZON = 720


class _CommandError(ResweaveError):
    pass


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise _CommandError(f"cannot read {path}: {err.strerror}") from None


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _emit(args, message: str) -> None:
    if not getattr(args, "json_diagnostics", False):
        print(message)


def _warn(args, warnings: list[str]) -> None:
    if getattr(args, "json_diagnostics", False):
        if warnings:
            print(json.dumps({"warnings": warnings}))
    else:
        for warning in warnings:
            print(f"warning: {warning}", file=sys.stderr)


# ---------------------------------------------------------------------------
# Pipeline assembly


def _annotation_resources(model: StatechartModel) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for element in (*model.states, *model.transitions):
        for resource in weave.collect_annotations(element):
            seen.setdefault(resource, None)
    return tuple(seen)


def _effective_windows(schedule: res.AvailabilitySchedule, resource: str, assume_available: bool):
    if resource in schedule.entries:
        return schedule.entries[resource]
    return res.ALWAYS if assume_available else ()


def build_composition(
    model: StatechartModel,
    resource_map: res.ResourceMap,
    schedule: res.AvailabilitySchedule,
    assume_available: bool = False,
) -> tuple[sim.Composition, list[str]]:
    """Annotate, synthesize, and integrate into a runnable composition.

    Returns the composition plus warning messages. Resource charts and RES
    variables are synthesized only for resources named by the model's
    annotations; an unannotated model yields just the timer and the model.
    """
    annotated = weave.annotate(model, resource_map)
    resources = _annotation_resources(annotated)
    warnings = [str(d) for d in weave.integration_warnings(annotated)]
    mapped = set(resource_map.unique_resources())
    for resource in resources:
        if resource not in mapped:
            warnings.append(f"annotated resource {resource!r} does not appear in the resource map")
        if resource not in schedule.entries and not assume_available:
            warnings.append(
                f"resource {resource!r} has no schedule entry and defaults to never available"
            )
    interface = res.interface_for_resources(resources)
    declared = {v.name for v in annotated.variables}
    missing = tuple(decl for decl in interface if decl.name not in declared)
    if missing:
        annotated = replace(annotated, variables=annotated.variables + missing)
    integrated = weave.integrate(annotated)
    charts = tuple(
        res.synthesize_resource_chart(r, _effective_windows(schedule, r, assume_available))
        for r in resources
    )
    composition = sim.Composition(res.synthesize_timer(), charts, (integrated,))
    return composition, warnings


def _load_schedule(args) -> res.AvailabilitySchedule:
    if getattr(args, "schedule", None):
        return res.parse_schedule(_read_text(args.schedule))
    return res.AvailabilitySchedule({}, res.DEFAULT_HORIZON)


def _load_composition(args) -> tuple[sim.Composition, list[str], str]:
    """Composition from --manifest, or built from --model/--map/--schedule."""
    if getattr(args, "manifest", None):
        if args.model or args.map:
            raise _CommandError("--manifest cannot be combined with --model/--map")
        composition = load_manifest(args.manifest)
        return composition, [], Path(args.manifest).stem
    if not args.model or not args.map:
        raise _CommandError("either --manifest or both --model and --map are required")
    model = parse_model(_read_text(args.model))
    resource_map = res.parse_resource_map(_read_text(args.map))
    schedule = _load_schedule(args)
    composition, warnings = build_composition(
        model, resource_map, schedule, args.assume_available
    )
    return composition, warnings, Path(args.model).stem


def write_manifest(composition: sim.Composition, out_dir: Path, guideline_names: dict[str, str]) -> Path:
    """Write the composition charts plus the manifest listing them in execution order."""
    manifest: dict = {"timer": None, "resources": [], "guidelines": [], "variables": []}
    if composition.timer is not None:
        name = f"{composition.timer.name}.json"
        _write_text(out_dir / name, serialize_model(composition.timer))
        manifest["timer"] = name
    for chart in composition.resources:
        name = f"{chart.name}.json"
        _write_text(out_dir / name, serialize_model(chart))
        manifest["resources"].append(name)
    for chart in composition.guidelines:
        name = guideline_names.get(chart.name, f"{chart.name}.json")
        _write_text(out_dir / name, serialize_model(chart))
        manifest["guidelines"].append(name)
    manifest["variables"] = [
        {"name": v.name, "kind": v.kind, "initial": v.initial}
        for v in composition.merged_variables()
    ]
    path = out_dir / "composition.json"
    _write_text(path, json.dumps(manifest, indent=2) + "\n")
    return path


def load_manifest(path: str) -> sim.Composition:
    base = Path(path).parent
    try:
        root = json.loads(_read_text(path))
    except json.JSONDecodeError as err:
        raise _CommandError(f"{path}: {err.msg} (line {err.lineno})") from None
    if not isinstance(root, dict):
        raise _CommandError(f"{path}: manifest must be a JSON object")

    def load_chart(name) -> StatechartModel:
        return parse_model(_read_text(str(base / name)))

    timer = load_chart(root["timer"]) if root.get("timer") else None
    resources = tuple(load_chart(n) for n in root.get("resources", []))
    guidelines = tuple(load_chart(n) for n in root.get("guidelines", []))
    composition = sim.Composition(timer, resources, guidelines)
    declared = {
        (v["name"], v["kind"], v["initial"]) for v in root.get("variables", [])
    }
    merged = {(v.name, v.kind, v.initial) for v in composition.merged_variables()}
    if declared and declared != merged:
        raise _CommandError(f"{path}: manifest variables disagree with the chart declarations")
    return composition


def _load_scenario(args, composition: sim.Composition) -> sim.Scenario:
    scenario = sim.parse_scenario(_read_text(args.scenario))
    sim.validate_scenario(scenario, composition)
    return scenario


def _effective_horizon(args, scenario: sim.Scenario) -> int:
    if args.horizon is not None:
        return args.horizon
    if scenario.horizon is not None:
        return scenario.horizon
    return DEFAULT_HORIZON


# ---------------------------------------------------------------------------
# Subcommands


def cmd_annotate(args) -> int:
    model = parse_model(_read_text(args.model))
    resource_map = res.parse_resource_map(_read_text(args.map))
    annotated = weave.annotate(model, resource_map)
    out_path = Path(args.out) / f"{Path(args.model).stem}.annotated.json"
    _write_text(out_path, serialize_model(annotated))
    for state in annotated.states:
        for annotation in state.annotations:
            _emit(args, f"state {state.name}: //@RES: {', '.join(annotation.resources)}")
    for transition in annotated.transitions:
        for annotation in transition.annotations:
            _emit(
                args,
                f"transition {transition.source}->{transition.target}: "
                f"//@RES: {', '.join(annotation.resources)}",
            )
    _emit(args, f"wrote {out_path}")
    return 0


def cmd_integrate(args) -> int:
    model = parse_model(_read_text(args.model))
    resource_map = res.parse_resource_map(_read_text(args.map))
    schedule = _load_schedule(args)
    composition, warnings = build_composition(model, resource_map, schedule, args.assume_available)
    _warn(args, warnings)
    out_dir = Path(args.out)
    stem = Path(args.model).stem
    guideline = composition.guidelines[0]
    manifest_path = write_manifest(
        composition, out_dir, {guideline.name: f"{stem}.integrated.json"}
    )
    _emit(args, f"wrote {manifest_path}")
    return 0


def cmd_simulate(args) -> int:
    composition, warnings, _ = _load_composition(args)
    _warn(args, warnings)
    scenario = _load_scenario(args, composition)
    if args.choice:
        assignment = dict(_parse_choice(item) for item in args.choice)
        scenario = scenario.resolve(assignment)
    if not scenario.resolved:
        unresolved = [c.var for c in scenario.choices]
        raise _CommandError(
            f"scenario has unresolved choices {unresolved}; pass --choice var=value for each"
        )
    horizon = _effective_horizon(args, scenario)
    state = sim.init_composition(composition, scenario)
    trace = sim.run(state, horizon)
    trace_json = sim.trace_to_json(trace)
    out_dir = Path(args.out)
    _write_text(out_dir / "trace.json", trace_json)
    _write_text(out_dir / "trace.txt", "\n".join(sim.trace_lines(trace)) + "\n")
    for line in sim.trace_lines(trace):
        _emit(args, line)
    if args.replay:
        if _read_text(args.replay) != trace_json:
            raise _CommandError(f"replayed trace differs from {args.replay}")
        _emit(args, f"trace matches {args.replay}")
    return 0


def _parse_choice(item: str) -> tuple[str, int | bool]:
    var, sep, raw = item.partition("=")
    if not sep:
        raise _CommandError(f"--choice expects var=value, got {item!r}")
    if raw in ("true", "false"):
        return var, raw == "true"
    try:
        return var, int(raw)
    except ValueError:
        raise _CommandError(f"--choice value {raw!r} is not an int or true/false") from None


def cmd_check(args) -> int:
    composition, warnings, _ = _load_composition(args)
    _warn(args, warnings)
    scenario = _load_scenario(args, composition)
    properties = chk.parse_properties(_read_text(args.properties), composition)
    horizon = _effective_horizon(args, scenario)
    verdicts = chk.check(composition, scenario, properties, horizon, args.scenario_cap)
    out_dir = Path(args.out)
    rows = []
    for verdict in verdicts:
        entry = {"property": verdict.property, "holds": verdict.holds, "counterexample_path": None}
        if verdict.counterexample is not None:
            cx = verdict.counterexample
            cx_path = out_dir / f"{verdict.property}.counterexample.json"
            payload = {
                "property": verdict.property,
                "scenario_index": cx.scenario_index,
                "step_index": cx.step_index,
                "scenario": json.loads(sim.serialize_scenario(cx.scenario)),
                "trace": json.loads(sim.trace_to_json(cx.trace)),
            }
            _write_text(cx_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
            _write_text(
                out_dir / f"{verdict.property}.trace.txt",
                "\n".join(sim.trace_lines(cx.trace)) + "\n",
            )
            entry["counterexample_path"] = str(cx_path)
        rows.append(entry)
    _write_text(out_dir / "verdicts.json", json.dumps(rows, indent=2) + "\n")
    width = max(len(r["property"]) for r in rows) if rows else 8
    for row in rows:
        status = "holds" if row["holds"] else "FAILS"
        suffix = f"  {row['counterexample_path']}" if row["counterexample_path"] else ""
        _emit(args, f"{row['property']:<{width}}  {status}{suffix}")
    if getattr(args, "json_diagnostics", False):
        print(json.dumps(rows))
    return 0 if all(r["holds"] for r in rows) else 1


def cmd_export(args) -> int:
    composition, warnings, stem = _load_composition(args)
    _warn(args, warnings)
    out_dir = Path(args.out)
    document = export_xta(composition, flatten_names=args.flatten_names)
    xta_path = out_dir / f"{stem}.xta"
    _write_text(xta_path, document)
    _emit(args, f"wrote {xta_path}")
    if args.properties:
        properties = chk.parse_properties(_read_text(args.properties), composition)
        q_path = out_dir / f"{stem}.q"
        _write_text(q_path, export_queries(properties, flatten_names=args.flatten_names))
        _emit(args, f"wrote {q_path}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--horizon", type=int, default=None, help="minutes to explore (default: scenario's, else 720)")
    parser.add_argument("--assume-available", action="store_true",
                        help="resources missing from the schedule default to always available")
    parser.add_argument("--scenario-cap", type=int, default=chk.DEFAULT_SCENARIO_CAP,
                        help="largest allowed choice product (default: 10000)")
    parser.add_argument("--json-diagnostics", action="store_true",
                        help="machine-readable diagnostics on stdout")


def _add_composition_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", help="composition manifest from 'integrate'")
    parser.add_argument("--model", help="guideline model document")
    parser.add_argument("--map", help="resource map file")
    parser.add_argument("--schedule", help="availability schedule file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resweave",
        description="Weave resource availability into statechart guideline models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", help="attach //@RES: annotations from a resource map")
    p.add_argument("model")
    p.add_argument("map")
    _add_shared(p)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("integrate", help="synthesize charts and strengthen guards")
    p.add_argument("model")
    p.add_argument("map")
    p.add_argument("--schedule")
    _add_shared(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("simulate", help="run one resolved scenario and write traces")
    _add_composition_source(p)
    p.add_argument("--scenario", required=True)
    p.add_argument("--choice", action="append", default=[], metavar="VAR=VALUE")
    p.add_argument("--replay", help="compare the produced trace bytes against this file")
    _add_shared(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="verify invariants over all enumerated scenarios")
    _add_composition_source(p)
    p.add_argument("--scenario", required=True)
    p.add_argument("--properties", required=True)
    _add_shared(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("export", help="emit timed-automata text and query sidecar")
    _add_composition_source(p)
    p.add_argument("--properties")
    p.add_argument("--flatten-names", action=argparse.BooleanOptionalAction, default=True,
                   help="map dotted names to underscores (default: on)")
    _add_shared(p)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0
    try:
        return args.func(args)
    except ResweaveError as err:
        if getattr(args, "json_diagnostics", False):
            print(json.dumps({"error": str(err)}))
        else:
            print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
