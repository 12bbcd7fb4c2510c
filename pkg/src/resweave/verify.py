"""Bounded invariant checking over enumerated scenarios.

Property files are UTF-8 lines (`#` comments):

    P1: A[] Stroke.tPA imply systolicBP<=185 && diastolicBP<=110 && !hemorrhage
    P2: A[] Stroke.tPAcheck imply tpaT-onsetT<=180
    Q:  A[] curT>=0

With a `Chart.State imply` prefix the predicate is only required while that
state is active; without it the predicate must hold always. Properties are
observed at initialization and after every macro-step of every resolved
scenario, so for a given horizon the verdict is exact: each resolved
scenario is deterministic and explored in full.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from . import expr as ex
from .errors import ResweaveError
from .sim import (
    Composition,
    Scenario,
    SimState,
    Trace,
    init_composition,
    macro_step,
)

DEFAULT_SCENARIO_CAP = 10_000

_PROPERTY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*:\s*A\[\]\s*(.*\S)\s*\Z")
_LOCATION_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\.([A-Za-z_][A-Za-z0-9_]*)\s+imply\s+(.*\S)\s*\Z")


class PropertyError(ResweaveError):
    pass


class ScenarioCapError(ResweaveError):
    pass


@dataclass(frozen=True)
class Invariant:
    name: str
    location: tuple[str, str] | None  # (chart, state), or None for a bare predicate
    predicate: ex.Expr


@dataclass(frozen=True)
class Counterexample:
    scenario: Scenario  # resolved
    scenario_index: int  # position in enumeration order
    step_index: int  # index into trace.steps; equals the violating minute
    trace: Trace


@dataclass(frozen=True)
class Verdict:
    property: str
    holds: bool
    counterexample: Counterexample | None = None


def parse_properties(text: str, composition: Composition | None = None) -> list[Invariant]:
    """Parse invariant lines; with a composition, resolve and type-check names."""
    invariants: list[Invariant] = []
    names: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _PROPERTY_RE.match(line)
        if not match:
            raise PropertyError(f"line {lineno}: expected 'NAME: A[] [Chart.State imply] expr'")
        name, body = match.group(1), match.group(2)
        if name in names:
            raise PropertyError(f"line {lineno}: duplicate property name {name!r}")
        names.add(name)
        location = None
        location_match = _LOCATION_RE.match(body)
        if location_match:
            location = (location_match.group(1), location_match.group(2))
            body = location_match.group(3)
        try:
            predicate = ex.parse_expr(body)
        except ex.ExprSyntaxError as err:
            raise PropertyError(f"line {lineno}: {err}") from None
        invariant = Invariant(name, location, predicate)
        if composition is not None:
            _check_invariant_names(invariant, composition, lineno)
        invariants.append(invariant)
    return invariants


def _check_invariant_names(invariant: Invariant, composition: Composition, lineno: int) -> None:
    if invariant.location is not None:
        chart_name, state_name = invariant.location
        chart = next((c for c in composition.charts if c.name == chart_name), None)
        if chart is None:
            raise PropertyError(f"line {lineno}: unknown chart {chart_name!r}")
        if state_name not in {s.name for s in chart.states}:
            raise PropertyError(f"line {lineno}: unknown state {state_name!r} in chart {chart_name!r}")
    kinds = {v.name: v.kind for v in composition.merged_variables()}
    try:
        kind = ex.type_of(invariant.predicate, kinds)
    except ex.ExprTypeError as err:
        raise PropertyError(f"line {lineno}: {err}") from None
    if kind != ex.KIND_BOOLEAN:
        raise PropertyError(f"line {lineno}: predicate must be boolean-typed")


def properties_to_text(invariants) -> str:
    lines = []
    for inv in invariants:
        if inv.location is not None:
            lines.append(f"{inv.name}: A[] {inv.location[0]}.{inv.location[1]} imply {ex.to_text(inv.predicate)}")
        else:
            lines.append(f"{inv.name}: A[] {ex.to_text(inv.predicate)}")
    return "\n".join(lines) + "\n"


def enumerate_scenarios(scenario: Scenario, cap: int = DEFAULT_SCENARIO_CAP) -> list[Scenario]:
    """Cartesian product over choice domains, lexicographic by declaration."""
    size = 1
    for choice in scenario.choices:
        size *= len(choice.domain)
    if size > cap:
        raise ScenarioCapError(
            f"choice product has {size} scenarios, above the cap of {cap}; "
            "reduce the choice domains or raise --scenario-cap"
        )
    if not scenario.choices:
        return [scenario]
    resolved = []
    domains = [choice.domain for choice in scenario.choices]
    names = [choice.var for choice in scenario.choices]
    for values in itertools.product(*domains):
        resolved.append(scenario.resolve(dict(zip(names, values))))
    return resolved


def eval_invariant(invariant: Invariant, state: SimState) -> bool:
    """Implication at an observation point: inactive location or true predicate."""
    if invariant.location is not None:
        chart, state_name = invariant.location
        if state.active.get(chart) != state_name:
            return True
    return bool(ex.eval_expr(invariant.predicate, state.valuation))


def check(
    composition: Composition,
    scenario: Scenario,
    properties,
    horizon: int,
    cap: int = DEFAULT_SCENARIO_CAP,
) -> list[Verdict]:
    """Verdict per property over every resolved scenario up to the horizon.

    A property holds iff its invariant is true at initialization and after
    every macro-step of every resolved scenario. The counterexample is the
    earliest violating step of the first violating scenario in enumeration
    order.
    """
    properties = list(properties)
    resolved_scenarios = enumerate_scenarios(scenario, cap)
    violations: dict[str, Counterexample] = {}
    for scenario_index, resolved in enumerate(resolved_scenarios):
        open_properties = [p for p in properties if p.name not in violations]
        if not open_properties:
            break
        state = init_composition(composition, resolved)
        steps = [state.init_report]
        pending: dict[str, int] = {}  # property -> violating step, first only
        for prop in open_properties:
            if prop.name not in pending and not eval_invariant(prop, state):
                pending[prop.name] = 0
        while state.curT < horizon:
            steps.append(macro_step(state))
            for prop in open_properties:
                if prop.name not in pending and not eval_invariant(prop, state):
                    pending[prop.name] = state.curT
        if pending:
            trace = Trace(dict(state.initial_active), dict(state.initial_valuation), tuple(steps))
            for name, step_index in pending.items():
                violations[name] = Counterexample(resolved, scenario_index, step_index, trace)
    return [
        Verdict(p.name, p.name not in violations, violations.get(p.name))
        for p in properties
    ]
