"""Deterministic discrete-time execution of parallel chart compositions.

One macro-step is one minute. Within a step the fixed order is: the timer
chart (advancing the shared clock), scenario injections due at the new
minute, every resource chart, then every guideline chart. Each chart fires
at most one transition per step, chosen by declaration order among enabled
ones; firing runs the source's exit actions, the transition's actions, then
the target's entry actions, re-entering on self-loops. Events raised earlier
in a step are visible to charts executed later and are cleared at the step
boundary.

Scenario documents are UTF-8 JSON:

    {"initial": {"onsetT": 0},
     "injections": [{"t": 20, "var": "orderCT", "value": true}],
     "choices": [{"var": "hemorrhage", "domain": [false, true]}],
     "horizon": 720}

A scenario must be fully resolved (no choices) before simulation; choice
enumeration lives in `check`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from . import expr as ex
from .errors import ResweaveError
from .model import (
    Raise,
    StatechartModel,
    Transition,
    VariableDecl,
    is_tick_trigger,
    validate_model,
)
from .resources import CLOCK_VARIABLE

DEFAULT_HORIZON = 720


class SimulationError(ResweaveError):
    pass


class ScenarioError(ResweaveError):
    pass


# ---------------------------------------------------------------------------
# Composition


@dataclass(frozen=True)
class Composition:
    """Charts in execution order: timer, then resource charts, then guidelines."""

    timer: StatechartModel | None = None
    resources: tuple[StatechartModel, ...] = ()
    guidelines: tuple[StatechartModel, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "resources", tuple(self.resources))
        object.__setattr__(self, "guidelines", tuple(self.guidelines))

    @property
    def charts(self) -> tuple[StatechartModel, ...]:
        head = (self.timer,) if self.timer is not None else ()
        return head + self.resources + self.guidelines

    def merged_variables(self) -> tuple[VariableDecl, ...]:
        """Union of chart declarations; same-name declarations must agree."""
        merged: dict[str, tuple[VariableDecl, str]] = {}
        for chart in self.charts:
            for decl in chart.variables:
                previous = merged.get(decl.name)
                if previous is None:
                    merged[decl.name] = (decl, chart.name)
                elif previous[0] != decl:
                    raise SimulationError(
                        f"variable {decl.name!r} declared as {previous[0].kind}="
                        f"{previous[0].initial!r} in chart {previous[1]!r} but as "
                        f"{decl.kind}={decl.initial!r} in chart {chart.name!r}"
                    )
        return tuple(decl for decl, _ in merged.values())

    def merged_events(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for chart in self.charts:
            for event in chart.events:
                seen.setdefault(event, None)
        return tuple(seen)


def validate_composition(composition: Composition) -> None:
    names = [chart.name for chart in composition.charts]
    if not names:
        raise SimulationError("composition has no charts")
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise SimulationError(f"duplicate chart names in composition: {sorted(dupes)}")
    for chart in composition.charts:
        diagnostics = validate_model(chart)
        if diagnostics:
            raise SimulationError(f"chart {chart.name!r} is invalid: {diagnostics[0]}")
    composition.merged_variables()


# ---------------------------------------------------------------------------
# Scenarios


@dataclass(frozen=True)
class Injection:
    t: int
    var: str
    value: int | bool


@dataclass(frozen=True)
class Choice:
    var: str
    domain: tuple[int | bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))


@dataclass(frozen=True)
class Scenario:
    initial: dict[str, int | bool] = field(default_factory=dict)
    injections: tuple[Injection, ...] = ()
    choices: tuple[Choice, ...] = ()
    horizon: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "initial", dict(self.initial))
        object.__setattr__(self, "injections", tuple(self.injections))
        object.__setattr__(self, "choices", tuple(self.choices))

    @property
    def resolved(self) -> bool:
        return not self.choices

    def resolve(self, assignment: dict[str, int | bool]) -> "Scenario":
        """Fold a choice assignment into the initial values."""
        missing = [c.var for c in self.choices if c.var not in assignment]
        if missing:
            raise ScenarioError(f"unresolved choice variables: {missing}")
        unknown = sorted(set(assignment) - {c.var for c in self.choices})
        if unknown:
            raise ScenarioError(f"not choice variables of this scenario: {unknown}")
        initial = dict(self.initial)
        for choice in self.choices:
            initial[choice.var] = assignment[choice.var]
        return replace(self, initial=initial, choices=())


def parse_scenario(text: str) -> Scenario:
    try:
        root = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{err.msg} (line {err.lineno}, column {err.colno})") from None
    if not isinstance(root, dict):
        raise ScenarioError("scenario document must be a JSON object")
    known = {"initial", "injections", "choices", "horizon"}
    for key in root:
        if key not in known:
            raise ScenarioError(f"unknown scenario key {key!r}")
    initial = root.get("initial", {})
    if not isinstance(initial, dict) or not all(_is_literal(v) for v in initial.values()):
        raise ScenarioError("'initial' must map variables to int/bool literals")
    injections = []
    for i, obj in enumerate(_as_list(root.get("injections", []), "injections")):
        if (
            not isinstance(obj, dict)
            or not isinstance(obj.get("t"), int)
            or isinstance(obj.get("t"), bool)
            or not isinstance(obj.get("var"), str)
            or not _is_literal(obj.get("value"))
        ):
            raise ScenarioError(f"injections[{i}] must be {{'t': minutes, 'var': name, 'value': literal}}")
        injections.append(Injection(obj["t"], obj["var"], obj["value"]))
    choices = []
    for i, obj in enumerate(_as_list(root.get("choices", []), "choices")):
        if (
            not isinstance(obj, dict)
            or not isinstance(obj.get("var"), str)
            or not isinstance(obj.get("domain"), list)
            or not obj["domain"]
            or not all(_is_literal(v) for v in obj["domain"])
        ):
            raise ScenarioError(f"choices[{i}] must be {{'var': name, 'domain': [literals]}}")
        choices.append(Choice(obj["var"], tuple(obj["domain"])))
    horizon = root.get("horizon")
    if horizon is not None and (isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 0):
        raise ScenarioError("'horizon' must be a nonnegative integer")
    return Scenario(dict(initial), tuple(injections), tuple(choices), horizon)


def serialize_scenario(scenario: Scenario) -> str:
    root: dict = {"initial": dict(scenario.initial)}
    if scenario.injections:
        root["injections"] = [{"t": i.t, "var": i.var, "value": i.value} for i in scenario.injections]
    if scenario.choices:
        root["choices"] = [{"var": c.var, "domain": list(c.domain)} for c in scenario.choices]
    if scenario.horizon is not None:
        root["horizon"] = scenario.horizon
    return json.dumps(root, indent=2, sort_keys=True) + "\n"


def _as_list(obj, what: str) -> list:
    if not isinstance(obj, list):
        raise ScenarioError(f"'{what}' must be a list")
    return obj


def _is_literal(value) -> bool:
    return isinstance(value, bool) or (isinstance(value, int) and ex.INT_MIN <= value <= ex.INT_MAX)


def validate_scenario(scenario: Scenario, composition: Composition) -> None:
    """Check every referenced variable is declared with a matching kind."""
    kinds = {v.name: v.kind for v in composition.merged_variables()}

    def check(var: str, value, where: str) -> None:
        kind = kinds.get(var)
        if kind is None:
            raise ScenarioError(f"{where} references undeclared variable {var!r}")
        is_bool = isinstance(value, bool)
        if (kind == ex.KIND_BOOLEAN) != is_bool:
            raise ScenarioError(f"{where}: value {value!r} does not match {kind} variable {var!r}")

    for var, value in scenario.initial.items():
        check(var, value, "initial")
    for injection in scenario.injections:
        if injection.t < 0 or (scenario.horizon is not None and injection.t > scenario.horizon):
            raise ScenarioError(f"injection time {injection.t} outside [0, horizon]")
        check(injection.var, injection.value, f"injection at t={injection.t}")
    for choice in scenario.choices:
        if not choice.domain:
            raise ScenarioError(f"choice {choice.var!r} has an empty domain")
        for value in choice.domain:
            check(choice.var, value, f"choice {choice.var!r}")


# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True)
class FireRecord:
    """One chart's activity in a step: a fired transition or an initial entry."""

    chart: str
    source: str | None  # None for the initial-state entry at t=0
    target: str
    index: int | None  # transition declaration index; None at t=0
    sets: tuple[tuple[str, int | bool], ...]  # value-changing writes, in order
    raised: tuple[str, ...]


@dataclass(frozen=True)
class StepReport:
    t: int
    injected: tuple[tuple[str, int | bool], ...]
    fires: tuple[FireRecord, ...]
    raised: tuple[str, ...]
    deltas: dict[str, int | bool]  # net value changes across the step


@dataclass(frozen=True)
class Trace:
    initial_active: dict[str, str]
    initial_valuation: dict[str, int | bool]
    steps: tuple[StepReport, ...]  # steps[0] is the initialization report (t=0)


def trace_to_json(trace: Trace) -> str:
    root = {
        "initial_active": trace.initial_active,
        "initial_valuation": trace.initial_valuation,
        "steps": [
            {
                "t": step.t,
                "injected": [[var, value] for var, value in step.injected],
                "fires": [
                    {
                        "chart": fire.chart,
                        "source": fire.source,
                        "target": fire.target,
                        "index": fire.index,
                        "sets": [[var, value] for var, value in fire.sets],
                        "raised": list(fire.raised),
                    }
                    for fire in step.fires
                ],
                "raised": list(step.raised),
                "deltas": step.deltas,
            }
            for step in trace.steps
        ],
    }
    return json.dumps(root, indent=2, sort_keys=True) + "\n"


def _value_text(value: int | bool) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def trace_lines(trace: Trace) -> list[str]:
    """Human-readable step log, one line per injection or chart activity.

    State-preserving no-ops (initial entries and self-loop re-entries that
    change nothing) are omitted; the JSON trace keeps them.
    """
    lines = []
    for step in trace.steps:
        for var, value in step.injected:
            lines.append(f"t={step.t} inject {var}={_value_text(value)}")
        for fire in step.fires:
            if fire.source is None:
                head = f"t={step.t} chart={fire.chart} init={fire.target}"
                if not fire.sets and not fire.raised:
                    continue
            else:
                head = f"t={step.t} chart={fire.chart} fire={fire.source}->{fire.target}"
                if fire.source == fire.target and not fire.sets and not fire.raised:
                    continue
            parts = [head]
            parts.extend(f"set {var}={_value_text(value)}" for var, value in fire.sets)
            parts.extend(f"raise {event}" for event in fire.raised)
            lines.append(" ".join(parts))
    return lines


# ---------------------------------------------------------------------------
# Execution


class _ChartIndex:
    def __init__(self, chart: StatechartModel):
        self.chart = chart
        self.states = {s.name: s for s in chart.states}
        self.by_source: dict[str, list[Transition]] = {}
        for transition in chart.transitions:
            self.by_source.setdefault(transition.source, []).append(transition)


@dataclass
class SimState:
    """Mutable execution context; confine to one thread at a time."""

    composition: Composition
    scenario: Scenario
    active: dict[str, str]
    valuation: dict[str, int | bool]
    curT: int
    pending_events: list[str]
    init_report: StepReport
    initial_active: dict[str, str]
    initial_valuation: dict[str, int | bool]
    indexes: dict[str, _ChartIndex]
    injections_by_time: dict[int, list[Injection]]


class _StepBuilder:
    def __init__(self, state: "SimState", t: int):
        self.state = state
        self.t = t
        self.injected: list[tuple[str, int | bool]] = []
        self.fires: list[FireRecord] = []
        self.raised: list[str] = []
        self.before = dict(state.valuation)

    def finish(self) -> StepReport:
        deltas = {
            var: value
            for var, value in self.state.valuation.items()
            if self.before.get(var) != value
        }
        report = StepReport(
            t=self.t,
            injected=tuple(self.injected),
            fires=tuple(self.fires),
            raised=tuple(self.raised),
            deltas=deltas,
        )
        self.state.pending_events.clear()
        return report


def _write(state: SimState, var: str, value: int | bool, where: str, sets: list | None) -> None:
    if var not in state.valuation:
        raise SimulationError(f"{where}: assignment to undeclared variable {var!r}")
    if state.valuation[var] != value:
        if sets is not None:
            sets.append((var, value))
        state.valuation[var] = value


def _run_actions(state, actions, builder, sets, raised, where: str) -> None:
    for action in actions:
        if isinstance(action, Raise):
            state.pending_events.append(action.event)
            raised.append(action.event)
            builder.raised.append(action.event)
        else:
            value = ex.eval_expr(action.value, state.valuation)
            _write(state, action.target, value, where, sets)


def _run_guarded_actions(state, guarded, builder, sets, raised, where: str) -> None:
    for i, ga in enumerate(guarded):
        if ex.eval_expr(ga.guard, state.valuation):
            _run_actions(state, (ga.action,), builder, sets, raised, f"{where}[{i}]")


def _enter_initial(state: SimState, chart: StatechartModel, builder: _StepBuilder) -> None:
    index = state.indexes[chart.name]
    initial = index.states[chart.initial_state]
    sets: list[tuple[str, int | bool]] = []
    raised: list[str] = []
    _run_guarded_actions(
        state, initial.entry_actions, builder, sets, raised, f"{chart.name}.{initial.name}.entry"
    )
    builder.fires.append(
        FireRecord(chart.name, None, initial.name, None, tuple(sets), tuple(raised))
    )


def _trigger_enabled(state: SimState, transition: Transition) -> bool:
    if transition.trigger is None or is_tick_trigger(transition.trigger):
        return True
    return transition.trigger in state.pending_events


def _chart_cycle(state: SimState, chart: StatechartModel, builder: _StepBuilder) -> None:
    index = state.indexes[chart.name]
    source_name = state.active[chart.name]
    fired: Transition | None = None
    for transition in index.by_source.get(source_name, ()):
        if _trigger_enabled(state, transition) and ex.eval_expr(transition.guard, state.valuation):
            fired = transition
            break
    if fired is None:
        return
    _fire(state, chart, fired, builder)


def _fire(state: SimState, chart: StatechartModel, transition: Transition, builder: _StepBuilder) -> None:
    index = state.indexes[chart.name]
    source = index.states[transition.source]
    target = index.states[transition.target]
    sets: list[tuple[str, int | bool]] = []
    raised: list[str] = []
    where = f"{chart.name}.{transition.source}->{transition.target}"
    _run_guarded_actions(state, source.exit_actions, builder, sets, raised, f"{where}.exit")
    _run_actions(state, transition.actions, builder, sets, raised, f"{where}.actions")
    state.active[chart.name] = target.name
    _run_guarded_actions(state, target.entry_actions, builder, sets, raised, f"{where}.entry")
    builder.fires.append(
        FireRecord(
            chart.name, transition.source, transition.target, transition.priority,
            tuple(sets), tuple(raised),
        )
    )


def init_composition(composition: Composition, scenario: Scenario) -> SimState:
    """Build the t=0 state: defaults, then scenario values, then initial entries.

    The scenario must be fully resolved. Injections scheduled at t=0 are
    applied with the initial values, before any entry action runs.
    """
    validate_composition(composition)
    if not scenario.resolved:
        raise ScenarioError(
            f"scenario has unresolved choices: {[c.var for c in scenario.choices]}"
        )
    validate_scenario(scenario, composition)

    valuation = {decl.name: decl.initial for decl in composition.merged_variables()}
    indexes = {chart.name: _ChartIndex(chart) for chart in composition.charts}
    injections_by_time: dict[int, list[Injection]] = {}
    for injection in scenario.injections:
        injections_by_time.setdefault(injection.t, []).append(injection)

    state = SimState(
        composition=composition,
        scenario=scenario,
        active={},
        valuation=valuation,
        curT=0,
        pending_events=[],
        init_report=StepReport(0, (), (), (), {}),
        initial_active={},
        initial_valuation={},
        indexes=indexes,
        injections_by_time=injections_by_time,
    )
    builder = _StepBuilder(state, 0)
    # Baseline for init deltas is the declaration defaults.
    for var, value in scenario.initial.items():
        builder.injected.append((var, value))
        _write(state, var, value, "scenario initial", None)
    for injection in injections_by_time.get(0, ()):
        builder.injected.append((injection.var, injection.value))
        _write(state, injection.var, injection.value, "injection at t=0", None)
    for chart in composition.charts:
        state.active[chart.name] = chart.initial_state
        _enter_initial(state, chart, builder)
    state.init_report = builder.finish()
    state.initial_active = dict(state.active)
    state.initial_valuation = dict(state.valuation)
    return state


def macro_step(state: SimState) -> StepReport:
    """Advance one minute; see the module docstring for the in-step order."""
    state.curT += 1
    builder = _StepBuilder(state, state.curT)
    if state.composition.timer is not None:
        _chart_cycle(state, state.composition.timer, builder)
    for injection in state.injections_by_time.get(state.curT, ()):
        builder.injected.append((injection.var, injection.value))
        _write(state, injection.var, injection.value, f"injection at t={state.curT}", None)
    for chart in state.composition.resources:
        _chart_cycle(state, chart, builder)
    for chart in state.composition.guidelines:
        _chart_cycle(state, chart, builder)
    return builder.finish()


def _time_sensitive(composition: Composition) -> bool:
    if composition.timer is not None:
        return True
    for chart in composition.charts:
        for transition in chart.transitions:
            if CLOCK_VARIABLE in ex.variables(transition.guard):
                return True
        for state in chart.states:
            for ga in (*state.entry_actions, *state.exit_actions):
                if CLOCK_VARIABLE in ex.variables(ga.guard):
                    return True
    return False


def run(state: SimState, horizon: int, stop_when_quiescent: bool = False) -> Trace:
    """Execute macro-steps from a fresh state up to the horizon.

    Quiescence stopping is conservative: it never triggers for compositions
    with a timer or clock-reading guards, and otherwise stops once a step
    changes nothing and no injections remain.
    """
    if state.curT != 0:
        raise SimulationError("run requires a freshly initialized state")
    steps: list[StepReport] = [state.init_report]
    may_quiesce = stop_when_quiescent and not _time_sensitive(state.composition)
    while state.curT < horizon:
        report = macro_step(state)
        steps.append(report)
        if (
            may_quiesce
            and not report.fires
            and not report.deltas
            and not any(t > state.curT for t in state.injections_by_time)
        ):
            break
    return Trace(dict(state.initial_active), dict(state.initial_valuation), tuple(steps))


def replay_trace(composition: Composition, trace: Trace) -> Trace:
    """Re-execute a trace's recorded fires and injections, without guard checks.

    Transition enablement is not re-evaluated; the recorded declaration
    indexes select what to fire. Returns the reproduced trace for comparison
    against the original.
    """
    validate_composition(composition)
    state = SimState(
        composition=composition,
        scenario=Scenario(),
        active={},
        valuation={decl.name: decl.initial for decl in composition.merged_variables()},
        curT=0,
        pending_events=[],
        init_report=StepReport(0, (), (), (), {}),
        initial_active={},
        initial_valuation={},
        indexes={chart.name: _ChartIndex(chart) for chart in composition.charts},
        injections_by_time={},
    )
    charts = {chart.name: chart for chart in composition.charts}
    if not trace.steps:
        raise SimulationError("trace has no initialization step")

    init = trace.steps[0]
    builder = _StepBuilder(state, 0)
    for var, value in init.injected:
        builder.injected.append((var, value))
        _write(state, var, value, "replayed initial", None)
    for fire in init.fires:
        chart = charts[fire.chart]
        state.active[chart.name] = chart.initial_state
        _enter_initial(state, chart, builder)
    state.init_report = builder.finish()
    state.initial_active = dict(state.active)
    state.initial_valuation = dict(state.valuation)

    steps = [state.init_report]
    timer_name = composition.timer.name if composition.timer is not None else None
    for step in trace.steps[1:]:
        state.curT += 1
        builder = _StepBuilder(state, state.curT)
        fires = list(step.fires)
        # Mirror the live ordering: the timer's fire precedes injections.
        if fires and fires[0].chart == timer_name:
            timer_fire = fires.pop(0)
            _fire(state, charts[timer_fire.chart], charts[timer_fire.chart].transitions[timer_fire.index], builder)
        for var, value in step.injected:
            builder.injected.append((var, value))
            _write(state, var, value, f"replayed injection at t={step.t}", None)
        for fire in fires:
            chart = charts[fire.chart]
            _fire(state, chart, chart.transitions[fire.index], builder)
        steps.append(builder.finish())
    return Trace(dict(state.initial_active), dict(state.initial_valuation), tuple(steps))
