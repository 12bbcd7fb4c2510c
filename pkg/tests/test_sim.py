import random

import pytest

from resweave import expr as ex
from resweave import sim
from resweave.model import (
    Assign,
    GuardedAction,
    Raise,
    State,
    StatechartModel,
    Transition,
    VariableDecl,
)
from resweave.resources import Window, is_available, parse_schedule, synthesize_timer

from generators import gen_composition, gen_scenario


def timer_only() -> sim.Composition:
    return sim.Composition(timer=synthesize_timer(), resources=(), guidelines=())


def test_init_timer_only():
    state = sim.init_composition(timer_only(), sim.Scenario())
    assert state.curT == 0
    assert state.active == {"Timer": "timer"}
    assert state.valuation == {"curT": 0}


def test_timer_alone_counts_steps():
    state = sim.init_composition(timer_only(), sim.Scenario())
    for _ in range(10):
        sim.macro_step(state)
    assert state.curT == 10
    assert state.valuation["curT"] == 10


def test_init_resource_flags_match_availability(delayed_composition, simple_scenario):
    resolved = simple_scenario.resolve(
        {"hemorrhage": False, "systolicBP": 150, "diastolicBP": 100}
    )
    state = sim.init_composition(delayed_composition, resolved)
    assert state.curT == 0
    schedule = {
        "CT_machine": (Window(200, float("inf")),),
        "CT_technician": (Window(200, float("inf")),),
        "tPA": (Window(-1, float("inf")),),
    }
    for resource, windows in schedule.items():
        assert state.valuation[f"RES.{resource}"] == is_available(windows, 0)


def test_init_rejects_undeclared_variable(delayed_composition):
    with pytest.raises(sim.ScenarioError, match="nonesuch"):
        sim.init_composition(delayed_composition, sim.Scenario(initial={"nonesuch": 1}))


def test_init_rejects_unresolved_choices(delayed_composition, simple_scenario):
    with pytest.raises(sim.ScenarioError, match="hemorrhage"):
        sim.init_composition(delayed_composition, simple_scenario)


def test_inconsistent_declarations_rejected():
    a = StatechartModel(
        "A", variables=(VariableDecl("x", "integer", 0),), states=(State("s"),), initial_state="s"
    )
    b = StatechartModel(
        "B", variables=(VariableDecl("x", "boolean", False),), states=(State("s"),), initial_state="s"
    )
    with pytest.raises(sim.SimulationError, match="'x'"):
        sim.init_composition(sim.Composition(guidelines=(a, b)), sim.Scenario())


def test_duplicate_chart_names_rejected():
    a = StatechartModel("A", states=(State("s"),), initial_state="s")
    with pytest.raises(sim.SimulationError, match="duplicate"):
        sim.init_composition(sim.Composition(guidelines=(a, a)), sim.Scenario())


def test_quiet_chart_reports_no_fires():
    chart = StatechartModel("Quiet", states=(State("s"),), initial_state="s")
    state = sim.init_composition(sim.Composition(guidelines=(chart,)), sim.Scenario())
    report = sim.macro_step(state)
    assert report.fires == ()
    assert report.deltas == {}


def _delayed_state(delayed_composition, simple_scenario, **choices):
    assignment = {"hemorrhage": False, "systolicBP": 150, "diastolicBP": 100}
    assignment.update(choices)
    resolved = simple_scenario.resolve(assignment)
    return sim.init_composition(delayed_composition, resolved)


def test_blocked_until_resources_appear(delayed_composition, simple_scenario):
    state = _delayed_state(delayed_composition, simple_scenario)
    entered_ct_at = None
    for _ in range(210):
        report = sim.macro_step(state)
        if state.curT <= 200:
            assert state.active["Stroke"] in ("Start", "NeuAss")
        stroke_fires = [f for f in report.fires if f.chart == "Stroke"]
        if any(f.target == "CT" for f in stroke_fires):
            entered_ct_at = state.curT
            assert "CTscan" in report.raised
    assert entered_ct_at == 201


def test_run_ideal_reaches_tpa_within_window(ideal_composition, simple_scenario):
    resolved = simple_scenario.resolve(
        {"hemorrhage": False, "systolicBP": 150, "diastolicBP": 100}
    )
    state = sim.init_composition(ideal_composition, resolved)
    trace = sim.run(state, 720)
    assert state.active["Stroke"] == "tPA"
    assert state.valuation["tpaT"] - state.valuation["onsetT"] <= 180
    fired = [(s.t, f.source, f.target) for s in trace.steps for f in s.fires if f.chart == "Stroke"]
    assert (20, "NeuAss", "CT") in fired
    assert (23, "tPAcheck", "tPA") in fired


def test_run_delayed_misses_window(delayed_composition, simple_scenario):
    state = _delayed_state(delayed_composition, simple_scenario)
    trace = sim.run(state, 720)
    fired = [(s.t, f.source, f.target) for s in trace.steps for f in s.fires if f.chart == "Stroke"]
    assert (203, "BPCheck", "tPAcheck") in fired
    assert state.valuation["tpaT"] - state.valuation["onsetT"] > 180


def test_run_horizon_zero_is_initialization_only(delayed_composition, simple_scenario):
    state = _delayed_state(delayed_composition, simple_scenario)
    trace = sim.run(state, 0)
    assert len(trace.steps) == 1
    assert trace.steps[0].t == 0


def test_clock_soundness_and_resource_coherence(delayed_composition, simple_scenario):
    state = _delayed_state(delayed_composition, simple_scenario)
    schedule = parse_schedule(
        "CT_machine: (200, inf)\nCT_technician: (200, inf)\ntPA: (-1, inf)\n"
    )
    for k in range(1, 301):
        sim.macro_step(state)
        assert state.curT == k
        assert state.valuation["curT"] == k
        for resource in ("CT_machine", "CT_technician", "tPA"):
            expected = is_available(schedule.windows_for(resource), k)
            assert state.valuation[f"RES.{resource}"] == expected


def test_single_fire_per_chart_per_step(delayed_composition, simple_scenario):
    state = _delayed_state(delayed_composition, simple_scenario)
    for _ in range(250):
        report = sim.macro_step(state)
        charts = [f.chart for f in report.fires]
        assert len(charts) == len(set(charts))


def test_determinism_byte_identical(delayed_composition, simple_scenario):
    resolved = simple_scenario.resolve(
        {"hemorrhage": True, "systolicBP": 190, "diastolicBP": 120}
    )
    traces = []
    for _ in range(2):
        state = sim.init_composition(delayed_composition, resolved)
        traces.append(sim.trace_to_json(sim.run(state, 400)))
    assert traces[0] == traces[1]


def test_replay_reproduces_trace(delayed_composition, simple_scenario):
    resolved = simple_scenario.resolve(
        {"hemorrhage": False, "systolicBP": 150, "diastolicBP": 100}
    )
    state = sim.init_composition(delayed_composition, resolved)
    trace = sim.run(state, 300)
    replayed = sim.replay_trace(delayed_composition, trace)
    assert sim.trace_to_json(replayed) == sim.trace_to_json(trace)


def test_injection_visible_same_minute():
    chart = StatechartModel(
        "G",
        variables=(VariableDecl("go", "boolean", False),),
        states=(State("a"), State("b")),
        transitions=(Transition("a", "b", guard=ex.Var("go")),),
        initial_state="a",
    )
    scenario = sim.Scenario(injections=(sim.Injection(3, "go", True),))
    state = sim.init_composition(sim.Composition(guidelines=(chart,)), scenario)
    for _ in range(2):
        assert sim.macro_step(state).fires == ()
    report = sim.macro_step(state)
    assert [(f.source, f.target) for f in report.fires] == [("a", "b")]
    assert report.injected == (("go", True),)


def test_injection_at_time_zero_applies_before_entry():
    chart = StatechartModel(
        "G",
        variables=(
            VariableDecl("seen", "integer", 0),
            VariableDecl("x", "integer", 0),
        ),
        states=(State("a", entry_actions=(GuardedAction(Assign("seen", ex.Var("x"))),),),),
        initial_state="a",
    )
    scenario = sim.Scenario(injections=(sim.Injection(0, "x", 9),))
    state = sim.init_composition(sim.Composition(guidelines=(chart,)), scenario)
    assert state.valuation["seen"] == 9


def test_event_visible_downstream_within_step_only():
    raiser = StatechartModel(
        "Raiser",
        events=("ping",),
        states=(State("a"), State("b")),
        transitions=(Transition("a", "b", actions=(Raise("ping"),)),),
        initial_state="a",
    )
    listener = StatechartModel(
        "Listener",
        events=("ping",),
        states=(State("idle"), State("heard")),
        transitions=(Transition("idle", "heard", trigger="ping"),),
        initial_state="idle",
    )
    # listener after raiser: hears the event in the same macro-step
    state = sim.init_composition(sim.Composition(guidelines=(raiser, listener)), sim.Scenario())
    report = sim.macro_step(state)
    assert state.active == {"Raiser": "b", "Listener": "heard"}
    assert report.raised == ("ping",)
    # listener before raiser: the event is cleared at the step boundary
    state = sim.init_composition(sim.Composition(guidelines=(listener, raiser)), sim.Scenario())
    sim.macro_step(state)
    assert state.active["Listener"] == "idle"
    sim.macro_step(state)
    assert state.active["Listener"] == "idle"


def test_priority_is_declaration_order():
    chart = StatechartModel(
        "P",
        states=(State("a"), State("b"), State("c")),
        transitions=(Transition("a", "b"), Transition("a", "c")),
        initial_state="a",
    )
    state = sim.init_composition(sim.Composition(guidelines=(chart,)), sim.Scenario())
    sim.macro_step(state)
    assert state.active["P"] == "b"


def test_exit_then_actions_then_entry_order():
    chart = StatechartModel(
        "Order",
        variables=(VariableDecl("x", "integer", 0),),
        states=(
            State(
                "a",
                exit_actions=(GuardedAction(Assign("x", ex.IntLit(1))),),
            ),
            State(
                "b",
                entry_actions=(GuardedAction(Assign("x", ex.parse_expr("x*10"))),),
            ),
        ),
        transitions=(
            Transition("a", "b", actions=(Assign("x", ex.parse_expr("x+1")),)),
        ),
        initial_state="a",
    )
    state = sim.init_composition(sim.Composition(guidelines=(chart,)), sim.Scenario())
    sim.macro_step(state)
    # exit sets 1, transition makes 2, entry multiplies to 20
    assert state.valuation["x"] == 20


def test_self_loop_reexecutes_entry_actions():
    chart = StatechartModel(
        "Refresh",
        variables=(VariableDecl("n", "integer", 0),),
        states=(State("s", entry_actions=(GuardedAction(Assign("n", ex.parse_expr("n+1"))),),),),
        transitions=(Transition("s", "s"),),
        initial_state="s",
    )
    state = sim.init_composition(sim.Composition(guidelines=(chart,)), sim.Scenario())
    assert state.valuation["n"] == 1  # initial entry
    for _ in range(4):
        sim.macro_step(state)
    assert state.valuation["n"] == 5


def test_guard_monotonicity_under_integration(delayed_composition, simple_model, simple_scenario):
    resolved = simple_scenario.resolve(
        {"hemorrhage": False, "systolicBP": 150, "diastolicBP": 100}
    )
    integrated = delayed_composition.guidelines[0]
    original = {(t.source, t.target): t.guard for t in simple_model.transitions}
    state = sim.init_composition(delayed_composition, resolved)
    for _ in range(300):
        sim.macro_step(state)
        for transition in integrated.transitions:
            if ex.eval_expr(transition.guard, state.valuation):
                assert ex.eval_expr(original[(transition.source, transition.target)], state.valuation)


def test_quiescence_stops_timerless_run():
    chart = StatechartModel(
        "Once",
        states=(State("a"), State("b")),
        transitions=(Transition("a", "b"),),
        initial_state="a",
    )
    state = sim.init_composition(sim.Composition(guidelines=(chart,)), sim.Scenario())
    trace = sim.run(state, 500, stop_when_quiescent=True)
    assert len(trace.steps) < 10
    # default keeps going to the horizon
    state = sim.init_composition(sim.Composition(guidelines=(chart,)), sim.Scenario())
    assert len(sim.run(state, 500).steps) == 501


def test_run_requires_fresh_state():
    state = sim.init_composition(timer_only(), sim.Scenario())
    sim.macro_step(state)
    with pytest.raises(sim.SimulationError, match="fresh"):
        sim.run(state, 10)


def test_replay_on_generated_compositions():
    rng = random.Random(41)
    for _ in range(25):
        composition = gen_composition(rng)
        scenario = gen_scenario(rng, horizon=40)
        for resolved in _small_resolutions(scenario):
            state = sim.init_composition(composition, resolved)
            trace = sim.run(state, 40)
            replayed = sim.replay_trace(composition, trace)
            assert sim.trace_to_json(replayed) == sim.trace_to_json(trace)


def _small_resolutions(scenario):
    if scenario.resolved:
        return [scenario]
    first = {c.var: c.domain[0] for c in scenario.choices}
    last = {c.var: c.domain[-1] for c in scenario.choices}
    return [scenario.resolve(first), scenario.resolve(last)]


def test_trace_lines_format(delayed_composition, simple_scenario):
    state = _delayed_state(delayed_composition, simple_scenario)
    trace = sim.run(state, 205)
    lines = sim.trace_lines(trace)
    assert "t=20 inject orderCT=true" in lines
    assert any(line.startswith("t=201 chart=Stroke fire=NeuAss->CT") for line in lines)
    ct_line = next(line for line in lines if "fire=NeuAss->CT" in line)
    assert "raise CTscan" in ct_line


def test_scenario_roundtrip(simple_scenario):
    text = sim.serialize_scenario(simple_scenario)
    assert sim.parse_scenario(text) == simple_scenario


def test_resolve_rejects_unknown_choice_variable(simple_scenario):
    assignment = {"hemorrhage": False, "systolicBP": 150, "diastolicBP": 100, "typo": 1}
    with pytest.raises(sim.ScenarioError, match="typo"):
        simple_scenario.resolve(assignment)
