"""Check the safety properties under three availability assumptions.

P1 guards the tPA eligibility conditions, P2 bounds the IV decision at 180
minutes from onset, P3 bounds the IA route at 360 minutes. Every combination
of the scenario's choice variables is explored; a property fails as soon as
any resolved scenario violates it at any minute, and the earliest violation
becomes the counterexample.
"""

from pathlib import Path

from resweave import check, parse_model, parse_properties, parse_resource_map, parse_schedule
from resweave.cli import build_composition
from resweave.resources import AvailabilitySchedule
from resweave.sim import parse_scenario

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def report(title, model_name, map_name, schedule_name, scenario_name, props_name, assume=False):
    model = parse_model((FIXTURES / model_name).read_text())
    resource_map = parse_resource_map((FIXTURES / map_name).read_text())
    if schedule_name:
        schedule = parse_schedule((FIXTURES / schedule_name).read_text())
    else:
        schedule = AvailabilitySchedule({})
    composition, _ = build_composition(model, resource_map, schedule, assume_available=assume)
    scenario = parse_scenario((FIXTURES / scenario_name).read_text())
    properties = parse_properties((FIXTURES / props_name).read_text(), composition)
    print(f"\n{title}")
    for verdict in check(composition, scenario, properties, 720):
        if verdict.holds:
            print(f"  {verdict.property}: holds")
        else:
            cx = verdict.counterexample
            print(f"  {verdict.property}: FAILS at minute {cx.step_index} "
                  f"(scenario #{cx.scenario_index})")


report(
    "every resource always available:",
    "stroke_simple.json", "stroke_simple.map", None,
    "scenario_simple.json", "props_simple.txt", assume=True,
)
report(
    "CT machine and technician on-line only after minute 200:",
    "stroke_simple.json", "stroke_simple.map", "schedule_delayed_ct.txt",
    "scenario_simple.json", "props_simple.txt",
)
report(
    "extended guideline with shift-style schedule:",
    "stroke_extended.json", "stroke_extended.map", "schedule_extended.txt",
    "scenario_extended.json", "props_extended.txt",
)
