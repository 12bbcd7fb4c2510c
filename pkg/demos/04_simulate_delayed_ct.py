"""Simulate the stroke guideline while the CT resources are off-line.

Onset at minute 0, the physician orders a CT scan at minute 20, but the CT
machine and technician only come on-line strictly after minute 200. The
integrated guards block the chart in NeuAss until minute 201, so the tPA
decision lands far outside the 3-hour window.
"""

from pathlib import Path

from resweave import init_composition, parse_model, parse_resource_map, parse_schedule, run, trace_lines
from resweave.cli import build_composition
from resweave.sim import parse_scenario

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

model = parse_model((FIXTURES / "stroke_simple.json").read_text())
resource_map = parse_resource_map((FIXTURES / "stroke_simple.map").read_text())
schedule = parse_schedule((FIXTURES / "schedule_delayed_ct.txt").read_text())
composition, _ = build_composition(model, resource_map, schedule)

scenario = parse_scenario((FIXTURES / "scenario_simple.json").read_text())
resolved = scenario.resolve({"hemorrhage": False, "systolicBP": 150, "diastolicBP": 100})

state = init_composition(composition, resolved)
trace = run(state, 250)

print("guideline activity (timer ticks elided):")
for line in trace_lines(trace):
    if "chart=Stroke" in line or "inject" in line:
        print(" ", line)

print(f"\nfinal state: {state.active['Stroke']}")
window = state.valuation["tpaT"] - state.valuation["onsetT"]
print(f"tPA decision at minute {state.valuation['tpaT']}: {window} minutes after onset "
      f"({'inside' if window <= 180 else 'outside'} the 3-hour window)")
