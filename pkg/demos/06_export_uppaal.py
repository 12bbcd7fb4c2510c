"""Emit the integrated composition as timed-automata text plus queries.

States become locations and transitions become edges; the timer is a clock
process with invariant x<=1 whose reset edge advances the shared minute
counter; guarded entry actions are compiled onto the incoming edges. The
query sidecar mirrors the invariant properties.
"""

from pathlib import Path

from resweave import export_queries, export_xta, parse_model, parse_properties, parse_resource_map, parse_schedule, scan_xta
from resweave.cli import build_composition

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

model = parse_model((FIXTURES / "stroke_simple.json").read_text())
resource_map = parse_resource_map((FIXTURES / "stroke_simple.map").read_text())
schedule = parse_schedule((FIXTURES / "schedule_delayed_ct.txt").read_text())
composition, _ = build_composition(model, resource_map, schedule)

document = export_xta(composition)
print(document)
print("// well-formedness problems:", scan_xta(document) or "none")

properties = parse_properties((FIXTURES / "props_simple.txt").read_text(), composition)
print("\n// query sidecar:")
print(export_queries(properties))
