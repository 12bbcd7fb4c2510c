"""Parse a guideline chart, inspect it, evaluate guards, and round-trip it.

The model format is plain JSON with expressions and actions as strings, so
charts stay hand-editable and diff-friendly.
"""

from pathlib import Path

from resweave import eval_expr, list_raised_actions, parse_expr, parse_model, serialize_model, validate_model

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

model = parse_model((FIXTURES / "stroke_simple.json").read_text())

print(f"chart {model.name!r}: {len(model.states)} states, {len(model.transitions)} transitions")
print("states:", ", ".join(s.name for s in model.states))
print("variables:", ", ".join(f"{v.name}:{v.kind}" for v in model.variables))
print("diagnostics:", validate_model(model) or "none")

print("\nmedical actions raised per element:")
for state in model.states:
    raised = list_raised_actions(state)
    if raised:
        print(f"  state {state.name} raises {', '.join(raised)}")
for transition in model.transitions:
    raised = list_raised_actions(transition)
    if raised:
        print(f"  transition {transition.source}->{transition.target} raises {', '.join(raised)}")

print("\nevaluating the tPA eligibility predicate:")
predicate = parse_expr("systolicBP<=185 && diastolicBP<=110 && !hemorrhage")
for patient in (
    {"systolicBP": 150, "diastolicBP": 100, "hemorrhage": False},
    {"systolicBP": 190, "diastolicBP": 100, "hemorrhage": False},
    {"systolicBP": 150, "diastolicBP": 100, "hemorrhage": True},
):
    print(f"  {patient} -> {eval_expr(predicate, patient)}")

roundtripped = parse_model(serialize_model(model))
print("\nround-trip preserves the model:", roundtripped == model)
