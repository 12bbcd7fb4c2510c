from __future__ import annotations

from pathlib import Path

import pytest

from resweave.cli import build_composition
from resweave.model import parse_model
from resweave.resources import AvailabilitySchedule, parse_resource_map, parse_schedule
from resweave.sim import parse_scenario

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def simple_model():
    return parse_model(fixture_text("stroke_simple.json"))


@pytest.fixture(scope="session")
def extended_model():
    return parse_model(fixture_text("stroke_extended.json"))


@pytest.fixture(scope="session")
def simple_map():
    return parse_resource_map(fixture_text("stroke_simple.map"))


@pytest.fixture(scope="session")
def extended_map():
    return parse_resource_map(fixture_text("stroke_extended.map"))


@pytest.fixture(scope="session")
def delayed_schedule():
    return parse_schedule(fixture_text("schedule_delayed_ct.txt"))


@pytest.fixture(scope="session")
def extended_schedule():
    return parse_schedule(fixture_text("schedule_extended.txt"))


@pytest.fixture(scope="session")
def simple_scenario():
    return parse_scenario(fixture_text("scenario_simple.json"))


@pytest.fixture(scope="session")
def extended_scenario():
    return parse_scenario(fixture_text("scenario_extended.json"))


@pytest.fixture(scope="session")
def delayed_composition(simple_model, simple_map, delayed_schedule):
    composition, warnings = build_composition(simple_model, simple_map, delayed_schedule)
    assert not warnings
    return composition


@pytest.fixture(scope="session")
def ideal_composition(simple_model, simple_map):
    composition, warnings = build_composition(
        simple_model, simple_map, AvailabilitySchedule({}), assume_available=True
    )
    assert not warnings
    return composition


@pytest.fixture(scope="session")
def extended_composition(extended_model, extended_map, extended_schedule):
    composition, warnings = build_composition(extended_model, extended_map, extended_schedule)
    assert not warnings
    return composition
