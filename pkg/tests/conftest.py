import random

import pytest

from avrisk.dsl import load_catalog, parse
from avrisk.model import (
    Action,
    CertaintyWeighting,
    FairnessPolicy,
    Outcome,
    Party,
    Interval,
    Role,
    Scenario,
    SelectionMode,
    Unit,
    WeightingMode,
)
from avrisk.valuation import MagnitudeSchedule, ModifierTable

# The 1%-gamble construction: a rule-based controller that refuses any
# certain harm to the vehicle class prefers a 99% severe crash over a
# guaranteed minor one.
PATHOLOGY_TEXT = """\
scenario squeeze_past
  description = Merge gap closes with another vehicle alongside
  unit = abstract

party other_driver
  role = other_driver

action accelerate
  label = Try to squeeze past before the gap closes

outcome severe_crash
  description = High-speed collision with the other vehicle
  magnitude = 20000
  probability = 0.99
  party = other_driver

action brake
  label = Brake and accept the low-speed contact
  hold_course = true

outcome minor_crash
  description = Low-speed contact while settling back
  magnitude = 500
  probability = 1.0
  party = other_driver
"""


@pytest.fixture(scope="session")
def pathology():
    result = parse(PATHOLOGY_TEXT)
    assert result.ok, result.diagnostics
    return result.scenario


@pytest.fixture(scope="session")
def tunnel_child():
    return load_catalog("tunnel_child")


@pytest.fixture(scope="session")
def lane_change_truck():
    return load_catalog("lane_change_truck")


@pytest.fixture(scope="session")
def lane_positioning():
    return load_catalog("lane_positioning")


@pytest.fixture(scope="session")
def motorcyclists_helmet():
    return load_catalog("motorcyclists_helmet")


@pytest.fixture(scope="session")
def pedestrian_blind_spot():
    return load_catalog("pedestrian_blind_spot")


_SEX_VALUES = ("female", "male", "unknown")
_COST_CLASSES = ("low", "mid", "high")
_ROLES = tuple(Role)


def _random_outcomes(rng: random.Random, oid_base: str, party_ids):
    outcomes = []
    budget = {}  # exclusive group -> remaining probability mass
    for oi in range(rng.randint(0, 5)):
        group = None
        if rng.random() < 0.25:
            group = f"g{rng.randint(0, 1)}"
        if group is not None:
            remaining = budget.get(group, 1.0)
            p = remaining * rng.uniform(0.05, 0.6)
            budget[group] = remaining - p
        else:
            p = rng.uniform(0.0, 1.0)
        if rng.random() < 0.1:
            p = rng.choice((0.0, 1.0)) if group is None else p
        roll = rng.random()
        if roll < 0.75:
            magnitude = rng.uniform(0.5, 50_000.0)
        elif roll < 0.9:
            magnitude = -rng.uniform(0.5, 500.0)
        else:
            magnitude = 0.0
        uncertainty = None
        if group is None and rng.random() < 0.3:
            lo = p * rng.uniform(0.0, 1.0)
            hi = p + (1.0 - p) * rng.uniform(0.0, 1.0)
            uncertainty = Interval(lo, hi)
        party = rng.choice((None,) + tuple(party_ids)) if party_ids else None
        outcomes.append(
            Outcome(
                id=f"{oid_base}_{oi}",
                magnitude=magnitude,
                probability=p,
                description=rng.choice(("", "something happens", "contact")),
                uncertainty=uncertainty,
                affected_party=party,
                exclusive_group=group,
            )
        )
    return tuple(outcomes)


def random_scenario(rng: random.Random, name: str = "generated") -> Scenario:
    """A structurally valid scenario with randomized shape and features."""
    schema = {}
    if rng.random() < 0.8:
        schema["age"] = "int"
    if rng.random() < 0.8:
        schema["helmet"] = "bool"
    if rng.random() < 0.6:
        schema["sex"] = "str"
    if rng.random() < 0.4:
        schema["mass"] = "real"
    if rng.random() < 0.3:
        schema["vehicle_cost_class"] = "str"

    parties = []
    for i in range(rng.randint(1, 4)):
        attrs = {}
        if "age" in schema and rng.random() < 0.8:
            attrs["age"] = rng.randint(5, 90)
        if "helmet" in schema and rng.random() < 0.8:
            attrs["helmet"] = rng.random() < 0.5
        if "sex" in schema and rng.random() < 0.8:
            attrs["sex"] = rng.choice(_SEX_VALUES)
        if "mass" in schema and rng.random() < 0.8:
            attrs["mass"] = rng.uniform(50.0, 40_000.0)
        if "vehicle_cost_class" in schema and rng.random() < 0.8:
            attrs["vehicle_cost_class"] = rng.choice(_COST_CLASSES)
        parties.append(
            Party(
                id=f"party_{i}",
                role=rng.choice(_ROLES),
                attributes=attrs,
                voluntary_exposure=rng.random() < 0.5,
                informed=rng.random() < 0.5,
                is_beneficiary=rng.random() < 0.3,
                is_decision_maker=i == 0 and rng.random() < 0.5,
            )
        )
    party_ids = [p.id for p in parties]

    n_actions = rng.randint(1, 4)
    hold_at = rng.randrange(-2, n_actions)
    actions = tuple(
        Action(
            id=f"act_{ai}",
            outcomes=_random_outcomes(rng, f"out_{ai}", party_ids),
            label=rng.choice(("", "some maneuver")),
            hold_course=ai == hold_at,
        )
        for ai in range(n_actions)
    )

    policy = None
    if rng.random() < 0.7:
        keys = [k for k in schema if rng.random() < 0.5]
        rationale = {k: "withheld for parity across parties" for k in keys if rng.random() < 0.3}
        policy = FairnessPolicy(excluded=frozenset(keys), rationale=rationale)

    weighting = CertaintyWeighting()
    if rng.random() < 0.4:
        weighting = CertaintyWeighting(
            mode=rng.choice((WeightingMode.linear, WeightingMode.exponential)),
            gamma=rng.choice((0.0, rng.uniform(0.1, 4.0))),
        )

    modifiers = None
    if rng.random() < 0.5:
        flags = {}
        equals = {}
        anchors = {}
        if "helmet" in schema and rng.random() < 0.8:
            flags["helmet"] = rng.uniform(0.2, 3.0)
        if "sex" in schema and rng.random() < 0.8:
            equals[("sex", "female")] = rng.uniform(0.5, 2.0)
        if "age" in schema and rng.random() < 0.8:
            anchors["age"] = ((20.0, 1.0), (70.0, rng.uniform(1.5, 4.0)))
        if "mass" in schema and rng.random() < 0.4:
            anchors["mass"] = ((100.0, rng.uniform(0.5, 1.0)), (30_000.0, rng.uniform(1.0, 5.0)))
        modifiers = ModifierTable(flags=flags, equals=equals, anchors=anchors)

    schedule = None
    if rng.random() < 0.3:
        schedule = MagnitudeSchedule(
            vsl_usd=rng.choice((9_400_000.0, 11_800_000.0)),
            travel_time_usd_per_person_hour=rng.choice((13.30, 17.81)),
            injury_cost_table={"moderate": rng.uniform(10_000, 600_000)},
        )

    return Scenario(
        name=name,
        actions=actions,
        parties=tuple(parties),
        description=rng.choice(("", "a generated situation")),
        unit=rng.choice(tuple(Unit)),
        schema=schema,
        policy=policy,
        weighting=weighting,
        selection_mode=rng.choice(tuple(SelectionMode)),
        modifiers=modifiers,
        schedule=schedule,
    )


def random_trolley(rng: random.Random) -> Scenario:
    """Two actions, {0,1} probabilities, one shared positive magnitude."""
    magnitude = rng.choice((1.0, 2.5, 7.0))
    parties = (Party(id="bystander", role=rng.choice(_ROLES)),)
    ids = rng.sample(("pull", "hold", "act_a", "act_b", "zz_last"), 2)
    hold_at = rng.randrange(-1, 2)
    actions = []
    for ai, aid in enumerate(ids):
        outcomes = tuple(
            Outcome(
                id=f"o{ai}_{oi}",
                magnitude=magnitude,
                probability=float(rng.random() < 0.6),
                affected_party="bystander" if rng.random() < 0.5 else None,
            )
            for oi in range(rng.randint(0, 5))
        )
        actions.append(Action(id=aid, outcomes=outcomes, hold_course=ai == hold_at))
    return Scenario(
        name="degenerate",
        actions=tuple(actions),
        parties=parties,
        unit=Unit.statistical_lives,
    )
