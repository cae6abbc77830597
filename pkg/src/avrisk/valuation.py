"""Monetization, certainty weighting, and fatality-probability modifiers.

The modifier factors follow the traffic-fatality statistics compiled by
Evans (2008): intoxication doubles the fatality probability, female sex
raises it by 28%, and age scales geometrically between the 20-year (1x)
and 70-year (3x) anchors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import UnknownInjuryClass
from .model import CertaintyWeighting, Party, WeightingMode

__all__ = [
    "MagnitudeSchedule",
    "Consequence",
    "ModifierTable",
    "monetize",
    "certainty_weighted_penalty",
    "apply_fatality_modifiers",
    "party_factor",
    "default_modifier_table",
    "VSL_USD",
    "TRAVEL_TIME_USD_PER_PERSON_HOUR",
]

# USDOT guidance values.
VSL_USD = 9_400_000.0
TRAVEL_TIME_USD_PER_PERSON_HOUR = 13.30


@dataclass(frozen=True)
class MagnitudeSchedule:
    """Dollar values used to translate consequences into magnitudes."""

    vsl_usd: float = VSL_USD
    travel_time_usd_per_person_hour: float = TRAVEL_TIME_USD_PER_PERSON_HOUR
    injury_cost_table: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.vsl_usd < 0 or self.travel_time_usd_per_person_hour < 0:
            raise ValueError("schedule entries must be >= 0")
        for cls, cost in self.injury_cost_table.items():
            if cost < 0:
                raise ValueError(f"injury class {cls!r} has negative cost")


@dataclass(frozen=True)
class Consequence:
    fatalities: float = 0.0
    injuries: Mapping[str, float] = field(default_factory=dict)
    person_hours: float = 0.0


def monetize(consequence: Consequence, schedule: MagnitudeSchedule | None = None) -> float:
    """Convert a consequence into dollars under the schedule."""
    schedule = schedule or MagnitudeSchedule()
    if consequence.fatalities < 0 or consequence.person_hours < 0:
        raise ValueError("consequence fields must be >= 0")
    total = consequence.fatalities * schedule.vsl_usd
    for cls in sorted(consequence.injuries):
        count = consequence.injuries[cls]
        if count < 0:
            raise ValueError(f"injury count for {cls!r} must be >= 0")
        if cls not in schedule.injury_cost_table:
            raise UnknownInjuryClass(f"no cost entry for injury class {cls!r}")
        total += count * schedule.injury_cost_table[cls]
    total += consequence.person_hours * schedule.travel_time_usd_per_person_hour
    return total


def certainty_weighted_penalty(p: float, base_value: float, w: CertaintyWeighting) -> float:
    """Expected penalty of a harm worth `base_value` occurring with
    probability p.

    Linear mode is the plain product. Exponential mode inflates the
    effective value as certainty grows: base_value * p * e^(gamma * p),
    which reduces to linear at gamma = 0 and keeps the zero-probability
    penalty at zero.
    """
    if base_value < 0:
        raise ValueError("base_value must be >= 0")
    if w.mode is WeightingMode.linear:
        return base_value * p
    return base_value * p * math.exp(w.gamma * p)


@dataclass(frozen=True)
class ModifierTable:
    """Multiplicative fatality-probability factors keyed by attribute
    predicates.

    flags: factor applies when the (boolean) attribute is true.
    equals: factor applies when the attribute equals the given value.
    anchors: per-key (value, factor) anchor points; factors interpolate
    geometrically between consecutive anchors and clamp outside them.
    """

    flags: Mapping[str, float] = field(default_factory=dict)
    equals: Mapping[tuple[str, str], float] = field(default_factory=dict)
    anchors: Mapping[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)

    def __post_init__(self):
        for factor in list(self.flags.values()) + list(self.equals.values()):
            if not factor > 0:
                raise ValueError("modifier factors must be > 0")
        for key, pts in self.anchors.items():
            if len(pts) < 1:
                raise ValueError(f"anchor table for {key!r} is empty")
            values = [v for v, _ in pts]
            if values != sorted(values) or len(set(values)) != len(values):
                raise ValueError(f"anchor values for {key!r} must be strictly increasing")
            if any(not f > 0 for _, f in pts):
                raise ValueError("anchor factors must be > 0")

    def keys(self) -> frozenset[str]:
        return frozenset(self.flags) | frozenset(k for k, _ in self.equals) | frozenset(self.anchors)

    def without(self, excluded: Iterable[str]) -> "ModifierTable":
        """Copy of the table with every rule on the excluded keys removed."""
        excluded = frozenset(excluded)
        return ModifierTable(
            flags={k: f for k, f in self.flags.items() if k not in excluded},
            equals={kv: f for kv, f in self.equals.items() if kv[0] not in excluded},
            anchors={k: a for k, a in self.anchors.items() if k not in excluded},
        )

    def factor(self, key: str, value: object) -> float:
        """Factor contributed by one attribute; 1.0 when no rule matches."""
        if key in self.flags:
            return self.flags[key] if bool(value) else 1.0
        eq = self.equals.get((key, str(value)))
        if eq is not None:
            return eq
        if key in self.anchors:
            return _interpolate(self.anchors[key], float(value))  # type: ignore[arg-type]
        return 1.0


def _interpolate(anchors: tuple[tuple[float, float], ...], x: float) -> float:
    if x <= anchors[0][0]:
        return anchors[0][1]
    if x >= anchors[-1][0]:
        return anchors[-1][1]
    for (a0, f0), (a1, f1) in zip(anchors, anchors[1:]):
        if a0 <= x <= a1:
            return f0 * (f1 / f0) ** ((x - a0) / (a1 - a0))
    raise AssertionError("unreachable: anchors cover the clamped range")


def default_modifier_table() -> ModifierTable:
    return ModifierTable(
        flags={"intoxicated": 2.0},
        equals={("sex", "female"): 1.28},
        anchors={"age": ((20.0, 1.0), (70.0, 3.0))},
    )


def party_factor(
    party: Party,
    table: ModifierTable,
    excluded: frozenset[str] = frozenset(),
) -> tuple[float, tuple[str, ...]]:
    """Combined factor for a party plus human-readable notes.

    Attributes are visited in sorted key order so the product is exactly
    permutation invariant, not merely up to rounding.
    """
    product = 1.0
    notes: list[str] = []
    for key in sorted(party.attributes):
        if key in excluded:
            continue
        f = table.factor(key, party.attributes[key])
        if f != 1.0:
            product *= f
            notes.append(f"{key}={party.attributes[key]} x{f:g}")
    return product, tuple(notes)


def apply_fatality_modifiers(
    base_p: float,
    party: Party,
    table: Optional[ModifierTable] = None,
    excluded: frozenset[str] = frozenset(),
) -> float:
    """Scale a base fatality probability by the party's matching factors,
    clamped to [0, 1]."""
    table = table or default_modifier_table()
    product, _ = party_factor(party, table, excluded)
    return min(max(base_p * product, 0.0), 1.0)
