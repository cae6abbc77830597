"""Attribute-exclusion policies and decision-invariance checking.

Redaction withholds the modifier factors of excluded attributes instead of
deleting the attributes themselves, so a simulation can still realize harm
with the true attribute values while the decision provably ignores them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import UnknownAttribute
from .model import Scenario

__all__ = ["redact", "exclusion_invariance_check", "ExclusionReport", "Witness"]


def redact(scenario: Scenario) -> Scenario:
    """Return a scenario whose modifier table ignores the policy's excluded
    attributes. The input is unmodified; attributes stay in place."""
    policy = scenario.policy
    assert policy is not None
    unknown = sorted(k for k in policy.excluded if k not in scenario.schema)
    if unknown:
        raise UnknownAttribute(f"policy excludes attributes not in the schema: {', '.join(unknown)}")
    if not policy.excluded:
        return scenario
    return replace(scenario, modifiers=scenario.modifiers.without(policy.excluded))


@dataclass(frozen=True, slots=True)
class Witness:
    """One attribute assignment and the action chosen under it."""

    assignment: tuple[tuple[str, object], ...]  # (party id, value) pairs
    chosen_action: str


@dataclass(frozen=True, slots=True)
class ExclusionReport:
    attribute: str
    invariant: bool
    witnesses: tuple[Witness, ...]


def exclusion_invariance_check(
    scenario: Scenario,
    attribute: str,
    values: Sequence[object],
    max_assignments: int = 4096,
) -> ExclusionReport:
    """Check that the chosen action does not depend on one attribute.

    Every assignment of the candidate values to the parties carrying the
    attribute is evaluated through the full decision pipeline (redaction
    included). A uniform sweep would miss asymmetric assignments, which are
    exactly the ones that expose targeting, so the product is enumerated.
    """
    from .engine import decide  # local import; engine depends on this module

    if attribute not in scenario.schema:
        raise UnknownAttribute(f"attribute {attribute!r} not in the schema")
    if len(values) < 2:
        raise ValueError("need at least two candidate values")

    carriers = [p.id for p in scenario.parties if attribute in p.attributes]
    if len(values) ** len(carriers) > max_assignments:
        raise ValueError(f"assignment space exceeds max_assignments={max_assignments}")

    witnesses: list[Witness] = []
    seen_actions: set[str] = set()
    for combo in itertools.product(values, repeat=len(carriers)):
        variant = _assign(scenario, attribute, dict(zip(carriers, combo)))
        chosen = decide(variant).chosen_action
        if chosen not in seen_actions:
            seen_actions.add(chosen)
            witnesses.append(Witness(tuple(zip(carriers, combo)), chosen))
    return ExclusionReport(
        attribute=attribute,
        invariant=len(seen_actions) <= 1,
        witnesses=tuple(witnesses),
    )


def _assign(scenario: Scenario, attribute: str, values: dict[str, object]) -> Scenario:
    parties = tuple(
        replace(p, attributes={**p.attributes, attribute: values[p.id]})
        if p.id in values
        else p
        for p in scenario.parties
    )
    return replace(scenario, parties=parties)
