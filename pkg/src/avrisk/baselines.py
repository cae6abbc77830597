"""Rule-hierarchy and certain-outcome deciders for side-by-side contrast.

The deontological controller protects ordered classes of road users: among
the offered actions it maximizes the probability of zero harm to the
highest exposed class, cascading down the hierarchy on ties, and it
deliberately ignores expected cost. That reading produces the
characteristic pathology where a near-hopeless gamble beats a cheap,
certain, minor harm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

from .engine import TIE_REL_TOL, apply_modifiers, cumulative_risk, select_action
from .errors import EmptyActionSet, NotATrolleyScenario
from .fairness import redact
from .model import Action, Role, Scenario, SelectionMode

__all__ = [
    "Hierarchy",
    "DEFAULT_HIERARCHY",
    "DeonDecision",
    "decide_deontological",
    "decide_trolley",
    "ComparisonReport",
    "compare",
]


@dataclass(frozen=True)
class Hierarchy:
    """Ordered protected classes; every role belongs to exactly one."""

    classes: tuple[frozenset[Role], ...]

    def __post_init__(self):
        seen: set[Role] = set()
        for cls in self.classes:
            if seen & cls:
                raise ValueError("hierarchy classes must be disjoint")
            seen |= cls
        missing = set(Role) - seen
        if missing:
            raise ValueError(f"hierarchy leaves roles unmapped: {sorted(r.value for r in missing)}")


DEFAULT_HIERARCHY = Hierarchy(
    classes=(
        frozenset({Role.pedestrian, Role.cyclist}),
        frozenset({Role.other_driver, Role.occupant}),
        frozenset({Role.object}),
    )
)


@dataclass(frozen=True, slots=True)
class DeonDecision:
    action_id: str
    rationale: str


def _zero_harm_probability(action: Action, class_roles: frozenset[Role], roles: Mapping[str, Role]) -> float:
    """P(no positive-magnitude outcome touching the class is realized).

    Independent outcomes multiply their miss probabilities; within an
    exclusive group at most one member fires, so the group misses the class
    with probability 1 minus the sum of its harmful members.
    """
    p_zero = 1.0
    group_harm: dict[str, float] = {}
    for o in action.outcomes:
        if o.magnitude <= 0 or o.affected_party is None:
            continue
        if roles.get(o.affected_party) not in class_roles:
            continue
        if o.exclusive_group is None:
            p_zero *= 1.0 - o.probability
        else:
            group_harm[o.exclusive_group] = group_harm.get(o.exclusive_group, 0.0) + o.probability
    for total in group_harm.values():
        p_zero *= max(1.0 - total, 0.0)
    return p_zero


def _tied(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=TIE_REL_TOL, abs_tol=1e-12)


def decide_deontological(
    scenario: Scenario,
    hierarchy: Hierarchy = DEFAULT_HIERARCHY,
    hybrid_ties: bool = False,
) -> DeonDecision:
    """Lexicographically maximize the zero-harm probability down the
    hierarchy; final ties fall back to the hold-course-then-id policy, or
    to minimum expected penalty when hybrid_ties is set."""
    if not scenario.actions:
        raise EmptyActionSet(f"scenario {scenario.name!r} has no actions")
    roles = {p.id: p.role for p in scenario.parties}

    candidates = list(scenario.actions)
    reasons: list[str] = []
    for rank, class_roles in enumerate(hierarchy.classes, start=1):
        scores = {a.id: _zero_harm_probability(a, class_roles, roles) for a in candidates}
        if all(_tied(s, 1.0) for s in scores.values()):
            continue  # class not exposed by any remaining action
        best = max(scores.values())
        candidates = [a for a in candidates if _tied(scores[a.id], best)]
        names = ", ".join(sorted(r.value for r in class_roles))
        reasons.append(f"class {rank} ({names}): P(zero harm) = {best:.6g}")
        if len(candidates) == 1:
            break

    if len(candidates) > 1 and hybrid_ties:
        penalties = {a.id: cumulative_risk(a).penalty for a in candidates}
        best_pen = min(penalties.values())
        candidates = [a for a in candidates if _tied(penalties[a.id], best_pen)]
        reasons.append(f"hybrid tie-break: min expected penalty = {best_pen:.6g}")

    hold = [a for a in candidates if a.hold_course]
    chosen = hold[0] if hold else min(candidates, key=lambda a: a.id)
    if len(candidates) > 1:
        reasons.append("tie broken by policy (hold course, then id)")
    if not reasons:
        reasons.append("no class exposed; tie policy applied")
    return DeonDecision(action_id=chosen.id, rationale="; ".join(reasons))


def decide_trolley(scenario: Scenario) -> str:
    """Certain-outcome chooser: with exactly two actions whose outcome
    probabilities are all 0 or 1, pick the one with fewer certain
    fatalities (positive-magnitude outcomes at probability 1)."""
    if len(scenario.actions) != 2:
        raise NotATrolleyScenario(f"need exactly 2 actions, got {len(scenario.actions)}")
    for a in scenario.actions:
        for o in a.outcomes:
            if o.probability not in (0.0, 1.0):
                raise NotATrolleyScenario(f"outcome {o.id!r} has probability {o.probability!r}, not 0 or 1")

    def fatalities(action: Action) -> int:
        return sum(1 for o in action.outcomes if o.probability == 1.0 and o.magnitude > 0)

    first, second = scenario.actions
    counts = {first.id: fatalities(first), second.id: fatalities(second)}
    if counts[first.id] != counts[second.id]:
        return min(scenario.actions, key=lambda a: counts[a.id]).id
    hold = [a for a in scenario.actions if a.hold_course]
    return hold[0].id if hold else min(first.id, second.id)


@dataclass(frozen=True, slots=True)
class ComparisonReport:
    """Chosen action and linear expected penalty per decider."""

    rows: Mapping[str, tuple[str, float]]
    divergence: bool
    gap: float
    trolley_applicable: bool


def compare(scenario: Scenario) -> ComparisonReport:
    """Run every decider on the same effective scenario.

    Expected penalties are the plain cumulative risks of each decider's
    chosen action, so the numbers stay comparable across deciders whatever
    weighting or selection mode the risk engine uses.
    """
    effective, notes = apply_modifiers(redact(scenario))
    penalties = {a.id: cumulative_risk(a).penalty for a in effective.actions}

    rows: dict[str, tuple[str, float]] = {}
    expected = select_action(effective, modifier_notes=notes).chosen_action
    rows["risk_expected"] = (expected, penalties[expected])

    robust = select_action(replace(effective, selection_mode=SelectionMode.robust_worst_case), modifier_notes=notes).chosen_action
    rows["risk_robust"] = (robust, penalties[robust])

    deon = decide_deontological(effective).action_id
    rows["deontological"] = (deon, penalties[deon])

    trolley_applicable = True
    try:
        trolley = decide_trolley(effective)
        rows["trolley"] = (trolley, penalties[trolley])
    except NotATrolleyScenario:
        trolley_applicable = False

    chosen_penalties = [p for _, p in rows.values()]
    gap = max(chosen_penalties) - min(chosen_penalties)
    divergence = len({aid for aid, _ in rows.values()}) > 1
    return ComparisonReport(rows=rows, divergence=divergence, gap=gap, trolley_applicable=trolley_applicable)
