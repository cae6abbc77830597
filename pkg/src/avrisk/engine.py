"""Expected-risk scoring and minimum-risk action selection.

Risk of an outcome is magnitude times probability; an action's cumulative
risk is the sum over its outcomes. `select_action` minimizes either the
weighted expected penalty or, in robust mode, the upper bound of the
penalty interval, and always returns exactly one action with a trace that
accounts for every contribution.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Mapping, Optional

from .errors import EmptyActionSet, InvalidScenario
from .fairness import redact
from .model import (
    Action,
    ActionScore,
    CertaintyWeighting,
    DecisionResult,
    Interval,
    Outcome,
    Scenario,
    SelectionMode,
    TraceEntry,
    WeightingMode,
    validate,
)
from .valuation import certainty_weighted_penalty, party_factor

__all__ = [
    "risk_penalty",
    "penalty_interval",
    "cumulative_risk",
    "select_action",
    "decision_trace",
    "apply_modifiers",
    "decide",
    "TIE_REL_TOL",
]

# Relative tolerance for treating two criterion values as tied. Tight enough
# that float noise cannot flip a real preference, loose enough that exact
# constructions tie reliably.
TIE_REL_TOL = 1e-9
_TIE_ABS_TOL = 1e-12

LINEAR = CertaintyWeighting(mode=WeightingMode.linear)


def risk_penalty(outcome: Outcome) -> float:
    """Expected penalty of one outcome: magnitude times probability."""
    return outcome.magnitude * outcome.probability


def penalty_interval(outcome: Outcome) -> Interval:
    """Penalty bounds induced by the probability uncertainty.

    Degenerates to a point when no uncertainty was given. A negative
    magnitude flips which probability endpoint gives the lower bound.
    """
    u = outcome.uncertainty
    if u is None:
        point = risk_penalty(outcome)
        return Interval(point, point)
    a = outcome.magnitude * u.lo
    b = outcome.magnitude * u.hi
    return Interval(a, b) if a <= b else Interval(b, a)


def cumulative_risk(action: Action) -> ActionScore:
    """Linear cumulative risk of an action with component-wise interval."""
    penalty = 0.0
    lo = 0.0
    hi = 0.0
    for outcome in action.outcomes:
        penalty += risk_penalty(outcome)
        iv = penalty_interval(outcome)
        lo += iv.lo
        hi += iv.hi
    return ActionScore(penalty, Interval(lo, hi))


def _weighted_contribution(outcome: Outcome, weighting: CertaintyWeighting) -> float:
    if outcome.magnitude > 0:
        return certainty_weighted_penalty(outcome.probability, outcome.magnitude, weighting)
    return risk_penalty(outcome)


def _weighted_interval(outcome: Outcome, weighting: CertaintyWeighting) -> Interval:
    u = outcome.uncertainty
    if u is None:
        point = _weighted_contribution(outcome, weighting)
        return Interval(point, point)
    if outcome.magnitude > 0:
        # Weighting is increasing in p, so the probability endpoints map to
        # the penalty endpoints in order.
        return Interval(
            certainty_weighted_penalty(u.lo, outcome.magnitude, weighting),
            certainty_weighted_penalty(u.hi, outcome.magnitude, weighting),
        )
    return Interval(outcome.magnitude * u.hi, outcome.magnitude * u.lo)


def _score(action: Action, weighting: CertaintyWeighting) -> tuple[ActionScore, list[TraceEntry]]:
    penalty = 0.0
    lo = 0.0
    hi = 0.0
    entries: list[TraceEntry] = []
    for outcome in action.outcomes:
        contribution = _weighted_contribution(outcome, weighting)
        penalty += contribution
        iv = _weighted_interval(outcome, weighting)
        lo += iv.lo
        hi += iv.hi
        entries.append(
            TraceEntry(
                action_id=action.id,
                outcome_id=outcome.id,
                magnitude=outcome.magnitude,
                probability=outcome.probability,
                modifiers=(),
                contribution=contribution,
            )
        )
    return ActionScore(penalty, Interval(lo, hi)), entries


def _tied(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=TIE_REL_TOL, abs_tol=_TIE_ABS_TOL)


def select_action(
    scenario: Scenario,
    modifier_notes: Optional[Mapping[tuple[str, str], tuple[str, ...]]] = None,
) -> DecisionResult:
    """Pick the minimum-risk action.

    Consumes effective probabilities: any redaction or modifier application
    happens upstream (see `decide`). Ties within tolerance prefer the
    hold-course action, then the lexicographically smallest id.
    """
    if not scenario.actions:
        raise EmptyActionSet(f"scenario {scenario.name!r} has no actions")

    notes = modifier_notes or {}
    per_action: dict[str, ActionScore] = {}
    trace: list[TraceEntry] = []
    for action in scenario.actions:
        score, entries = _score(action, scenario.weighting)
        per_action[action.id] = score
        for e in entries:
            applied = notes.get((e.action_id, e.outcome_id), ())
            trace.append(replace(e, modifiers=applied) if applied else e)

    if scenario.selection_mode is SelectionMode.robust_worst_case:
        criterion = {aid: s.interval.hi for aid, s in per_action.items()}
    else:
        criterion = {aid: s.penalty for aid, s in per_action.items()}

    best = min(criterion.values())
    tied = [a for a in scenario.actions if _tied(criterion[a.id], best)]
    tie_broken = len(tied) > 1
    hold = [a for a in tied if a.hold_course]
    chosen = hold[0] if hold else min(tied, key=lambda a: a.id)

    return DecisionResult(
        chosen_action=chosen.id,
        per_action=per_action,
        tie_broken=tie_broken,
        trace=tuple(trace),
    )


def decision_trace(result: DecisionResult) -> str:
    """Render the decision as per-action penalty tables plus the selection
    rationale, one row per outcome contribution."""
    lines: list[str] = []
    header = f"  {'outcome':<28} {'magnitude':>14} {'probability':>14} {'penalty':>14}"
    for action_id, score in result.per_action.items():
        lines.append(f"action {action_id}")
        rows = [e for e in result.trace if e.action_id == action_id]
        if rows:
            lines.append(header)
        for e in rows:
            note = f"  [{', '.join(e.modifiers)}]" if e.modifiers else ""
            lines.append(
                f"  {e.outcome_id:<28} {e.magnitude:>14.12g} {e.probability:>14.12g} {e.contribution:>14.12g}{note}"
            )
        lines.append(f"  total {score.penalty:.12g}  interval [{score.interval.lo:.12g}, {score.interval.hi:.12g}]")
    rationale = "tie broken by policy (hold course, then id)" if result.tie_broken else "strict minimum"
    lines.append(f"chosen: {result.chosen_action} ({rationale})")
    return "\n".join(lines)


def apply_modifiers(
    scenario: Scenario,
) -> tuple[Scenario, dict[tuple[str, str], tuple[str, ...]]]:
    """Scale harm probabilities by party modifier factors.

    Only positive-magnitude outcomes that name a party are touched.
    Returns the adjusted scenario and per-outcome annotation notes for the
    trace. Uncertainty endpoints scale with the same factor, clamped.
    """
    table = scenario.modifiers
    parties = {p.id: p for p in scenario.parties}
    notes: dict[tuple[str, str], tuple[str, ...]] = {}

    factors: dict[str, tuple[float, tuple[str, ...]]] = {
        pid: party_factor(p, table) for pid, p in parties.items()
    }

    actions = []
    changed = False
    for action in scenario.actions:
        outcomes = []
        for o in action.outcomes:
            if o.magnitude > 0 and o.affected_party is not None:
                factor, applied = factors[o.affected_party]
                if factor != 1.0:
                    new_p = min(max(o.probability * factor, 0.0), 1.0)
                    u = o.uncertainty
                    if u is not None:
                        u = Interval(
                            min(max(u.lo * factor, 0.0), 1.0),
                            min(max(u.hi * factor, 0.0), 1.0),
                        )
                    outcomes.append(replace(o, probability=new_p, uncertainty=u))
                    notes[(action.id, o.id)] = applied
                    changed = True
                    continue
            outcomes.append(o)
        actions.append(replace(action, outcomes=tuple(outcomes)))

    if not changed:
        return scenario, notes
    return replace(scenario, actions=tuple(actions)), notes


def decide(scenario: Scenario) -> DecisionResult:
    """Full decision pipeline: validate, redact, apply modifiers, select."""
    diags = validate(scenario)
    errors = [d for d in diags if d.severity.value == "error"]
    if errors:
        raise InvalidScenario(errors)
    redacted = redact(scenario)
    effective, notes = apply_modifiers(redacted)
    return select_action(effective, modifier_notes=notes)
