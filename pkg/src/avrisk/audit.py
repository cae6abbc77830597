"""Per-party risk accounting and the seven-question fairness audit.

risk_distribution answers "who carries the risk" analytically, one share
per party; risk_transfer diffs two alternatives so a maneuver's
redistribution of danger is visible as signed deltas. hansson_report
fills Hansson's (2007) seven questions about risk imposition with
whatever the scenario can quantify and leaves the rest as prompts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .engine import cumulative_risk, risk_penalty
from .errors import NoExposedParties, UnassignedOutcomeWarning
from .model import ENVIRONMENT_PARTY, Action, DecisionResult, Scenario

__all__ = [
    "RiskDistribution",
    "risk_distribution",
    "risk_transfer",
    "fairness_index",
    "HANSSON_QUESTIONS",
    "AuditEntry",
    "HanssonReport",
    "hansson_report",
]


@dataclass(frozen=True, slots=True)
class RiskDistribution:
    """Expected penalty carried by each party under one action."""

    shares: Mapping[str, float]
    total: float


def _resolve_action(scenario: Scenario, action: Union[Action, str]) -> Action:
    if isinstance(action, Action):
        return action
    for a in scenario.actions:
        if a.id == action:
            return a
    raise KeyError(f"no action {action!r} in scenario {scenario.name!r}")


def risk_distribution(scenario: Scenario, action: Union[Action, str]) -> RiskDistribution:
    act = _resolve_action(scenario, action)
    shares: dict[str, float] = {p.id: 0.0 for p in scenario.parties}
    pooled = False
    for o in act.outcomes:
        pid = o.affected_party
        if pid is None:
            pid = ENVIRONMENT_PARTY
            pooled = True
        shares[pid] = shares.get(pid, 0.0) + risk_penalty(o)
    if pooled:
        warnings.warn(
            f"action {act.id!r} has outcomes without an affected party; "
            f"pooled under {ENVIRONMENT_PARTY!r}",
            UnassignedOutcomeWarning,
            stacklevel=2,
        )
    return RiskDistribution(shares=shares, total=cumulative_risk(act).penalty)


def risk_transfer(
    scenario: Scenario, action_a: Union[Action, str], action_b: Union[Action, str]
) -> dict[str, float]:
    """Per-party share under b minus share under a. Positive delta means
    the move from a to b pushes risk onto that party."""
    da = risk_distribution(scenario, action_a).shares
    db = risk_distribution(scenario, action_b).shares
    return {pid: db.get(pid, 0.0) - da.get(pid, 0.0) for pid in sorted(set(da) | set(db))}


def fairness_index(distribution: RiskDistribution) -> float:
    positive = [s for s in distribution.shares.values() if s > 0.0]
    if not positive:
        raise NoExposedParties("all per-party shares are zero")
    return max(positive) / min(positive)


# Quoted verbatim from Hansson (2007).
HANSSON_QUESTIONS = (
    "To what extent do the risk-exposed benefit from the risk exposure?",
    "Is the distribution of risks and benefits fair?",
    "Can the distribution of risks and benefits be made less fair by redistribution or by compensation?",
    "To what extent is the risk exposure decided by those who run the risk?",
    "Do the risk-exposed have access to all relevant information about the risk?",
    "Are there risk-exposed persons who cannot be informed or included in the decision process?",
    "Does the decision-maker benefit from other people's risk exposure?",
)


@dataclass(frozen=True, slots=True)
class AuditEntry:
    number: int
    question: str
    inputs: Mapping[str, object]
    answer: Optional[str] = None


@dataclass(frozen=True, slots=True)
class HanssonReport:
    entries: tuple[AuditEntry, ...]

    def __post_init__(self):
        if len(self.entries) != 7:
            raise ValueError("report must carry exactly 7 entries")


def hansson_report(scenario: Scenario, decision: DecisionResult) -> HanssonReport:
    """Seven entries in Hansson's published order; computed inputs where
    the scenario supplies flags or numbers, open prompts elsewhere."""
    dist = risk_distribution(scenario, decision.chosen_action)
    exposed = sorted(pid for pid, s in dist.shares.items() if s > 0.0)
    flags = {p.id: p for p in scenario.parties}

    try:
        index: Optional[float] = fairness_index(dist)
    except NoExposedParties:
        index = None

    transfers = {
        a.id: risk_transfer(scenario, decision.chosen_action, a.id)
        for a in scenario.actions
        if a.id != decision.chosen_action
    }

    benefit_by_party = {
        pid: ("beneficiary" if pid in flags and flags[pid].is_beneficiary else "exposed only")
        for pid in exposed
    }
    voluntary = {pid: flags[pid].voluntary_exposure for pid in exposed if pid in flags}
    informed = {pid: flags[pid].informed for pid in exposed if pid in flags}
    uninformed = sorted(pid for pid, ok in informed.items() if not ok)
    self_dealing = sorted(
        p.id for p in scenario.parties if p.is_decision_maker and p.is_beneficiary
    )

    entries = (
        AuditEntry(1, HANSSON_QUESTIONS[0], {"exposed_parties": benefit_by_party}),
        AuditEntry(2, HANSSON_QUESTIONS[1], {"fairness_index": index, "shares": dict(dist.shares)}),
        AuditEntry(
            3,
            HANSSON_QUESTIONS[2],
            {
                "prompt": "review whether redistribution or compensation would change the answer to question 2",
                "transfers_from_chosen": transfers,
                "note": "wording follows the published question",
            },
        ),
        AuditEntry(4, HANSSON_QUESTIONS[3], {"voluntary_exposure": voluntary}),
        AuditEntry(
            5,
            HANSSON_QUESTIONS[4],
            {"informed": informed, "all_informed": all(informed.values())},
        ),
        AuditEntry(6, HANSSON_QUESTIONS[5], {"uninformed_exposed": uninformed}),
        AuditEntry(
            7,
            HANSSON_QUESTIONS[6],
            {
                "decision_maker_beneficiaries": self_dealing,
                "overlap": bool(self_dealing),
            },
        ),
    )
    return HanssonReport(entries=entries)
