"""Core data model: scenarios, parties, actions, outcomes, and validation.

Every type is an immutable dataclass. A Scenario is the unit of parsing,
evaluation, and simulation; `validate` checks the cross-cutting invariants
and reports problems as diagnostics rather than exceptions so that callers
can show all of them at once.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Optional

if TYPE_CHECKING:
    from .valuation import MagnitudeSchedule, ModifierTable

__all__ = [
    "Role",
    "Unit",
    "WeightingMode",
    "SelectionMode",
    "Severity",
    "SourceSpan",
    "Diagnostic",
    "Interval",
    "Outcome",
    "Action",
    "Party",
    "FairnessPolicy",
    "CertaintyWeighting",
    "Scenario",
    "TraceEntry",
    "ActionScore",
    "DecisionResult",
    "DEFAULT_EXCLUDED",
    "GAMMA_DEFAULT",
    "ENVIRONMENT_PARTY",
    "validate",
]

GAMMA_DEFAULT = math.log(10.0)

# Attribute keys withheld from decision-making unless a policy says otherwise.
DEFAULT_EXCLUDED = frozenset({"helmet", "sex", "age", "vehicle_cost_class"})

# Reserved party id for pooled harm that names no party.
ENVIRONMENT_PARTY = "environment"

_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

# Entry names with fixed meaning inside a party section; everything else in
# a party must be a schema attribute.
RESERVED_PARTY_KEYS = frozenset(
    {"role", "voluntary", "informed", "beneficiary", "decision_maker"}
)

SCHEMA_KINDS = ("bool", "int", "real", "str")


class Role(str, enum.Enum):
    occupant = "occupant"
    pedestrian = "pedestrian"
    cyclist = "cyclist"
    other_driver = "other_driver"
    object = "object"


class Unit(str, enum.Enum):
    abstract = "abstract"
    usd = "usd"
    statistical_lives = "statistical_lives"


class WeightingMode(str, enum.Enum):
    linear = "linear"
    exponential = "exponential"


class SelectionMode(str, enum.Enum):
    expected = "expected"
    robust_worst_case = "robust_worst_case"


class Severity(str, enum.Enum):
    error = "error"
    warning = "warning"


@dataclass(frozen=True, slots=True)
class SourceSpan:
    line: int = 1
    column: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True, slots=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: SourceSpan = SourceSpan()

    def __str__(self) -> str:
        return f"{self.span}: {self.severity.value}[{self.code}] {self.message}"


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed real interval; doubles as probability uncertainty and as a
    penalty bound."""

    lo: float
    hi: float


@dataclass(frozen=True, slots=True)
class Outcome:
    id: str
    magnitude: float
    probability: float
    description: str = ""
    uncertainty: Optional[Interval] = None
    affected_party: Optional[str] = None
    exclusive_group: Optional[str] = None


@dataclass(frozen=True, slots=True)
class Action:
    id: str
    outcomes: tuple[Outcome, ...] = ()
    label: str = ""
    hold_course: bool = False


@dataclass(frozen=True, slots=True)
class Party:
    id: str
    role: Role
    attributes: Mapping[str, object] = field(default_factory=dict)
    voluntary_exposure: bool = False
    informed: bool = False
    is_beneficiary: bool = False
    is_decision_maker: bool = False


@dataclass(frozen=True, slots=True)
class FairnessPolicy:
    excluded: frozenset[str] = DEFAULT_EXCLUDED
    rationale: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class CertaintyWeighting:
    mode: WeightingMode = WeightingMode.linear
    gamma: float = GAMMA_DEFAULT


def _default_policy_for(schema: Mapping[str, str]) -> FairnessPolicy:
    return FairnessPolicy(excluded=DEFAULT_EXCLUDED & frozenset(schema))


@dataclass(frozen=True, slots=True)
class Scenario:
    name: str
    actions: tuple[Action, ...]
    parties: tuple[Party, ...] = ()
    description: str = ""
    unit: Unit = Unit.abstract
    schema: Mapping[str, str] = field(default_factory=dict)
    policy: Optional[FairnessPolicy] = None
    weighting: CertaintyWeighting = CertaintyWeighting()
    selection_mode: SelectionMode = SelectionMode.expected
    modifiers: Optional["ModifierTable"] = None
    schedule: Optional["MagnitudeSchedule"] = None
    source_map: Mapping[object, SourceSpan] = field(
        default_factory=dict, compare=False, repr=False
    )

    def __post_init__(self):
        # Late imports keep the module dependency graph acyclic.
        from .valuation import MagnitudeSchedule, default_modifier_table

        if self.policy is None:
            object.__setattr__(self, "policy", _default_policy_for(self.schema))
        if self.modifiers is None:
            object.__setattr__(self, "modifiers", default_modifier_table())
        if self.schedule is None:
            object.__setattr__(self, "schedule", MagnitudeSchedule())

    def party(self, party_id: str) -> Party:
        for p in self.parties:
            if p.id == party_id:
                return p
        raise KeyError(party_id)

    def action(self, action_id: str) -> Action:
        for a in self.actions:
            if a.id == action_id:
                return a
        raise KeyError(action_id)


@dataclass(frozen=True, slots=True)
class TraceEntry:
    action_id: str
    outcome_id: str
    magnitude: float
    probability: float
    modifiers: tuple[str, ...]
    contribution: float


@dataclass(frozen=True, slots=True)
class ActionScore:
    penalty: float
    interval: Interval


@dataclass(frozen=True, slots=True)
class DecisionResult:
    chosen_action: str
    per_action: Mapping[str, ActionScore]
    tie_broken: bool
    trace: tuple[TraceEntry, ...]


def _err(code, message, span):
    return Diagnostic(Severity.error, code, message, span)


def _representable(text: str) -> bool:
    # the line format cannot carry newlines or outer whitespace
    return "\n" not in text and text == text.strip()


def validate(scenario: Scenario) -> list[Diagnostic]:
    """Check the scenario's semantic invariants.

    Returns a list of diagnostics; empty means valid. Spans come from the
    scenario's source map when it was parsed from text, and default to 1:1
    for scenarios built in code.
    """
    diags: list[Diagnostic] = []
    smap = scenario.source_map

    def span(*key) -> SourceSpan:
        return smap.get(key, SourceSpan())

    if not _ID_RE.match(scenario.name or ""):
        diags.append(_err("bad-id", f"scenario name {scenario.name!r} is not a valid identifier", span("scenario")))

    if not _representable(scenario.description):
        diags.append(_err("bad-value", "scenario description contains a newline or outer whitespace", span("scenario")))

    if not scenario.actions:
        diags.append(_err("no-actions", "scenario defines no actions", span("scenario")))

    for key, kind in scenario.schema.items():
        if kind not in SCHEMA_KINDS:
            diags.append(_err("schema-type", f"attribute {key!r} declares unknown kind {kind!r}", span("schema", key)))
        if key in RESERVED_PARTY_KEYS:
            diags.append(_err("schema-type", f"attribute {key!r} collides with a reserved party field", span("schema", key)))

    party_ids: set[str] = set()
    for p in scenario.parties:
        sp = span("party", p.id)
        if not _ID_RE.match(p.id):
            diags.append(_err("bad-id", f"party id {p.id!r} is not a valid identifier", sp))
        if p.id in party_ids:
            diags.append(_err("duplicate-id", f"duplicate party id {p.id!r}", sp))
        party_ids.add(p.id)
        if p.id == ENVIRONMENT_PARTY:
            diags.append(_err("bad-id", f"party id {ENVIRONMENT_PARTY!r} is reserved", sp))
        for key, value in p.attributes.items():
            if key not in scenario.schema:
                diags.append(_err("unknown-attribute", f"party {p.id!r} sets undeclared attribute {key!r}", sp))
                continue
            kind = scenario.schema[key]
            ok = (
                (kind == "bool" and isinstance(value, bool))
                or (kind == "int" and isinstance(value, int) and not isinstance(value, bool))
                or (kind == "real" and isinstance(value, float))
                or (kind == "str" and isinstance(value, str))
            )
            if not ok:
                diags.append(_err("schema-type", f"party {p.id!r} attribute {key!r} should be {kind}, got {value!r}", sp))
            elif kind == "str" and not _representable(value):
                diags.append(_err("bad-value", f"party {p.id!r} attribute {key!r} contains a newline or outer whitespace", sp))
            elif kind == "real" and not math.isfinite(value):
                diags.append(_err("bad-number", f"party {p.id!r} attribute {key!r} is not finite", sp))

    hold_count = 0
    action_ids: set[str] = set()
    for a in scenario.actions:
        sa = span("action", a.id)
        if not _ID_RE.match(a.id):
            diags.append(_err("bad-id", f"action id {a.id!r} is not a valid identifier", sa))
        if a.id in action_ids:
            diags.append(_err("duplicate-id", f"duplicate action id {a.id!r}", sa))
        action_ids.add(a.id)
        if not _representable(a.label):
            diags.append(_err("bad-value", f"action {a.id!r} label contains a newline or outer whitespace", sa))
        if a.hold_course:
            hold_count += 1

        outcome_ids: set[str] = set()
        group_sums: dict[str, float] = {}
        for o in a.outcomes:
            so = span("outcome", a.id, o.id)
            if not _ID_RE.match(o.id):
                diags.append(_err("bad-id", f"outcome id {o.id!r} is not a valid identifier", so))
            if o.id in outcome_ids:
                diags.append(_err("duplicate-id", f"duplicate outcome id {o.id!r} in action {a.id!r}", so))
            outcome_ids.add(o.id)
            if not _representable(o.description):
                diags.append(_err("bad-value", f"outcome {o.id!r} description contains a newline or outer whitespace", so))
            if not math.isfinite(o.magnitude):
                diags.append(_err("magnitude-not-finite", f"outcome {o.id!r} magnitude is not finite", smap.get(("outcome", a.id, o.id, "magnitude"), so)))
            if not (0.0 <= o.probability <= 1.0):
                diags.append(_err("probability-range", f"outcome {o.id!r} probability {o.probability!r} outside [0, 1]", smap.get(("outcome", a.id, o.id, "probability"), so)))
            if o.uncertainty is not None:
                u = o.uncertainty
                su = smap.get(("outcome", a.id, o.id, "uncertainty"), so)
                if not (0.0 <= u.lo <= u.hi <= 1.0):
                    diags.append(_err("probability-range", f"outcome {o.id!r} uncertainty [{u.lo!r}, {u.hi!r}] outside [0, 1]", su))
                elif not (u.lo <= o.probability <= u.hi):
                    diags.append(_err("uncertainty-order", f"outcome {o.id!r} probability {o.probability!r} outside its uncertainty interval", su))
            if o.affected_party is not None and o.affected_party not in party_ids:
                diags.append(_err("unknown-reference", f"outcome {o.id!r} names unknown party {o.affected_party!r}", smap.get(("outcome", a.id, o.id, "party"), so)))
            if o.exclusive_group is not None:
                group_sums[o.exclusive_group] = group_sums.get(o.exclusive_group, 0.0) + o.probability

        for group, total in group_sums.items():
            if total > 1.0 + 1e-12:
                diags.append(_err("exclusive-sum", f"exclusive group {group!r} in action {a.id!r} has probabilities summing to {total!r} > 1", sa))

    if hold_count > 1:
        diags.append(_err("multiple-hold-course", "more than one action is marked hold_course", span("scenario")))

    if scenario.policy is not None:
        for key in sorted(scenario.policy.excluded):
            if key not in scenario.schema:
                diags.append(_err("unknown-attribute", f"policy excludes attribute {key!r} not in the schema", span("policy")))
        for key, text in scenario.policy.rationale.items():
            if not _representable(text):
                diags.append(_err("bad-value", f"policy rationale for {key!r} contains a newline or outer whitespace", span("policy")))

    w = scenario.weighting
    if not (math.isfinite(w.gamma) and w.gamma >= 0.0):
        diags.append(_err("bad-number", f"weighting gamma {w.gamma!r} must be finite and >= 0", span("weighting")))

    return diags
