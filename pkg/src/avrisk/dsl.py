"""Line-oriented scenario format: parsing, validation, serialization.

A file is a flat sequence of sections. A line containing '=' is a
`key = value` entry in the current section; any other non-blank line opens
a section (`scenario <name>`, `schema`, `party <id>`, `action <id>`,
`outcome <id>`, `policy`, `weighting`, `modifiers`, `schedule`). Outcomes
attach to the most recent action. Lines whose first non-space character is
'#' are comments. Probabilities accept decimals, percentages, and minimal
expressions (products and differences of those).

Parsing never raises for bad input: problems are reported as diagnostics
with line/column spans. Serialization emits a canonical form that parses
back to a structurally identical scenario. The full grammar is documented
in docs/scenario-format.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .model import (
    Action,
    CertaintyWeighting,
    Diagnostic,
    FairnessPolicy,
    Interval,
    Outcome,
    Party,
    RESERVED_PARTY_KEYS,
    Role,
    SCHEMA_KINDS,
    Scenario,
    SelectionMode,
    Severity,
    SourceSpan,
    Unit,
    WeightingMode,
    validate,
)
from .valuation import MagnitudeSchedule, ModifierTable

__all__ = [
    "ParseResult",
    "parse",
    "parse_path",
    "serialize",
    "catalog",
    "catalog_names",
    "load_catalog",
    "catalog_text",
    "CATALOG_NAMES",
]

CATALOG_NAMES = (
    "tunnel_child",
    "lane_change_truck",
    "lane_positioning",
    "motorcyclists_helmet",
    "pedestrian_blind_spot",
)

_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_NUM_RE = re.compile(r"(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)(%?)")

_SECTION_KINDS = (
    "scenario",
    "schema",
    "party",
    "action",
    "outcome",
    "policy",
    "weighting",
    "modifiers",
    "schedule",
)
_NAMED_SECTIONS = frozenset({"scenario", "party", "action", "outcome"})
_SINGLETON_SECTIONS = frozenset({"scenario", "schema", "policy", "weighting", "modifiers", "schedule"})


@dataclass(frozen=True, slots=True)
class ParseResult:
    scenario: Optional[Scenario]
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.scenario is not None

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity is Severity.error)


@dataclass(slots=True)
class _Entry:
    key: str
    value: str
    span: SourceSpan  # key position
    vspan: SourceSpan  # value position


@dataclass(slots=True)
class _Section:
    kind: str
    name: Optional[str]
    span: SourceSpan
    entries: list[_Entry] = field(default_factory=list)
    owner: Optional[str] = None  # enclosing action id, for outcomes


class _Collector:
    def __init__(self):
        self.diags: list[Diagnostic] = []

    def error(self, code: str, message: str, span: SourceSpan):
        self.diags.append(Diagnostic(Severity.error, code, message, span))

    def warning(self, code: str, message: str, span: SourceSpan):
        self.diags.append(Diagnostic(Severity.warning, code, message, span))


def _split_lines(text: str, out: _Collector) -> list[_Section]:
    sections: list[_Section] = []
    current: Optional[_Section] = None
    current_action: Optional[str] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        span = SourceSpan(lineno, col)

        if "=" in stripped:
            key, _, value = stripped.partition("=")
            key = key.strip()
            value = value.strip()
            eq_pos = raw.index("=")
            tail = raw[eq_pos + 1:]
            vcol = eq_pos + 2 + (len(tail) - len(tail.lstrip()))
            if current is None:
                out.error("syntax", f"entry {key!r} appears before any section", span)
                continue
            if not key:
                out.error("syntax", "entry has an empty key", span)
                continue
            current.entries.append(_Entry(key, value, span, SourceSpan(lineno, vcol)))
            continue

        tokens = stripped.split()
        kind = tokens[0]
        if kind not in _SECTION_KINDS:
            out.error("unknown-section", f"unknown section kind {kind!r}", span)
            current = None
            continue
        name: Optional[str] = None
        if kind in _NAMED_SECTIONS:
            if len(tokens) < 2:
                out.error("syntax", f"section {kind!r} needs a name", span)
                current = None
                continue
            name = tokens[1]  # id validity is checked by validate() via the source map
        if len(tokens) > (2 if kind in _NAMED_SECTIONS else 1):
            out.error("syntax", f"unexpected text after section header {kind!r}", span)

        section = _Section(kind, name, span)
        if kind == "outcome":
            if current_action is None:
                out.error("syntax", "outcome section appears before any action", span)
                current = None
                continue
            section.owner = current_action
        elif kind == "action":
            current_action = name
        sections.append(section)
        current = section

    return sections


def _parse_bool(entry: _Entry, out: _Collector) -> Optional[bool]:
    if entry.value == "true":
        return True
    if entry.value == "false":
        return False
    out.error("bad-value", f"{entry.key!r} expects true or false, got {entry.value!r}", entry.vspan)
    return None


def _parse_float(entry: _Entry, out: _Collector) -> Optional[float]:
    try:
        return float(entry.value)
    except ValueError:
        out.error("bad-number", f"{entry.key!r} expects a number, got {entry.value!r}", entry.vspan)
        return None


def _eval_probability(text: str, span: SourceSpan, out: _Collector) -> Optional[float]:
    """Evaluate a probability expression.

    Grammar: expr := product ('-' product)* ; product := atom ('*' atom)* ;
    atom := number with optional '%' suffix. Left associative.
    """
    tokens: list[object] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        if text[pos] in "*-":
            tokens.append(text[pos])
            pos += 1
            continue
        m = _NUM_RE.match(text, pos)
        if not m:
            out.error("bad-number", f"cannot read probability expression {text!r}", span)
            return None
        value = float(m.group(1))
        if m.group(2):
            value = value / 100.0
        tokens.append(value)
        pos = m.end()

    def bad() -> None:
        out.error("bad-number", f"malformed probability expression {text!r}", span)

    # shift-reduce over the two-level precedence
    if not tokens or isinstance(tokens[0], str):
        bad()
        return None
    expect_value = True
    products: list[float] = []
    ops: list[str] = []
    acc: Optional[float] = None
    for tok in tokens:
        if expect_value:
            if isinstance(tok, str):
                bad()
                return None
            acc = tok if acc is None else acc * tok
            expect_value = False
        else:
            if tok == "*":
                expect_value = True
            elif tok == "-":
                products.append(acc)  # type: ignore[arg-type]
                ops.append("-")
                acc = None
                expect_value = True
            else:
                bad()
                return None
    if expect_value or acc is None:
        bad()
        return None
    products.append(acc)
    result = products[0]
    for nxt in products[1:]:
        result = result - nxt
    return result


def _probability_entry(entry: _Entry, out: _Collector) -> Optional[float]:
    p = _eval_probability(entry.value, entry.vspan, out)
    if p is None:
        return None
    if not (0.0 <= p <= 1.0):
        out.error("probability-range", f"probability {p!r} outside [0, 1]", entry.vspan)
        return None
    return p


_KNOWN_KEYS = {
    "scenario": {"description", "unit", "selection"},
    "action": {"label", "hold_course"},
    "outcome": {"description", "magnitude", "probability", "uncertainty", "party", "group"},
    "weighting": {"mode", "gamma"},
}


def parse(text: str) -> ParseResult:
    """Parse scenario text; diagnostics carry line/column spans.

    The returned scenario is None when any error diagnostic was produced.
    """
    out = _Collector()
    sections = _split_lines(text, out)

    seen_kinds: dict[str, SourceSpan] = {}
    for s in sections:
        if s.kind in _SINGLETON_SECTIONS:
            if s.kind in seen_kinds:
                out.error("duplicate-id", f"section {s.kind!r} appears more than once", s.span)
            seen_kinds[s.kind] = s.span

    source_map: dict[object, SourceSpan] = {}

    def dedupe(section: _Section) -> dict[str, _Entry]:
        entries: dict[str, _Entry] = {}
        for e in section.entries:
            if e.key in entries:
                out.error("duplicate-id", f"entry {e.key!r} repeated in section {section.kind!r}", e.span)
            entries[e.key] = e
        return entries

    def reject_unknown(section: _Section, known: set[str]):
        for e in section.entries:
            if e.key not in known:
                out.error("unknown-key", f"section {section.kind!r} does not take entry {e.key!r}", e.span)

    # scenario header
    name = ""
    description = ""
    unit = Unit.abstract
    selection = SelectionMode.expected
    head = next((s for s in sections if s.kind == "scenario"), None)
    if head is None:
        out.error("syntax", "missing scenario section", SourceSpan(1, 1))
    else:
        name = head.name or ""
        source_map[("scenario",)] = head.span
        reject_unknown(head, _KNOWN_KEYS["scenario"])
        entries = dedupe(head)
        if "description" in entries:
            description = entries["description"].value
        if "unit" in entries:
            try:
                unit = Unit(entries["unit"].value)
            except ValueError:
                out.error("bad-value", f"unknown unit {entries['unit'].value!r}", entries["unit"].vspan)
        if "selection" in entries:
            try:
                selection = SelectionMode(entries["selection"].value)
            except ValueError:
                out.error("bad-value", f"unknown selection mode {entries['selection'].value!r}", entries["selection"].vspan)

    # schema
    schema: dict[str, str] = {}
    for s in sections:
        if s.kind != "schema":
            continue
        for e in dedupe(s).values():
            source_map[("schema", e.key)] = e.span
            if not _ID_RE.match(e.key):
                out.error("bad-id", f"attribute key {e.key!r} is not a valid identifier", e.span)
            elif e.value not in SCHEMA_KINDS:
                out.error("schema-type", f"attribute {e.key!r} declares unknown kind {e.value!r}", e.vspan)
            else:
                schema[e.key] = e.value

    # parties
    parties: list[Party] = []
    for s in sections:
        if s.kind != "party":
            continue
        source_map[("party", s.name)] = s.span
        entries = dedupe(s)
        role: Optional[Role] = None
        flags = {"voluntary": False, "informed": False, "beneficiary": False, "decision_maker": False}
        attributes: dict[str, object] = {}
        for key, e in entries.items():
            if key == "role":
                try:
                    role = Role(e.value)
                except ValueError:
                    out.error("bad-value", f"unknown role {e.value!r}", e.vspan)
            elif key in flags:
                b = _parse_bool(e, out)
                if b is not None:
                    flags[key] = b
            elif key in schema:
                value = _typed_attribute(schema[key], e, out)
                if value is not None:
                    attributes[key] = value
            else:
                out.error("unknown-attribute", f"party {s.name!r} sets undeclared attribute {key!r}", e.span)
        if role is None:
            out.error("missing-field", f"party {s.name!r} has no role", s.span)
            continue
        parties.append(
            Party(
                id=s.name or "",
                role=role,
                attributes=attributes,
                voluntary_exposure=flags["voluntary"],
                informed=flags["informed"],
                is_beneficiary=flags["beneficiary"],
                is_decision_maker=flags["decision_maker"],
            )
        )

    # actions and their outcomes
    actions: list[Action] = []
    by_action: dict[str, list[Outcome]] = {}
    action_meta: list[tuple[str, str, bool]] = []
    for s in sections:
        if s.kind == "action":
            source_map[("action", s.name)] = s.span
            reject_unknown(s, _KNOWN_KEYS["action"])
            entries = dedupe(s)
            label = entries["label"].value if "label" in entries else ""
            hold = False
            if "hold_course" in entries:
                b = _parse_bool(entries["hold_course"], out)
                hold = bool(b)
            action_meta.append((s.name or "", label, hold))
            by_action.setdefault(s.name or "", [])
        elif s.kind == "outcome":
            aid = s.owner or ""
            source_map[("outcome", aid, s.name)] = s.span
            reject_unknown(s, _KNOWN_KEYS["outcome"])
            entries = dedupe(s)
            description_o = entries["description"].value if "description" in entries else ""
            magnitude: Optional[float] = None
            if "magnitude" in entries:
                magnitude = _parse_float(entries["magnitude"], out)
                source_map[("outcome", aid, s.name, "magnitude")] = entries["magnitude"].vspan
            else:
                out.error("missing-field", f"outcome {s.name!r} has no magnitude", s.span)
            probability: Optional[float] = None
            if "probability" in entries:
                probability = _probability_entry(entries["probability"], out)
                source_map[("outcome", aid, s.name, "probability")] = entries["probability"].vspan
            else:
                out.error("missing-field", f"outcome {s.name!r} has no probability", s.span)
            uncertainty: Optional[Interval] = None
            if "uncertainty" in entries:
                e = entries["uncertainty"]
                source_map[("outcome", aid, s.name, "uncertainty")] = e.vspan
                parts = re.split(r"\s+to\s+", e.value)
                if len(parts) != 2:
                    out.error("syntax", "uncertainty expects '<lo> to <hi>'", e.vspan)
                else:
                    lo = _eval_probability(parts[0], e.vspan, out)
                    hi = _eval_probability(parts[1], e.vspan, out)
                    if lo is not None and hi is not None:
                        uncertainty = Interval(lo, hi)
            party_ref: Optional[str] = None
            if "party" in entries:
                party_ref = entries["party"].value
                source_map[("outcome", aid, s.name, "party")] = entries["party"].vspan
            group: Optional[str] = None
            if "group" in entries:
                group = entries["group"].value
                if not _ID_RE.match(group):
                    out.error("bad-id", f"group {group!r} is not a valid identifier", entries["group"].vspan)
            if magnitude is None or probability is None:
                continue
            by_action.setdefault(aid, []).append(
                Outcome(
                    id=s.name or "",
                    description=description_o,
                    magnitude=magnitude,
                    probability=probability,
                    uncertainty=uncertainty,
                    affected_party=party_ref,
                    exclusive_group=group,
                )
            )
    for aid, label, hold in action_meta:
        actions.append(Action(id=aid, label=label, hold_course=hold, outcomes=tuple(by_action.get(aid, ()))))

    # policy
    policy: Optional[FairnessPolicy] = None
    for s in sections:
        if s.kind != "policy":
            continue
        source_map[("policy",)] = s.span
        excluded: frozenset[str] = frozenset()
        rationale: dict[str, str] = {}
        for key, e in dedupe(s).items():
            if key == "exclude":
                items = [t.strip() for t in e.value.split(",") if t.strip()]
                bad = [t for t in items if not _ID_RE.match(t)]
                for t in bad:
                    out.error("bad-id", f"excluded attribute {t!r} is not a valid identifier", e.vspan)
                excluded = frozenset(t for t in items if _ID_RE.match(t))
            elif key.startswith("rationale."):
                rationale[key[len("rationale."):]] = e.value
            else:
                out.error("unknown-key", f"section 'policy' does not take entry {key!r}", e.span)
        policy = FairnessPolicy(excluded=excluded, rationale=rationale)

    # weighting
    weighting = CertaintyWeighting()
    for s in sections:
        if s.kind != "weighting":
            continue
        source_map[("weighting",)] = s.span
        reject_unknown(s, _KNOWN_KEYS["weighting"])
        entries = dedupe(s)
        mode = WeightingMode.linear
        gamma = CertaintyWeighting().gamma
        if "mode" in entries:
            try:
                mode = WeightingMode(entries["mode"].value)
            except ValueError:
                out.error("bad-value", f"unknown weighting mode {entries['mode'].value!r}", entries["mode"].vspan)
        if "gamma" in entries:
            g = _parse_float(entries["gamma"], out)
            if g is not None:
                gamma = g
        weighting = CertaintyWeighting(mode=mode, gamma=gamma)

    # modifiers
    modifiers: Optional[ModifierTable] = None
    for s in sections:
        if s.kind != "modifiers":
            continue
        flags_t: dict[str, float] = {}
        equals_t: dict[tuple[str, str], float] = {}
        anchors_t: dict[str, tuple[tuple[float, float], ...]] = {}
        for e in s.entries:
            if (e.key in flags_t or e.key in anchors_t or any(k == e.key for k, _ in equals_t)):
                out.error("duplicate-id", f"modifier key {e.key!r} repeated", e.span)
                continue
            if ":" in e.value:
                pairs = []
                ok = True
                for chunk in e.value.split(","):
                    left, sep, right = chunk.partition(":")
                    try:
                        pairs.append((float(left.strip()), float(right.strip())))
                    except ValueError:
                        ok = False
                if not (ok and sep):
                    out.error("bad-number", f"anchor list {e.value!r} is malformed", e.vspan)
                    continue
                anchors_t[e.key] = tuple(pairs)
            else:
                factor = _parse_float(e, out)
                if factor is None:
                    continue
                if "." in e.key:
                    attr, _, val = e.key.partition(".")
                    equals_t[(attr, val)] = factor
                else:
                    flags_t[e.key] = factor
        try:
            modifiers = ModifierTable(flags=flags_t, equals=equals_t, anchors=anchors_t)
        except ValueError as exc:
            out.error("bad-value", str(exc), s.span)

    # schedule
    schedule: Optional[MagnitudeSchedule] = None
    for s in sections:
        if s.kind != "schedule":
            continue
        vsl: Optional[float] = None
        hour: Optional[float] = None
        injuries: dict[str, float] = {}
        for key, e in dedupe(s).items():
            if key == "vsl":
                vsl = _parse_float(e, out)
            elif key == "person_hour":
                hour = _parse_float(e, out)
            elif key.startswith("injury."):
                cost = _parse_float(e, out)
                if cost is not None:
                    injuries[key[len("injury."):]] = cost
            else:
                out.error("unknown-key", f"section 'schedule' does not take entry {key!r}", e.span)
        defaults = MagnitudeSchedule()
        try:
            schedule = MagnitudeSchedule(
                vsl_usd=defaults.vsl_usd if vsl is None else vsl,
                travel_time_usd_per_person_hour=defaults.travel_time_usd_per_person_hour if hour is None else hour,
                injury_cost_table=injuries,
            )
        except ValueError as exc:
            out.error("bad-value", str(exc), s.span)

    scenario = Scenario(
        name=name,
        description=description,
        unit=unit,
        selection_mode=selection,
        schema=schema,
        parties=tuple(parties),
        actions=tuple(actions),
        policy=policy,
        weighting=weighting,
        modifiers=modifiers,
        schedule=schedule,
        source_map=source_map,
    )
    out.diags.extend(validate(scenario))

    if any(d.severity is Severity.error for d in out.diags):
        return ParseResult(None, tuple(out.diags))
    return ParseResult(scenario, tuple(out.diags))


def _typed_attribute(kind: str, entry: _Entry, out: _Collector) -> Optional[object]:
    if kind == "bool":
        return _parse_bool(entry, out)
    if kind == "int":
        try:
            return int(entry.value, 10)
        except ValueError:
            out.error("bad-number", f"attribute {entry.key!r} expects an integer", entry.vspan)
            return None
    if kind == "real":
        return _parse_float(entry, out)
    return entry.value


def parse_path(path: str | Path) -> ParseResult:
    return parse(Path(path).read_text(encoding="utf-8"))


def _fmt_attr(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(scenario: Scenario) -> str:
    """Canonical text form. parse(serialize(s)) is structurally equal to s
    for any valid scenario; two calls yield byte-identical output.

    Canonical section order: scenario, schema, parties, actions (each with
    its outcomes), policy, weighting, modifiers, schedule.
    """
    lines: list[str] = []

    lines.append(f"scenario {scenario.name}")
    if scenario.description:
        lines.append(f"  description = {scenario.description}")
    lines.append(f"  unit = {scenario.unit.value}")
    lines.append(f"  selection = {scenario.selection_mode.value}")

    if scenario.schema:
        lines.append("")
        lines.append("schema")
        for key in sorted(scenario.schema):
            lines.append(f"  {key} = {scenario.schema[key]}")

    for p in scenario.parties:
        lines.append("")
        lines.append(f"party {p.id}")
        lines.append(f"  role = {p.role.value}")
        for flag, value in (
            ("voluntary", p.voluntary_exposure),
            ("informed", p.informed),
            ("beneficiary", p.is_beneficiary),
            ("decision_maker", p.is_decision_maker),
        ):
            if value:
                lines.append(f"  {flag} = true")
        for key in sorted(p.attributes):
            lines.append(f"  {key} = {_fmt_attr(p.attributes[key])}")

    for a in scenario.actions:
        lines.append("")
        lines.append(f"action {a.id}")
        if a.label:
            lines.append(f"  label = {a.label}")
        if a.hold_course:
            lines.append("  hold_course = true")
        for o in a.outcomes:
            lines.append("")
            lines.append(f"outcome {o.id}")
            if o.description:
                lines.append(f"  description = {o.description}")
            lines.append(f"  magnitude = {o.magnitude!r}")
            lines.append(f"  probability = {o.probability!r}")
            if o.uncertainty is not None:
                lines.append(f"  uncertainty = {o.uncertainty.lo!r} to {o.uncertainty.hi!r}")
            if o.affected_party is not None:
                lines.append(f"  party = {o.affected_party}")
            if o.exclusive_group is not None:
                lines.append(f"  group = {o.exclusive_group}")

    policy = scenario.policy
    lines.append("")
    lines.append("policy")
    lines.append(f"  exclude = {', '.join(sorted(policy.excluded))}")
    for key in sorted(policy.rationale):
        lines.append(f"  rationale.{key} = {policy.rationale[key]}")

    lines.append("")
    lines.append("weighting")
    lines.append(f"  mode = {scenario.weighting.mode.value}")
    lines.append(f"  gamma = {scenario.weighting.gamma!r}")

    table = scenario.modifiers
    lines.append("")
    lines.append("modifiers")
    for key in sorted(table.flags):
        lines.append(f"  {key} = {table.flags[key]!r}")
    for attr, value in sorted(table.equals):
        lines.append(f"  {attr}.{value} = {table.equals[(attr, value)]!r}")
    for key in sorted(table.anchors):
        pairs = ", ".join(f"{v!r}:{f!r}" for v, f in table.anchors[key])
        lines.append(f"  {key} = {pairs}")

    sched = scenario.schedule
    lines.append("")
    lines.append("schedule")
    lines.append(f"  vsl = {sched.vsl_usd!r}")
    lines.append(f"  person_hour = {sched.travel_time_usd_per_person_hour!r}")
    for cls in sorted(sched.injury_cost_table):
        lines.append(f"  injury.{cls} = {sched.injury_cost_table[cls]!r}")

    lines.append("")
    return "\n".join(lines)


def catalog_names() -> tuple[str, ...]:
    return CATALOG_NAMES


def catalog_text(name: str) -> str:
    if name not in CATALOG_NAMES:
        raise KeyError(f"unknown catalog scenario {name!r}")
    return resources.files(__package__).joinpath("catalog", f"{name}.scn").read_text(encoding="utf-8")


def load_catalog(name: str) -> Scenario:
    result = parse(catalog_text(name))
    if result.scenario is None:  # pragma: no cover - catalog is authored clean
        raise RuntimeError(f"catalog scenario {name!r} failed to parse: {result.diagnostics}")
    return result.scenario


def catalog() -> dict[str, Scenario]:
    """The five shipped scenarios, parsed fresh."""
    return {name: load_catalog(name) for name in CATALOG_NAMES}
