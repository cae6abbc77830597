"""Risk-managed maneuver selection for automated vehicles.

Scenarios describe candidate actions, their uncertain outcomes, and the
parties those outcomes fall on. The engine scores each action by expected
penalty (optionally certainty-weighted or worst-case), a seeded Monte
Carlo simulator cross-checks the arithmetic, and the audit tools account
for who actually carries the risk.
"""

__version__ = "0.1.0"

from .audit import (
    HANSSON_QUESTIONS,
    AuditEntry,
    HanssonReport,
    RiskDistribution,
    fairness_index,
    hansson_report,
    risk_distribution,
    risk_transfer,
)
from .baselines import (
    DEFAULT_HIERARCHY,
    ComparisonReport,
    DeonDecision,
    Hierarchy,
    compare,
    decide_deontological,
    decide_trolley,
)
from .dsl import (
    CATALOG_NAMES,
    ParseResult,
    catalog,
    catalog_names,
    catalog_text,
    load_catalog,
    parse,
    parse_path,
    serialize,
)
from .engine import (
    TIE_REL_TOL,
    apply_modifiers,
    cumulative_risk,
    decide,
    decision_trace,
    penalty_interval,
    risk_penalty,
    select_action,
)
from .errors import (
    AvriskError,
    EmptyActionSet,
    InvalidScenario,
    NoExposedParties,
    NotATrolleyScenario,
    UnassignedOutcomeWarning,
    UnknownAttribute,
    UnknownInjuryClass,
)
from .fairness import (
    ExclusionReport,
    Witness,
    exclusion_invariance_check,
    redact,
)
from .model import (
    DEFAULT_EXCLUDED,
    ENVIRONMENT_PARTY,
    GAMMA_DEFAULT,
    Action,
    ActionScore,
    CertaintyWeighting,
    DecisionResult,
    Diagnostic,
    FairnessPolicy,
    Interval,
    Outcome,
    Party,
    Role,
    Scenario,
    SelectionMode,
    Severity,
    SourceSpan,
    TraceEntry,
    Unit,
    WeightingMode,
    validate,
)
from .simulate import (
    ConsistencyReport,
    ConsistencyRow,
    Episode,
    SimulationEstimate,
    consistency_check,
    episode_cost,
    party_exposure,
    sample_episode,
    simulate,
)
from .valuation import (
    TRAVEL_TIME_USD_PER_PERSON_HOUR,
    VSL_USD,
    Consequence,
    MagnitudeSchedule,
    ModifierTable,
    apply_fatality_modifiers,
    certainty_weighted_penalty,
    default_modifier_table,
    monetize,
    party_factor,
)

__all__ = [
    "__version__",
    # model
    "Action",
    "ActionScore",
    "CertaintyWeighting",
    "DecisionResult",
    "Diagnostic",
    "FairnessPolicy",
    "Interval",
    "Outcome",
    "Party",
    "Role",
    "Scenario",
    "SelectionMode",
    "Severity",
    "SourceSpan",
    "TraceEntry",
    "Unit",
    "WeightingMode",
    "validate",
    "DEFAULT_EXCLUDED",
    "ENVIRONMENT_PARTY",
    "GAMMA_DEFAULT",
    # errors
    "AvriskError",
    "EmptyActionSet",
    "InvalidScenario",
    "NoExposedParties",
    "NotATrolleyScenario",
    "UnassignedOutcomeWarning",
    "UnknownAttribute",
    "UnknownInjuryClass",
    # engine
    "TIE_REL_TOL",
    "apply_modifiers",
    "cumulative_risk",
    "decide",
    "decision_trace",
    "penalty_interval",
    "risk_penalty",
    "select_action",
    # valuation
    "TRAVEL_TIME_USD_PER_PERSON_HOUR",
    "VSL_USD",
    "Consequence",
    "MagnitudeSchedule",
    "ModifierTable",
    "apply_fatality_modifiers",
    "certainty_weighted_penalty",
    "default_modifier_table",
    "monetize",
    "party_factor",
    # fairness
    "ExclusionReport",
    "Witness",
    "exclusion_invariance_check",
    "redact",
    # dsl
    "CATALOG_NAMES",
    "ParseResult",
    "catalog",
    "catalog_names",
    "catalog_text",
    "load_catalog",
    "parse",
    "parse_path",
    "serialize",
    # simulate
    "ConsistencyReport",
    "ConsistencyRow",
    "Episode",
    "SimulationEstimate",
    "consistency_check",
    "episode_cost",
    "party_exposure",
    "sample_episode",
    "simulate",
    # baselines
    "DEFAULT_HIERARCHY",
    "ComparisonReport",
    "DeonDecision",
    "Hierarchy",
    "compare",
    "decide_deontological",
    "decide_trolley",
    # audit
    "HANSSON_QUESTIONS",
    "AuditEntry",
    "HanssonReport",
    "RiskDistribution",
    "fairness_index",
    "hansson_report",
    "risk_distribution",
    "risk_transfer",
]
