"""Command-line front end: check, evaluate, simulate, compare, audit.

Exit codes: 0 success, 1 input or validation problems (diagnostics are
printed with line and column), 2 internal errors. Machine-readable output
(csv, json) is byte-identical for identical configuration and seed; worker
count and numeric backend never appear in it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .audit import fairness_index, hansson_report, risk_distribution
from .baselines import compare
from .dsl import CATALOG_NAMES, catalog_text, parse
from .engine import apply_modifiers, decide
from .errors import AvriskError, NoExposedParties
from .model import (
    CertaintyWeighting,
    Diagnostic,
    FairnessPolicy,
    Scenario,
    SelectionMode,
    Severity,
    WeightingMode,
    validate,
)
from .simulate import consistency_check

__all__ = ["RunConfig", "run", "main", "SEED_ENV", "CATALOG_PREFIX"]

SEED_ENV = "AVRISK_SEED"
CATALOG_PREFIX = "catalog:"

_ROW_ORDER = ("risk_expected", "risk_robust", "deontological", "trolley")


@dataclass(frozen=True, slots=True)
class RunConfig:
    command: str
    path: str
    fmt: str = "table"
    trials: int = 100_000
    seed: int = 0
    workers: int = 1
    gamma: Optional[float] = None
    weighting: Optional[str] = None
    selection: Optional[str] = None
    exclude: Optional[str] = None


def _num(x: float) -> str:
    return "%.12g" % x


def _read_text(path: str) -> str:
    if path.startswith(CATALOG_PREFIX):
        return catalog_text(path[len(CATALOG_PREFIX):])
    return Path(path).read_text(encoding="utf-8")


def _apply_overrides(scenario: Scenario, config: RunConfig) -> Scenario:
    s = scenario
    if config.weighting is not None or config.gamma is not None:
        mode = WeightingMode(config.weighting) if config.weighting else s.weighting.mode
        gamma = s.weighting.gamma if config.gamma is None else config.gamma
        s = replace(s, weighting=CertaintyWeighting(mode=mode, gamma=gamma))
    if config.selection is not None:
        s = replace(s, selection_mode=SelectionMode(config.selection))
    if config.exclude is not None:
        names = frozenset(n.strip() for n in config.exclude.split(",") if n.strip())
        rationale = s.policy.rationale if s.policy else {}
        s = replace(s, policy=FairnessPolicy(excluded=names, rationale=rationale))
    return s


def _print_diagnostics(diags: Sequence[Diagnostic], stream) -> None:
    for d in diags:
        print(str(d), file=stream)


def _emit(text: str) -> None:
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")


def _csv_block(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_block(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _bool(value: bool) -> str:
    return "true" if value else "false"


# each command handler returns (exit code, stdout text)


def _cmd_check(config: RunConfig) -> int:
    result = parse(_read_text(config.path))
    diags = result.diagnostics
    errors = [d for d in diags if d.severity is Severity.error]
    if config.fmt == "json":
        payload = {
            "ok": not errors,
            "scenario": result.scenario.name if result.scenario else None,
            "diagnostics": [
                {
                    "line": d.span.line,
                    "column": d.span.column,
                    "severity": d.severity.value,
                    "code": d.code,
                    "message": d.message,
                }
                for d in diags
            ],
        }
        _emit(_json_block(payload))
    elif config.fmt == "csv":
        rows = [
            [str(d.span.line), str(d.span.column), d.severity.value, d.code, d.message]
            for d in diags
        ]
        _emit(_csv_block(("line", "column", "severity", "code", "message"), rows))
    else:
        _print_diagnostics(diags, sys.stdout)
        if errors:
            print(f"{len(errors)} error(s)")
        else:
            name = result.scenario.name if result.scenario else "?"
            print(f"ok: {name}")
    return 1 if errors else 0


def _load(config: RunConfig) -> Scenario:
    """Parse, apply flag overrides, revalidate. Raises _InputError with
    printable diagnostics when the effective scenario is unusable."""
    result = parse(_read_text(config.path))
    if result.scenario is None:
        raise _InputError(result.diagnostics)
    scenario = _apply_overrides(result.scenario, config)
    diags = validate(scenario)
    errors = [d for d in diags if d.severity is Severity.error]
    if errors:
        raise _InputError(errors)
    return scenario


class _InputError(Exception):
    def __init__(self, diagnostics: Sequence[Diagnostic]):
        super().__init__(f"{len(diagnostics)} diagnostic(s)")
        self.diagnostics = tuple(diagnostics)


def _cmd_evaluate(config: RunConfig) -> int:
    scenario = _load(config)
    decision = decide(scenario)
    outcomes = {
        (a.id, o.id): o for a in scenario.actions for o in a.outcomes
    }
    rationale = (
        "tie broken by policy (hold course, then id)"
        if decision.tie_broken
        else "strict minimum"
    )

    if config.fmt == "json":
        payload = {
            "scenario": scenario.name,
            "unit": scenario.unit.value,
            "selection": scenario.selection_mode.value,
            "weighting": {
                "mode": scenario.weighting.mode.value,
                "gamma": scenario.weighting.gamma,
            },
            "chosen_action": decision.chosen_action,
            "tie_broken": decision.tie_broken,
            "actions": [
                {
                    "id": aid,
                    "penalty": score.penalty,
                    "interval": [score.interval.lo, score.interval.hi],
                    "outcomes": [
                        {
                            "id": e.outcome_id,
                            "magnitude": e.magnitude,
                            "probability": e.probability,
                            "penalty": e.contribution,
                            "modifiers": list(e.modifiers),
                        }
                        for e in decision.trace
                        if e.action_id == aid
                    ],
                }
                for aid, score in decision.per_action.items()
            ],
        }
        _emit(_json_block(payload))
        return 0

    if config.fmt == "csv":
        rows = []
        for e in decision.trace:
            o = outcomes[(e.action_id, e.outcome_id)]
            rows.append(
                [
                    e.action_id,
                    e.outcome_id,
                    o.description,
                    _num(e.magnitude),
                    _num(e.probability),
                    _num(e.contribution),
                ]
            )
        for aid, score in decision.per_action.items():
            rows.append([aid, "(total)", "", "", "", _num(score.penalty)])
        rows.append(["(chosen)", decision.chosen_action, "", "", "", ""])
        _emit(
            _csv_block(
                ("action", "outcome", "description", "magnitude", "probability", "penalty"),
                rows,
            )
        )
        return 0

    lines = [
        f"scenario {scenario.name} (unit {scenario.unit.value}, "
        f"selection {scenario.selection_mode.value}, "
        f"weighting {scenario.weighting.mode.value})"
    ]
    header = f"  {'outcome':<26} {'magnitude':>14} {'probability':>14} {'penalty':>14}  description"
    for aid, score in decision.per_action.items():
        lines.append(f"action {aid}")
        entries = [e for e in decision.trace if e.action_id == aid]
        if entries:
            lines.append(header)
        for e in entries:
            o = outcomes[(e.action_id, e.outcome_id)]
            note = f" [{', '.join(e.modifiers)}]" if e.modifiers else ""
            desc = o.description or o.id
            lines.append(
                f"  {e.outcome_id:<26} {_num(e.magnitude):>14} "
                f"{_num(e.probability):>14} {_num(e.contribution):>14}  {desc}{note}"
            )
        lines.append(
            f"  total {_num(score.penalty)}  "
            f"interval [{_num(score.interval.lo)}, {_num(score.interval.hi)}]"
        )
    lines.append(f"chosen: {decision.chosen_action}")
    lines.append(f"rationale: {rationale}")
    _emit("\n".join(lines))
    return 0


def _cmd_simulate(config: RunConfig) -> int:
    scenario = _load(config)
    report = consistency_check(
        scenario, n=config.trials, seed=config.seed, workers=config.workers
    )

    if config.fmt == "json":
        payload = {
            "scenario": scenario.name,
            "trials": report.n,
            "seed": report.seed,
            "passed": report.passed,
            "rows": [
                {
                    "action": r.action_id,
                    "analytic": r.analytic,
                    "empirical": r.empirical,
                    "stderr": r.stderr,
                    "z": r.z_score,
                    "passed": r.passed,
                }
                for r in report.rows
            ],
        }
        _emit(_json_block(payload))
        return 0

    if config.fmt == "csv":
        rows = [
            [
                r.action_id,
                _num(r.analytic),
                _num(r.empirical),
                _num(r.stderr),
                _num(r.z_score),
                _bool(r.passed),
            ]
            for r in report.rows
        ]
        rows.append(["(overall)", "", "", "", "", _bool(report.passed)])
        _emit(_csv_block(("action", "analytic", "empirical", "stderr", "z", "passed"), rows))
        return 0

    lines = [f"simulation: {scenario.name} (trials {report.n}, seed {report.seed})"]
    lines.append(
        f"  {'action':<26} {'analytic':>14} {'empirical':>14} {'stderr':>12} {'z':>8}"
    )
    for r in report.rows:
        verdict = "pass" if r.passed else "FAIL"
        lines.append(
            f"  {r.action_id:<26} {_num(r.analytic):>14} {_num(r.empirical):>14} "
            f"{_num(r.stderr):>12} {_num(r.z_score):>8}  {verdict}"
        )
    lines.append(f"overall: {'pass' if report.passed else 'FAIL'}")
    _emit("\n".join(lines))
    return 0


def _cmd_compare(config: RunConfig) -> int:
    scenario = _load(config)
    report = compare(scenario)
    deciders = [d for d in _ROW_ORDER if d in report.rows]

    if config.fmt == "json":
        payload = {
            "scenario": scenario.name,
            "rows": {
                d: {"action": report.rows[d][0], "penalty": report.rows[d][1]}
                for d in deciders
            },
            "divergence": report.divergence,
            "gap": report.gap,
            "trolley_applicable": report.trolley_applicable,
        }
        _emit(_json_block(payload))
        return 0

    if config.fmt == "csv":
        rows = [[d, report.rows[d][0], _num(report.rows[d][1])] for d in deciders]
        rows.append(["(divergence)", _bool(report.divergence), ""])
        rows.append(["(gap)", "", _num(report.gap)])
        _emit(_csv_block(("decider", "action", "penalty"), rows))
        return 0

    lines = [f"comparison: {scenario.name}"]
    lines.append(f"  {'decider':<16} {'action':<26} {'penalty':>14}")
    for d in deciders:
        aid, penalty = report.rows[d]
        lines.append(f"  {d:<16} {aid:<26} {_num(penalty):>14}")
    if not report.trolley_applicable:
        lines.append("  trolley: not applicable")
    lines.append(
        f"divergence: {'yes' if report.divergence else 'no'}  gap: {_num(report.gap)}"
    )
    _emit("\n".join(lines))
    return 0


def _cmd_audit(config: RunConfig) -> int:
    scenario = _load(config)
    decision = decide(scenario)
    effective, _ = apply_modifiers(scenario)
    dist = risk_distribution(effective, decision.chosen_action)
    try:
        index: Optional[float] = fairness_index(dist)
    except NoExposedParties:
        index = None
    report = hansson_report(effective, decision)

    if config.fmt == "json":
        payload = {
            "scenario": scenario.name,
            "chosen_action": decision.chosen_action,
            "fairness_index": index,
            "shares": dict(dist.shares),
            "total": dist.total,
            "entries": [
                {"number": e.number, "question": e.question, "inputs": e.inputs}
                for e in report.entries
            ],
        }
        _emit(_json_block(payload))
        return 0

    if config.fmt == "csv":
        rows = [
            [str(e.number), e.question, json.dumps(e.inputs, sort_keys=True)]
            for e in report.entries
        ]
        _emit(_csv_block(("number", "question", "inputs"), rows))
        return 0

    lines = [f"audit: {scenario.name}"]
    lines.append(f"chosen action: {decision.chosen_action}")
    lines.append(f"fairness index: {'n/a' if index is None else _num(index)}")
    lines.append("risk shares:")
    for pid in sorted(dist.shares):
        lines.append(f"  {pid:<26} {_num(dist.shares[pid]):>14}")
    for e in report.entries:
        lines.append(f"{e.number}. {e.question}")
        for key in sorted(e.inputs):
            lines.append(f"   {key} = {json.dumps(e.inputs[key], sort_keys=True)}")
    _emit("\n".join(lines))
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "evaluate": _cmd_evaluate,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "audit": _cmd_audit,
}


def run(config: RunConfig) -> int:
    try:
        return _COMMANDS[config.command](config)
    except _InputError as exc:
        _print_diagnostics(exc.diagnostics, sys.stderr)
        return 1
    except (OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AvriskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # the contract: never a traceback, exit 2
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return 0 if raw is None else int(raw)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avrisk",
        description="Risk-managed maneuver selection: evaluate, simulate, and audit scenario files.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "path",
            help=f"scenario file, or catalog:<name> with name in {', '.join(CATALOG_NAMES)}",
        )
        p.add_argument(
            "--format",
            dest="fmt",
            choices=("table", "csv", "json"),
            default="table",
            help="output format (default: table)",
        )

    def overrides(p: argparse.ArgumentParser) -> None:
        p.add_argument("--gamma", type=float, default=None, help="certainty-weighting exponent")
        p.add_argument(
            "--weighting",
            choices=tuple(m.value for m in WeightingMode),
            default=None,
            help="override the weighting mode",
        )
        p.add_argument(
            "--selection",
            choices=tuple(m.value for m in SelectionMode),
            default=None,
            help="override the selection mode",
        )
        p.add_argument(
            "--exclude",
            default=None,
            help="comma-separated attributes withheld from the decision; empty string clears",
        )

    p = sub.add_parser("check", help="parse and validate a scenario file")
    common(p)

    p = sub.add_parser("evaluate", help="pick the minimum-risk action and show the arithmetic")
    common(p)
    overrides(p)

    p = sub.add_parser("simulate", help="Monte Carlo estimate per action, checked against the analytic value")
    common(p)
    overrides(p)
    p.add_argument("--trials", type=_positive_int, default=100_000, help="episodes per action")
    p.add_argument(
        "--seed",
        type=int,
        default=_default_seed(),
        help=f"random seed (default: ${SEED_ENV} or 0)",
    )
    p.add_argument("--workers", type=_positive_int, default=1, help="worker threads")

    p = sub.add_parser("compare", help="contrast risk, robust, deontological, and trolley deciders")
    common(p)
    overrides(p)

    p = sub.add_parser("audit", help="per-party risk shares and the seven-question report")
    common(p)
    overrides(p)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
        config = RunConfig(
            command=ns.command,
            path=ns.path,
            fmt=ns.fmt,
            trials=getattr(ns, "trials", 100_000),
            seed=getattr(ns, "seed", 0),
            workers=getattr(ns, "workers", 1),
            gamma=getattr(ns, "gamma", None),
            weighting=getattr(ns, "weighting", None),
            selection=getattr(ns, "selection", None),
            exclude=getattr(ns, "exclude", None),
        )
    except SystemExit as exc:
        code = exc.code
        if isinstance(code, int):
            return code
        return 0 if code is None else 2
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
