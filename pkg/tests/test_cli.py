import csv
import io
import json

import pytest

from avrisk import cli
from avrisk.cli import RunConfig, main, run

BAD_PROBABILITY = """\
scenario broken

action only
outcome something
  magnitude = 3
  probability = 1.3
"""


def invoke(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


class TestCheck:
    def test_valid_catalog(self, capsys):
        code, out, err = invoke(capsys, ["check", "catalog:lane_change_truck"])
        assert code == 0
        assert "ok: lane_change_truck" in out
        assert err == ""

    def test_bad_probability_exits_one(self, capsys, tmp_path):
        path = tmp_path / "broken.scn"
        path.write_text(BAD_PROBABILITY, encoding="utf-8")
        code, out, _ = invoke(capsys, ["check", str(path)])
        assert code == 1
        first = out.splitlines()[0]
        assert "error[probability-range]" in first
        line, col, _ = first.split(":", 2)
        assert int(line) >= 1 and int(col) >= 1
        assert "1 error(s)" in out

    def test_json_shape(self, capsys, tmp_path):
        path = tmp_path / "broken.scn"
        path.write_text(BAD_PROBABILITY, encoding="utf-8")
        code, out, _ = invoke(capsys, ["check", str(path), "--format", "json"])
        assert code == 1
        payload = json.loads(out)
        assert payload["ok"] is False
        (diag,) = payload["diagnostics"]
        assert diag["code"] == "probability-range"
        assert diag["severity"] == "error"
        assert diag["line"] >= 1 and diag["column"] >= 1

    def test_csv_shape(self, capsys):
        code, out, _ = invoke(capsys, ["check", "catalog:tunnel_child", "--format", "csv"])
        assert code == 0
        assert rows_of(out)[0] == ["line", "column", "severity", "code", "message"]


class TestErrorPaths:
    def test_missing_file(self, capsys, tmp_path):
        code, _, err = invoke(capsys, ["evaluate", str(tmp_path / "nope.scn")])
        assert code == 1
        assert err.startswith("error:")

    def test_unknown_catalog_name(self, capsys):
        code, _, err = invoke(capsys, ["evaluate", "catalog:ghost"])
        assert code == 1
        assert "error:" in err

    def test_invalid_scenario_diagnostics_on_stderr(self, capsys, tmp_path):
        path = tmp_path / "broken.scn"
        path.write_text(BAD_PROBABILITY, encoding="utf-8")
        code, out, err = invoke(capsys, ["evaluate", str(path)])
        assert code == 1
        assert out == ""
        assert "probability-range" in err

    def test_unexpected_exception_exits_two(self, capsys, monkeypatch):
        def boom(config):
            raise RuntimeError("wires crossed")

        monkeypatch.setitem(cli._COMMANDS, "evaluate", boom)
        code = run(RunConfig(command="evaluate", path="catalog:tunnel_child"))
        err = capsys.readouterr().err
        assert code == 2
        assert err == "internal error: RuntimeError: wires crossed\n"

    def test_argparse_rejects_nonpositive_trials(self, capsys):
        code, _, err = invoke(
            capsys, ["simulate", "catalog:tunnel_child", "--trials", "0"]
        )
        assert code == 2
        assert "must be >= 1" in err

    def test_negative_gamma_rejected(self, capsys):
        code, _, err = invoke(
            capsys, ["evaluate", "catalog:tunnel_child", "--gamma", "-1"]
        )
        assert code == 1
        assert "bad-number" in err


class TestEvaluate:
    def test_csv_penalty_column(self, capsys):
        code, out, _ = invoke(
            capsys, ["evaluate", "catalog:lane_change_truck", "--format", "csv"]
        )
        assert code == 0
        rows = rows_of(out)
        assert rows[0] == ["action", "outcome", "description", "magnitude", "probability", "penalty"]
        planned = [r[5] for r in rows if r[0] == "move_left_turn_planned" and r[1] != "(total)"]
        assert planned == ["0.5", "2", "3", "1", "1", "0.5", "50"]
        totals = {r[0]: r[5] for r in rows if r[1] == "(total)"}
        assert totals == {"move_left_turn_planned": "58", "move_left_no_turn": "8"}
        assert rows[-1][:2] == ["(chosen)", "move_left_no_turn"]

    def test_json_runs_are_byte_identical(self, capsys):
        argv = ["evaluate", "catalog:lane_change_truck", "--format", "json"]
        _, first, _ = invoke(capsys, argv)
        _, second, _ = invoke(capsys, argv)
        assert first == second
        payload = json.loads(first)
        assert payload["chosen_action"] == "move_left_no_turn"

    def test_table_lists_choice_and_rationale(self, capsys):
        code, out, _ = invoke(capsys, ["evaluate", "catalog:lane_change_truck"])
        assert code == 0
        assert "chosen: move_left_no_turn" in out
        assert "rationale:" in out


class TestOverrides:
    def test_weighting_flip_changes_the_choice(self, capsys):
        _, base, _ = invoke(capsys, ["evaluate", "catalog:tunnel_child", "--format", "json"])
        _, flipped, _ = invoke(
            capsys,
            ["evaluate", "catalog:tunnel_child", "--format", "json", "--weighting", "exponential"],
        )
        assert json.loads(base)["chosen_action"] == "stay"
        assert json.loads(flipped)["chosen_action"] == "swerve_partial"

    def test_exclude_empty_string_clears_the_policy(self, capsys):
        _, base, _ = invoke(
            capsys, ["evaluate", "catalog:motorcyclists_helmet", "--format", "json"]
        )
        _, opened, _ = invoke(
            capsys,
            ["evaluate", "catalog:motorcyclists_helmet", "--format", "json", "--exclude", ""],
        )
        base, opened = json.loads(base), json.loads(opened)
        assert base["tie_broken"] is True
        assert opened["tie_broken"] is False
        penalties = {a["id"]: a["penalty"] for a in opened["actions"]}
        assert penalties == {"veer_left": 0.4, "veer_right": 0.8}

    def test_selection_override_lands_in_output(self, capsys):
        _, out, _ = invoke(
            capsys,
            [
                "evaluate",
                "catalog:motorcyclists_helmet",
                "--format",
                "json",
                "--selection",
                "robust_worst_case",
            ],
        )
        assert json.loads(out)["selection"] == "robust_worst_case"


class TestSimulate:
    def test_worker_count_invisible_in_output(self, capsys):
        base = ["simulate", "catalog:tunnel_child", "--trials", "2000", "--seed", "9", "--format", "json"]
        _, one, _ = invoke(capsys, base + ["--workers", "1"])
        _, four, _ = invoke(capsys, base + ["--workers", "4"])
        assert one == four

    def test_seed_changes_the_estimate(self, capsys):
        base = ["simulate", "catalog:tunnel_child", "--trials", "2000", "--format", "json"]
        _, a, _ = invoke(capsys, base + ["--seed", "1"])
        _, b, _ = invoke(capsys, base + ["--seed", "2"])
        assert a != b

    def test_seed_env_variable_is_the_default(self, capsys, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV, "42")
        _, out, _ = invoke(
            capsys, ["simulate", "catalog:tunnel_child", "--trials", "100", "--format", "json"]
        )
        assert json.loads(out)["seed"] == 42

    def test_csv_has_overall_row(self, capsys):
        code, out, _ = invoke(
            capsys,
            ["simulate", "catalog:tunnel_child", "--trials", "5000", "--seed", "3", "--format", "csv"],
        )
        assert code == 0
        rows = rows_of(out)
        assert rows[0] == ["action", "analytic", "empirical", "stderr", "z", "passed"]
        assert rows[-1][0] == "(overall)"
        assert rows[-1][-1] == "true"


class TestCompare:
    def test_pathology_gap_in_csv(self, capsys, tmp_path, pathology):
        from avrisk.dsl import serialize

        path = tmp_path / "pathology.scn"
        path.write_text(serialize(pathology), encoding="utf-8")
        code, out, _ = invoke(capsys, ["compare", str(path), "--format", "csv"])
        assert code == 0
        rows = rows_of(out)
        by_head = {r[0]: r for r in rows}
        assert by_head["(divergence)"][1] == "true"
        assert by_head["(gap)"][2] == "19300"
        assert by_head["deontological"][1] == "accelerate"
        assert by_head["risk_expected"][1] == "brake"

    def test_json_row_order_is_stable(self, capsys):
        _, out, _ = invoke(capsys, ["compare", "catalog:tunnel_child", "--format", "json"])
        payload = json.loads(out)
        assert set(payload["rows"]) <= {"risk_expected", "risk_robust", "deontological", "trolley"}
        assert payload["trolley_applicable"] is False


class TestAudit:
    def test_table_output(self, capsys):
        code, out, _ = invoke(capsys, ["audit", "catalog:lane_positioning"])
        assert code == 0
        assert "fairness index:" in out
        for number in range(1, 8):
            assert f"{number}. " in out

    def test_json_entries(self, capsys):
        _, out, _ = invoke(capsys, ["audit", "catalog:lane_positioning", "--format", "json"])
        payload = json.loads(out)
        assert len(payload["entries"]) == 7
        assert payload["fairness_index"] == pytest.approx(3.6666666666666665, rel=1e-12)


class TestPlumbing:
    def test_version_flag(self, capsys):
        code, out, _ = invoke(capsys, ["--version"])
        assert code == 0
        assert out.startswith("avrisk ")

    def test_missing_subcommand_is_usage_error(self, capsys):
        assert main([]) == 2

    def test_module_entry_point(self):
        import avrisk.__main__  # noqa: F401
