"""Grading pipeline: comparators, pipeline ordering, common-mistake matching."""

from dataclasses import dataclass, field

import pytest

from commlab.errors import AuthoringError
from commlab.grader import (BannedFunctions, CommonMistake, FigureMatch,
                            ProtectedInputs, ProtocolTraceCheck, VarClose,
                            VarCloseMSE, VarEquals, VarExists, check_banned,
                            check_id, check_protected_inputs, compare_close,
                            compare_exact, compare_figures, compare_mse, fill,
                            grade)
from commlab.interpreter import ExecLimits, run_source
from commlab.parser import parse
from commlab.profiles import get_profile
from commlab.values import Cell, Vec

EPS = 2.0 ** -52


@dataclass
class FakeTask:
    reference: str
    checks: list
    id: str = "lab0/task0"
    profile: str = "eq-a05"
    common_mistakes: list = field(default_factory=list)
    limits: ExecLimits = field(default_factory=ExecLimits)


def grade_pair(reference, submission, checks, **kw):
    return grade(FakeTask(reference=reference, checks=checks, **kw),
                 submission, student_seed=1, reference_seed=2)


def by_id(report, spec_id):
    matches = [r for r in report.results if r.spec_id == spec_id]
    assert matches, f"no result with id {spec_id}"
    return matches[0]


class TestCompareExact:
    def test_equal_numbers(self):
        assert compare_exact(3.0, 3.0) == (True, "")

    def test_unequal_numbers_report_both(self):
        ok, msg = compare_exact(3.0, 4.0)
        assert not ok
        assert msg == "observed 3, expected 4"

    def test_boolean_compares_as_number(self):
        assert compare_exact(True, 1.0)[0]
        assert compare_exact(False, 0.0)[0]

    def test_singleton_vector_compares_as_scalar(self):
        assert compare_exact(Vec([5.0]), 5.0)[0]
        assert compare_exact(5.0, Vec([5.0]))[0]

    def test_kind_mismatch_names_both_kinds(self):
        ok, msg = compare_exact("abc", Vec([1.0, 2.0]))
        assert not ok
        assert "should be a vector, but it is a string" in msg

    def test_vector_length_mismatch(self):
        ok, msg = compare_exact(Vec([1.0, 2.0]), Vec([1.0, 2.0, 3.0]))
        assert not ok
        assert "it has length 2, but should have length 3" in msg

    def test_vector_difference_is_one_indexed(self):
        ok, msg = compare_exact(Vec([1.0, 9.0, 3.0]), Vec([1.0, 2.0, 3.0]))
        assert not ok
        assert "differs at index 2: observed 9, expected 2" in msg

    def test_strings(self):
        assert compare_exact("hi", "hi")[0]
        assert not compare_exact("hi", "ho")[0]

    def test_lists_recurse_per_entry(self):
        a = Cell([Vec([1.0, 0.0]), Vec([0.0])])
        b = Cell([Vec([1.0, 0.0]), Vec([1.0])])
        assert compare_exact(a, Cell(list(a.items)))[0]
        ok, msg = compare_exact(a, b)
        assert not ok and msg.startswith("entry 2:")

    def test_list_length_mismatch(self):
        ok, msg = compare_exact(Cell([1.0]), Cell([1.0, 2.0]))
        assert not ok and "has 1 entries, but should have 2" in msg


class TestCompareClose:
    def test_allows_deviation_under_scaled_eps(self):
        r = Vec([1.0, 2.0, 4.0])
        s = Vec([1.0, 2.0, 4.0 + 3 * EPS * 4.0])
        assert compare_close(s, r, eps_multiple=4.0)[0]
        assert not compare_close(s, r, eps_multiple=2.0)[0]

    def test_scale_floor_is_one(self):
        # tiny references still allow eps_multiple * EPS absolute slack
        r = Vec([1e-20])
        s = Vec([1e-20 + 50 * EPS])
        assert compare_close(s, r, eps_multiple=100.0)[0]
        assert not compare_close(s, r, eps_multiple=10.0)[0]

    def test_plainly_wrong_values_fail(self):
        ok, msg = compare_close(Vec([1.0, 2.1]), Vec([1.0, 2.0]), 100.0)
        assert not ok
        assert "maximum deviation" in msg and "exceeds the allowed" in msg

    def test_length_mismatch(self):
        ok, msg = compare_close(Vec([1.0]), Vec([1.0, 2.0]), 100.0)
        assert not ok and "length 1" in msg

    def test_non_numeric_rejected(self):
        ok, msg = compare_close("abc", Vec([1.0]), 100.0)
        assert not ok and "should be numeric" in msg

    def test_scalar_against_singleton(self):
        assert compare_close(2.0, Vec([2.0]), 100.0)[0]


class TestCompareMse:
    def test_average_squared_error(self):
        # errors 0.1 and 0.1 -> mse 0.01
        s = Vec([1.1, 2.1])
        r = Vec([1.0, 2.0])
        assert compare_mse(s, r, tolerance=0.0101)[0]
        ok, msg = compare_mse(s, r, tolerance=0.0099)
        assert not ok and "mean squared error" in msg

    def test_length_mismatch(self):
        assert not compare_mse(Vec([1.0]), Vec([1.0, 2.0]), 1.0)[0]


class TestCompareFigures:
    def fig(self, source):
        out = run_source(source, get_profile("eq-a05"), ExecLimits())
        assert out.ok, out.error
        return out.figures

    def test_figure_count_checked_first(self):
        ok, msg = compare_figures(self.fig("plot([1 2]);"),
                                  self.fig("plot([1 2]);\nfigure(2);\nplot([1]);"),
                                  FigureMatch(figure=1))
        assert not ok and msg == "expected 2 figures, found 1"

    def test_curve_count_before_values(self):
        ok, msg = compare_figures(self.fig("plot([1 2]);"),
                                  self.fig("plot([9 9]);\nplot([8 8]);"),
                                  FigureMatch(figure=1))
        assert not ok and "expected 2 curves, found 1" in msg

    def test_point_count_before_values(self):
        ok, msg = compare_figures(self.fig("plot([1 2 3]);"),
                                  self.fig("plot([9 9]);"),
                                  FigureMatch(figure=1))
        assert not ok and "expected 2 points, found 3" in msg

    def test_structure_only_ignores_values(self):
        ok, _ = compare_figures(self.fig("plot([1 2 3]);"),
                                self.fig("plot([9 8 7]);"),
                                FigureMatch(figure=1, structure_only=True))
        assert ok

    def test_full_compare_checks_values(self):
        ok, msg = compare_figures(self.fig("plot([1 2 3]);"),
                                  self.fig("plot([1 2 4]);"),
                                  FigureMatch(figure=1))
        assert not ok and "figure 1, curve 1, y values" in msg

    def test_matching_figures_pass(self):
        ok, _ = compare_figures(self.fig("plot([1 2], 'o');"),
                                self.fig("plot([1 2], 'o');"),
                                FigureMatch(figure=1))
        assert ok

    def test_target_beyond_reference_is_authoring_error(self):
        with pytest.raises(AuthoringError, match="figure check targets"):
            compare_figures(self.fig("plot([1]);"), self.fig("plot([1]);"),
                            FigureMatch(figure=2))


class TestBannedScan:
    def test_reports_call_with_line(self):
        ok, msg = check_banned(parse("x = 1;\ny = text2bitseq('a');"),
                               ["text2bitseq"])
        assert not ok
        assert msg == ("The function 'text2bitseq' may not be used in this "
                       "task (line 2).")

    def test_only_call_position_counts(self):
        src = "text2bitseq = 5;\nx = text2bitseq + 1;\ny = text2bitseq(1);"
        ok, _ = check_banned(parse(src), ["text2bitseq"])
        # the indexed read on line 3 parses as a call; lines 1-2 alone pass
        assert not ok
        ok, _ = check_banned(parse(src.rsplit("\n", 1)[0]), ["text2bitseq"])
        assert ok

    def test_each_name_reported_once(self):
        src = "a = ber([1], [1]);\nb = ber([0], [0]);"
        ok, msg = check_banned(parse(src), ["ber"])
        assert not ok and msg.count("'ber'") == 1 and "(line 1)" in msg

    def test_clean_script_passes(self):
        assert check_banned(parse("x = 1;"), ["ber"]) == (True, "")


class TestProtectedInputs:
    def test_missing_variable_message(self):
        ok, msg = check_protected_inputs({}, {"tx_msg": "Finished!"})
        assert not ok
        assert msg == "Expected variable 'tx_msg' is missing."

    def test_changed_variable_message(self):
        ok, msg = check_protected_inputs({"SPB": 10.0}, {"SPB": 20.0})
        assert not ok
        assert msg == "The variable SPB should be 20. Do not change it."

    def test_string_expectation_rendering(self):
        ok, msg = check_protected_inputs({"tx_msg": "Hello!"},
                                         {"tx_msg": "Finished!"})
        assert not ok
        assert msg == "The variable tx_msg should be 'Finished!'. Do not change it."

    def test_intact_inputs_pass(self):
        ok, msg = check_protected_inputs({"SPB": 20.0, "x": 1.0},
                                         {"SPB": 20.0})
        assert ok and msg == ""


class TestGradePipeline:
    CHECKS = [BannedFunctions(names=["ber"]), ProtectedInputs(required={}),
              VarExists("x"), VarEquals("x")]

    def test_passing_submission(self):
        rep = grade_pair("x = 2 + 2;", "x = 4;", self.CHECKS)
        assert rep.passed and rep.overall == "pass"
        assert rep.student_status == "ok"
        assert [r.verdict for r in rep.results] == ["pass"] * 5

    def test_check_ids_in_pipeline_order(self):
        rep = grade_pair("x = 1;", "x = 1;", self.CHECKS)
        assert [r.spec_id for r in rep.results] == [
            "banned", "execution", "inputs", "exists:x", "equals:x"]

    def test_wrong_value_uses_default_template(self):
        rep = grade_pair("x = 4;", "x = 5;", self.CHECKS)
        assert not rep.passed
        msg = by_id(rep, "equals:x").message
        assert "The variable 'x' does not have the expected value" in msg
        assert "observed 5, expected 4" in msg

    def test_custom_check_message(self):
        checks = [VarExists("x"),
                  VarEquals("x", message="{var} is off: saw {observed}.")]
        rep = grade_pair("x = 4;", "x = 5;", checks)
        assert by_id(rep, "equals:x").message == "x is off: saw 5."

    def test_banned_short_circuits_execution(self):
        rep = grade_pair("x = 1;", "x = ber([1], [1]);", self.CHECKS)
        assert rep.student_status == "not-run"
        assert by_id(rep, "banned").verdict == "fail"
        assert "may not be used in this task (line 1)" in by_id(rep, "banned").message
        assert by_id(rep, "execution").verdict == "skipped"
        assert "banned function" in by_id(rep, "execution").message
        assert by_id(rep, "equals:x").verdict == "skipped"

    def test_syntax_error_skips_everything(self):
        rep = grade_pair("x = 1;", "x = [1 2", self.CHECKS)
        assert rep.student_status == "script-error"
        assert by_id(rep, "execution").verdict == "fail"
        assert by_id(rep, "execution").message.startswith("syntax error:")
        assert by_id(rep, "banned").verdict == "skipped"
        assert by_id(rep, "exists:x").verdict == "skipped"
        assert "did not parse" in by_id(rep, "exists:x").message

    def test_runtime_error_reports_line(self):
        rep = grade_pair("x = 1;", "y = 2;\nx = [1] + [1 2];", self.CHECKS)
        assert rep.student_status == "script-error"
        assert "(line 2)" in by_id(rep, "execution").message
        assert by_id(rep, "equals:x").verdict == "skipped"
        assert "did not run" in by_id(rep, "equals:x").message

    def test_protected_inputs_checked_even_after_crash(self):
        checks = [ProtectedInputs(required={"SPB": 20.0}), VarExists("x"),
                  VarEquals("x")]
        rep = grade_pair("SPB = 20;\nx = 1;",
                         "SPB = 10;\nboom = [1] + [1 2];\nx = 1;", checks)
        assert by_id(rep, "inputs").verdict == "fail"
        assert by_id(rep, "inputs").message == \
            "The variable SPB should be 20. Do not change it."

    def test_missing_variable_skips_value_check(self):
        rep = grade_pair("x = 1;", "y = 1;", self.CHECKS)
        assert by_id(rep, "exists:x").verdict == "fail"
        assert by_id(rep, "exists:x").message == "Expected variable 'x' is missing."
        assert by_id(rep, "equals:x").verdict == "skipped"
        assert "'x' is missing" in by_id(rep, "equals:x").message

    def test_close_and_mse_checks(self):
        checks = [VarExists("v"), VarClose("v", eps_multiple=100.0),
                  VarCloseMSE("v", mse_tolerance=1e-6)]
        rep = grade_pair("v = [1 2 3] / 3;", "v = [1 2 3] * (1 / 3);", checks)
        assert rep.passed

    def test_reference_crash_is_an_authoring_error(self):
        with pytest.raises(AuthoringError, match="reference script"):
            grade_pair("x = [1] + [1 2];", "x = 1;", [VarEquals("x")])

    def test_check_on_variable_reference_never_sets(self):
        with pytest.raises(AuthoringError, match="reference never sets"):
            grade_pair("x = 1;", "q = 1;", [VarEquals("q")])

    def test_figure_check_through_pipeline(self):
        checks = [FigureMatch(figure=1)]
        rep = grade_pair("plot([1 2 3]);", "plot([1 2 3]);", checks)
        assert rep.passed and rep.figure_count == 1

    def test_protocol_check_without_simulation(self):
        rep = grade(FakeTask(reference="x = 1;", profile="stopwait",
                             checks=[ProtocolTraceCheck()]),
                    "x = 1;", student_seed=1, reference_seed=2)
        assert not rep.passed
        assert "never run" in by_id(rep, "protocol").message

    def test_report_carries_output(self):
        rep = grade_pair("x = 1;", "disp('hi');\nx = 1;",
                         [VarExists("x"), VarEquals("x")])
        assert rep.printed == ["hi"]

    def test_same_seed_request_is_nudged_apart(self):
        rep = grade(FakeTask(reference="x = 1;",
                             checks=[VarExists("x"), VarEquals("x")]),
                    "x = 1;", student_seed=7, reference_seed=7)
        assert rep.student_seed == 7 and rep.reference_seed == 8


class TestCommonMistakes:
    MISTAKE = CommonMistake(
        id="backwards", script="x = [3 2 1];",
        message="You assembled {var} in reverse order.")

    def checks(self):
        return [VarExists("x"), VarEquals("x")]

    def test_reproducing_the_mistake_earns_its_message(self):
        rep = grade(FakeTask(reference="x = [1 2 3];", checks=self.checks(),
                             common_mistakes=[self.MISTAKE]),
                    "x = [3 2 1];", student_seed=1, reference_seed=2)
        assert by_id(rep, "equals:x").message == \
            "You assembled x in reverse order."

    def test_other_failures_fall_back_to_default(self):
        rep = grade(FakeTask(reference="x = [1 2 3];", checks=self.checks(),
                             common_mistakes=[self.MISTAKE]),
                    "x = [9 9 9];", student_seed=1, reference_seed=2)
        assert "does not have the expected value" in by_id(rep, "equals:x").message

    def test_crashing_mistake_script_is_ignored(self):
        bad = CommonMistake(id="broken", script="x = [1] + [1 2];", message="nope")
        rep = grade(FakeTask(reference="x = [1 2 3];", checks=self.checks(),
                             common_mistakes=[bad]),
                    "x = [9];", student_seed=1, reference_seed=2)
        assert by_id(rep, "equals:x").verdict == "fail"
        assert "nope" not in by_id(rep, "equals:x").message

    def test_mistake_run_shares_the_student_seed(self, monkeypatch):
        import commlab.grader as grader_mod
        seeds = {}
        real = grader_mod._run

        def spy(source, profile, limits, seed):
            seeds[source] = seed
            return real(source, profile, limits, seed)
        monkeypatch.setattr(grader_mod, "_run", spy)
        task = FakeTask(reference="x = [1 2 3];", checks=self.checks(),
                        common_mistakes=[self.MISTAKE])
        grade(task, "x = [3 2 1];", student_seed=41, reference_seed=42)
        assert seeds[self.MISTAKE.script] == 41
        assert seeds[task.reference] == 42

    def test_mistake_script_runs_at_most_once(self, monkeypatch):
        import commlab.grader as grader_mod
        counts = {"n": 0}
        real = grader_mod._run

        def spy(source, profile, limits, seed):
            if source == self.MISTAKE.script:
                counts["n"] += 1
            return real(source, profile, limits, seed)
        monkeypatch.setattr(grader_mod, "_run", spy)
        checks = [VarExists("x"), VarEquals("x"), VarExists("y"), VarEquals("y")]
        task = FakeTask(reference="x = [1 2 3];\ny = 5;", checks=checks,
                        common_mistakes=[self.MISTAKE])
        grade(task, "x = [3 2 1];\ny = 6;", student_seed=1, reference_seed=2)
        assert counts["n"] == 1


class TestTemplates:
    def test_fill_substitutes_known_names(self):
        assert fill("The variable {var} should be {expected}. Do not change it.",
                    var="SPB", expected="20") == \
            "The variable SPB should be 20. Do not change it."

    def test_fill_leaves_unknown_placeholders(self):
        assert fill("keep {unknown} as-is", var="x") == "keep {unknown} as-is"

    def test_check_ids(self):
        assert check_id(BannedFunctions()) == "banned"
        assert check_id(ProtectedInputs()) == "inputs"
        assert check_id(VarExists("a")) == "exists:a"
        assert check_id(VarEquals("a")) == "equals:a"
        assert check_id(VarClose("a")) == "close:a"
        assert check_id(VarCloseMSE("a")) == "mse:a"
        assert check_id(FigureMatch(figure=3)) == "figure:3"
        assert check_id(ProtocolTraceCheck()) == "protocol"
