"""Attempt store: append-only log, replay, sticky progress, score math."""

import hashlib
import json
import threading

import pytest

from commlab.grader import CheckResult, GradeReport
from commlab.interpreter import ExecOutcome
from commlab.manifest import load_course, shipped_course_dir
from commlab.store import Store, task_key


@pytest.fixture(scope="module")
def course():
    return load_course(shipped_course_dir())


@pytest.fixture
def store(course, tmp_path):
    return Store(course, tmp_path / "log.jsonl")


def ok_outcome():
    return ExecOutcome("ok", {}, [], [], None, None, None)


def report(passed=True, failing=()):
    results = [CheckResult("equals:x", "fail", msg) for msg in failing]
    return GradeReport("pass" if passed else "fail", results,
                       "ok", None, [], 0, student_seed=1, reference_seed=2)


KEY = task_key("lab1", "task2")


class TestRecording:
    def test_run_appends_one_event(self, store):
        store.record_run("ada", KEY, "x = 1;", ok_outcome(), seed=7)
        lines = store.log_path.read_text().splitlines()
        assert len(lines) == 1
        event = json.loads(lines[0])
        assert event["type"] == "attempt"
        assert event["kind"] == "run"
        assert event["student"] == "ada"
        assert event["task"] == KEY
        assert event["student_seed"] == 7

    def test_attempt_ids_increment(self, store):
        a = store.record_run("ada", KEY, "x = 1;", ok_outcome(), seed=1)
        b = store.record_check("ada", KEY, "x = 2;", report())
        assert (a.id, b.id) == (1, 2)

    def test_passing_check_completes_the_task(self, store):
        assert not store.completed("ada", KEY)
        store.record_check("ada", KEY, "x = 1;", report(passed=True))
        assert store.completed("ada", KEY)

    def test_failing_check_does_not_complete(self, store):
        store.record_check("ada", KEY, "x = 1;", report(passed=False,
                                                        failing=["wrong"]))
        assert not store.completed("ada", KEY)

    def test_completion_survives_later_failures(self, store):
        store.record_check("ada", KEY, "good", report(passed=True))
        store.record_check("ada", KEY, "bad", report(passed=False,
                                                     failing=["broke it"]))
        assert store.completed("ada", KEY)

    def test_quiz_correctness_is_sticky(self, store):
        store.record_quiz("ada", "quiz-threshold", False)
        assert not store.score("ada").quizzes["quiz-threshold"]
        store.record_quiz("ada", "quiz-threshold", True)
        store.record_quiz("ada", "quiz-threshold", False)
        assert store.score("ada").quizzes["quiz-threshold"]

    def test_exam_fraction_last_write_wins(self, store):
        store.set_exam_fraction("ada", 0.3)
        store.set_exam_fraction("ada", 0.8)
        assert store.score("ada").exam_fraction == 0.8

    def test_exam_fraction_validated(self, store):
        with pytest.raises(ValueError, match="within"):
            store.set_exam_fraction("ada", 1.2)

    def test_last_source_tracks_the_latest_attempt(self, store):
        store.record_run("ada", KEY, "first", ok_outcome(), seed=1)
        store.record_check("ada", KEY, "second", report())
        assert store.last_source("ada", KEY) == "second"
        assert store.last_source("ada", "lab9/none") is None

    def test_attempt_count_spans_runs_and_checks(self, store):
        store.record_run("ada", KEY, "a", ok_outcome(), seed=1)
        store.record_run("ada", KEY, "b", ok_outcome(), seed=2)
        store.record_check("ada", KEY, "c", report())
        assert store.attempt_count("ada", KEY) == 3
        assert store.attempt_count("ada", "lab2/task1") == 0

    def test_known_student(self, store):
        assert not store.known_student("ada")
        store.record_run("ada", KEY, "x", ok_outcome(), seed=1)
        assert store.known_student("ada")

    def test_failure_digest_hashes_the_messages(self, store):
        attempt = store.record_check("ada", KEY, "x", report(
            passed=False, failing=["msg one", "msg two"]))
        want = hashlib.sha256(b"msg one\nmsg two").hexdigest()[:16]
        assert attempt.message_digest == want

    def test_clean_pass_has_empty_digest(self, store):
        attempt = store.record_check("ada", KEY, "x", report(passed=True))
        assert attempt.message_digest == ""


class TestDurability:
    def test_log_is_append_only(self, store):
        store.record_run("ada", KEY, "a", ok_outcome(), seed=1)
        before = store.log_path.read_text()
        store.record_check("ada", KEY, "b", report())
        after = store.log_path.read_text()
        assert after.startswith(before)
        assert len(after.splitlines()) == 2

    def test_replay_rebuilds_identical_state(self, course, tmp_path):
        log = tmp_path / "log.jsonl"
        first = Store(course, log)
        first.record_run("ada", KEY, "draft", ok_outcome(), seed=1)
        first.record_check("ada", KEY, "final", report(passed=True))
        first.record_quiz("ada", "quiz-threshold", True)
        first.set_exam_fraction("ada", 0.75)
        first.record_check("bob", KEY, "try", report(passed=False,
                                                     failing=["nope"]))
        reopened = Store(course, log)
        for student in ("ada", "bob"):
            assert reopened.score(student).as_dict() == \
                first.score(student).as_dict()
        assert reopened.last_source("ada", KEY) == "final"
        assert reopened.attempt_count("ada", KEY) == 2

    def test_ids_continue_after_replay(self, course, tmp_path):
        log = tmp_path / "log.jsonl"
        first = Store(course, log)
        first.record_run("ada", KEY, "a", ok_outcome(), seed=1)
        first.record_run("ada", KEY, "b", ok_outcome(), seed=2)
        reopened = Store(course, log)
        attempt = reopened.record_run("ada", KEY, "c", ok_outcome(), seed=3)
        assert attempt.id == 3

    def test_snapshot_mirrors_scores(self, store):
        store.record_check("ada", KEY, "x", report(passed=True))
        snap = json.loads(store.snapshot_path.read_text())
        assert snap["ada"] == store.score("ada").as_dict()

    def test_snapshot_is_never_read_back(self, course, tmp_path):
        log = tmp_path / "log.jsonl"
        first = Store(course, log)
        first.record_check("ada", KEY, "x", report(passed=True))
        first.snapshot_path.write_text("{ corrupted")
        reopened = Store(course, log)
        assert reopened.completed("ada", KEY)
        reopened.record_run("ada", KEY, "y", ok_outcome(), seed=1)
        assert json.loads(reopened.snapshot_path.read_text())

    def test_concurrent_writers_lose_nothing(self, store):
        def work(student):
            for i in range(25):
                store.record_run(student, KEY, f"v{i}", ok_outcome(), seed=i)
        threads = [threading.Thread(target=work, args=(f"s{t}",))
                   for t in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        lines = store.log_path.read_text().splitlines()
        assert len(lines) == 200
        ids = [json.loads(line)["id"] for line in lines]
        assert sorted(ids) == list(range(1, 201))


class TestScoreModel:
    def complete_tasks(self, store, student, n):
        keys = [task_key(lab.id, task.id)
                for lab, task in store.course.all_tasks()][:n]
        for key in keys:
            store.record_check(student, key, "ok", report(passed=True))

    def test_fractions_and_weighting(self, store):
        self.complete_tasks(store, "ada", 3)
        store.record_quiz("ada", "quiz-threshold", True)
        store.record_quiz("ada", "quiz-noise-shape", True)
        store.set_exam_fraction("ada", 0.5)
        record = store.score("ada")
        assert record.lab_fraction == pytest.approx(3 / 12)
        assert record.quiz_fraction == pytest.approx(2 / 3)
        assert record.exam_fraction == 0.5
        want = 0.2 * (2 / 3) + 0.3 * (3 / 12) + 0.5 * 0.5
        assert record.cumulative == pytest.approx(want)
        assert not record.eligible

    def test_exactly_at_threshold_is_not_eligible(self, store):
        # quiz 1.0, lab 1.0, exam 0.2 lands exactly on the 0.6 threshold
        self.complete_tasks(store, "ada", 12)
        for quiz in store.course.quizzes:
            store.record_quiz("ada", quiz, True)
        store.set_exam_fraction("ada", 0.2)
        record = store.score("ada")
        assert record.cumulative == pytest.approx(0.6)
        assert not record.eligible

    def test_strictly_above_threshold_is_eligible(self, store):
        self.complete_tasks(store, "ada", 12)
        for quiz in store.course.quizzes:
            store.record_quiz("ada", quiz, True)
        store.set_exam_fraction("ada", 0.21)
        assert store.score("ada").eligible

    def test_unknown_student_scores_zero(self, store):
        record = store.score("ghost")
        assert record.cumulative == 0.0
        assert not record.eligible
        assert not any(record.completed.values())

    def test_perfect_student(self, store):
        self.complete_tasks(store, "ada", 12)
        for quiz in store.course.quizzes:
            store.record_quiz("ada", quiz, True)
        store.set_exam_fraction("ada", 1.0)
        record = store.score("ada")
        assert record.cumulative == pytest.approx(1.0)
        assert record.eligible
