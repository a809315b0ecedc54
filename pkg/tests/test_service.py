"""HTTP API: endpoint behavior, persistence, and reference-script privacy."""

import json

import pytest
from fastapi.testclient import TestClient

from commlab.manifest import load_course, shipped_course_dir
from commlab.service import MAX_SOURCE_BYTES, create_app, grade_quiz
from commlab.store import Store


@pytest.fixture(scope="module")
def course():
    return load_course(shipped_course_dir())


@pytest.fixture
def logged_client(course, tmp_path):
    log = tmp_path / "attempts.jsonl"
    store = Store(course, log)
    return TestClient(create_app(course, store)), log


@pytest.fixture
def client(logged_client):
    return logged_client[0]


def run_req(source, student="ada", task="lab1/task1", **extra):
    return {"student": student, "task": task, "source": source, **extra}


class TestCourseEndpoint:
    def test_course_shape(self, client):
        body = client.get("/api/v1/course").json()
        assert body["title"] == "Communication Systems Lab Course"
        assert [lab["id"] for lab in body["labs"]] == \
            [f"lab{i}" for i in range(1, 9)]
        assert body["pass_threshold"] == 0.6
        assert {q["id"] for q in body["quizzes"]} == {
            "quiz-threshold", "quiz-noise-shape", "quiz-ber-trend"}

    def test_course_keeps_answers_private(self, client):
        text = client.get("/api/v1/course").text
        assert "answer" not in text
        assert "Gaussian" not in text


class TestTaskEndpoint:
    def test_fresh_task_serves_the_starter(self, client):
        body = client.get("/api/v1/labs/lab1/tasks/task2").json()
        assert body["kind"] == "implementation"
        assert body["source"] == body["starter"]
        assert not body["completed"]
        assert body["attempts"] == 0
        assert "tx_bs" in body["starter"]

    def test_quizzes_are_embedded(self, client):
        body = client.get("/api/v1/labs/lab1/tasks/task1").json()
        assert [q["id"] for q in body["quizzes"]] == ["quiz-threshold"]
        assert "answer" not in json.dumps(body)

    def test_unknown_task_404(self, client):
        assert client.get("/api/v1/labs/lab1/tasks/task99").status_code == 404
        assert client.get("/api/v1/labs/lab99/tasks/task1").status_code == 404

    def test_saved_source_returned_for_known_student(self, client):
        client.post("/api/v1/run", json=run_req("x = 1;", task="lab1/task2"))
        body = client.get("/api/v1/labs/lab1/tasks/task2",
                          params={"student": "ada"}).json()
        assert body["source"] == "x = 1;"
        assert body["starter"] != "x = 1;"
        assert body["attempts"] == 1


class TestRunEndpoint:
    def test_walkthrough_starter_runs_clean(self, client, course):
        starter = course.task("lab1", "task1").starter
        body = client.post("/api/v1/run",
                           json=run_req(starter, task="lab1/task1")).json()
        assert body["status"] == "ok"
        assert body["error"] is None
        assert len(body["figures"]) == 4
        assert body["printed"] == ["Finished!", "Finished!"]
        assert "tx_bs" in body["workspace"]

    def test_seed_echoed_and_deterministic(self, client):
        src = "v = noise(5, 1);"  # builtin draws from the run seed
        a = client.post("/api/v1/run",
                        json=run_req(src, seed=42)).json()
        b = client.post("/api/v1/run",
                        json=run_req(src, seed=42)).json()
        assert a["seed"] == 42
        assert a["workspace"] == b["workspace"]

    def test_fresh_seeds_when_omitted(self, client):
        seeds = {client.post("/api/v1/run",
                             json=run_req("x = 1;")).json()["seed"]
                 for _ in range(3)}
        assert all(isinstance(s, int) for s in seeds)
        assert len(seeds) > 1

    def test_script_errors_carry_position(self, client):
        body = client.post("/api/v1/run",
                           json=run_req("x = 1;\ny = [1] + [1 2];")).json()
        assert body["status"] == "script-error"
        assert body["error"]["line"] == 2
        assert "operands" in body["error"]["message"] or \
            "length" in body["error"]["message"]

    def test_simulation_mirrors_stay_hidden(self, client):
        starter = load_course(shipped_course_dir()).task("lab8", "task1").starter
        body = client.post("/api/v1/run",
                           json=run_req(starter, task="lab8/task1")).json()
        assert body["status"] == "ok"
        assert not any(k.startswith("_") for k in body["workspace"])

    def test_oversize_source_rejected(self, client):
        huge = "% " + "a" * MAX_SOURCE_BYTES + "\n"
        resp = client.post("/api/v1/run", json=run_req(huge))
        assert resp.status_code == 413

    def test_unknown_task_404(self, client):
        assert client.post("/api/v1/run",
                           json=run_req("x = 1;", task="lab9/task9")
                           ).status_code == 404
        assert client.post("/api/v1/run",
                           json=run_req("x = 1;", task="noslash")
                           ).status_code == 404

    def test_missing_fields_rejected(self, client):
        resp = client.post("/api/v1/run", json={"student": "ada"})
        assert resp.status_code == 422


class TestCheckEndpoint:
    def test_starter_fails_then_fix_passes(self, client, course):
        task = course.task("lab1", "task2")
        first = client.post("/api/v1/check", json=run_req(
            task.starter, task="lab1/task2")).json()
        assert not first["passed"]
        assert not first["completed"]
        failing = [c for c in first["checks"] if c["verdict"] == "fail"]
        assert failing

        second = client.post("/api/v1/check", json=run_req(
            task.reference, task="lab1/task2")).json()
        assert second["passed"]
        assert second["completed"]
        assert second["attempts"] == 2

    def test_completion_is_sticky_through_the_api(self, client, course):
        task = course.task("lab1", "task2")
        client.post("/api/v1/check",
                    json=run_req(task.reference, task="lab1/task2"))
        third = client.post("/api/v1/check",
                            json=run_req("x = 1;", task="lab1/task2")).json()
        assert not third["passed"]
        assert third["completed"]

    def test_check_ids_exposed_in_order(self, client, course):
        task = course.task("lab1", "task2")
        body = client.post("/api/v1/check", json=run_req(
            task.reference, task="lab1/task2")).json()
        ids = [c["id"] for c in body["checks"]]
        assert ids[:2] == ["banned", "execution"]
        assert "equals:tx_bs" in ids

    def test_seed_hooks_make_checks_reproducible(self, client, course):
        task = course.task("lab5", "task1")
        payload = run_req(task.starter, task="lab5/task1",
                          seed=11, reference_seed=12)
        a = client.post("/api/v1/check", json=payload).json()
        b = client.post("/api/v1/check", json=payload).json()
        assert a["checks"] == b["checks"]

    def test_oversize_source_rejected(self, client):
        huge = "% " + "a" * MAX_SOURCE_BYTES + "\n"
        resp = client.post("/api/v1/check", json=run_req(huge))
        assert resp.status_code == 413


class TestNoReferenceLeak:
    def reference_marker(self, task):
        """A reference-only line, if the task has one."""
        starter_lines = set(task.starter.splitlines())
        for line in task.reference.splitlines():
            if line.strip() and line not in starter_lines:
                return line.strip()
        return None

    def test_task_and_grading_responses_never_show_the_reference(
            self, client, course):
        task = course.task("lab1", "task2")
        marker = self.reference_marker(task)
        assert marker  # the fix line exists only in the reference
        responses = [
            client.get("/api/v1/labs/lab1/tasks/task2").text,
            client.post("/api/v1/run",
                        json=run_req(task.starter, task="lab1/task2")).text,
            client.post("/api/v1/check",
                        json=run_req(task.starter, task="lab1/task2")).text,
        ]
        for text in responses:
            assert marker not in text


class TestQuizzes:
    def test_numeric_with_tolerance(self, client):
        resp = client.post("/api/v1/quiz/quiz-threshold",
                           json={"student": "ada", "answer": 0.495}).json()
        assert resp == {"correct": True}

    def test_numeric_accepts_numeric_strings(self, client):
        resp = client.post("/api/v1/quiz/quiz-threshold",
                           json={"student": "ada", "answer": "0.5"}).json()
        assert resp["correct"]

    def test_numeric_rejects_garbage_with_note(self, client):
        resp = client.post("/api/v1/quiz/quiz-threshold",
                           json={"student": "ada", "answer": "much"}).json()
        assert resp == {"correct": False, "note": "answer must be a number"}

    def test_text_matching_is_forgiving(self, client):
        resp = client.post("/api/v1/quiz/quiz-noise-shape",
                           json={"student": "ada",
                                 "answer": "  gaussian "}).json()
        assert resp["correct"]

    def test_choice_must_be_listed(self, client):
        resp = client.post("/api/v1/quiz/quiz-ber-trend",
                           json={"student": "ada", "answer": "explodes"}).json()
        assert not resp["correct"]
        assert resp["note"] == "pick one of the listed choices"

    def test_choice_correct(self, client):
        resp = client.post("/api/v1/quiz/quiz-ber-trend",
                           json={"student": "ada", "answer": "increases"}).json()
        assert resp == {"correct": True}

    def test_unknown_quiz_404(self, client):
        resp = client.post("/api/v1/quiz/quiz-nope",
                           json={"student": "ada", "answer": 1})
        assert resp.status_code == 404


class TestGradeQuizEdgeCases:
    def test_boolean_is_not_a_number(self, course):
        item = course.quizzes["quiz-threshold"]
        assert grade_quiz(item, True) == (False, "answer must be a number")
        assert grade_quiz(item, None) == (False, "answer must be a number")

    def test_text_answer_must_be_text(self, course):
        item = course.quizzes["quiz-noise-shape"]
        assert grade_quiz(item, 5) == (False, "answer must be text")

    def test_wrong_choice_is_wrong_without_note(self, course):
        item = course.quizzes["quiz-ber-trend"]
        assert grade_quiz(item, "decreases") == (False, None)


class TestProgress:
    def test_unknown_student_404(self, client):
        assert client.get("/api/v1/progress/nobody").status_code == 404

    def test_progress_accumulates(self, client, course):
        task = course.task("lab1", "task2")
        client.post("/api/v1/check",
                    json=run_req(task.reference, task="lab1/task2"))
        client.post("/api/v1/quiz/quiz-threshold",
                    json={"student": "ada", "answer": 0.5})
        body = client.get("/api/v1/progress/ada").json()
        assert body["completed"]["lab1/task2"]
        assert body["lab_fraction"] == pytest.approx(1 / 12)
        assert body["quiz_fraction"] == pytest.approx(1 / 3)
        assert body["quizzes"]["quiz-threshold"]
        assert not body["eligible"]

    def test_students_are_isolated(self, client, course):
        task = course.task("lab1", "task2")
        client.post("/api/v1/check",
                    json=run_req(task.reference, task="lab1/task2",
                                 student="ada"))
        client.post("/api/v1/run",
                    json=run_req("x = 1;", task="lab1/task2", student="bob"))
        ada = client.get("/api/v1/progress/ada").json()
        bob = client.get("/api/v1/progress/bob").json()
        assert ada["completed"]["lab1/task2"]
        assert not bob["completed"]["lab1/task2"]

    def test_state_survives_a_service_restart(self, course, tmp_path):
        log = tmp_path / "attempts.jsonl"
        first = TestClient(create_app(course, Store(course, log)))
        task = course.task("lab1", "task2")
        first.post("/api/v1/check",
                   json=run_req(task.reference, task="lab1/task2"))
        reborn = TestClient(create_app(course, Store(course, log)))
        body = reborn.get("/api/v1/progress/ada").json()
        assert body["completed"]["lab1/task2"]
        saved = reborn.get("/api/v1/labs/lab1/tasks/task2",
                           params={"student": "ada"}).json()
        assert saved["source"] == task.reference
