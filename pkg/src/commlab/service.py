"""HTTP API over the course, grader and store.

All endpoints live under /api/v1. Run executes a submission with a
fresh seed and returns everything the client needs to render output;
Check grades it and updates the score record immediately. Neither
response ever carries reference scripts or other check internals.

Students are identified by an opaque id in the request; a student
exists once their first attempt or quiz answer is recorded.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

import yaml
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .errors import AuthoringError
from .grader import GradeReport, grade
from .interpreter import run_source
from .manifest import (CourseConfig, TaskManifest, QuizItem, list_course,
                       load_course, shipped_course_dir)
from .profiles import get_profile
from .store import Store, task_key
from .values import summarize

MAX_SOURCE_BYTES = 64 * 1024


class RunRequest(BaseModel):
    student: str
    task: str                       # "<lab>/<task>"
    source: str
    seed: Optional[int] = None      # testing hook; fresh when omitted


class CheckRequest(BaseModel):
    student: str
    task: str
    source: str
    seed: Optional[int] = None
    reference_seed: Optional[int] = None


class QuizRequest(BaseModel):
    student: str
    answer: Any = None


def _fresh_seed() -> int:
    return int.from_bytes(os.urandom(4), "big")


def _figure_payload(figures) -> list[dict]:
    return [
        {
            "number": fig.number,
            "title": fig.title,
            "xlabel": fig.xlabel,
            "ylabel": fig.ylabel,
            "curves": [
                {"x": list(c.x), "y": list(c.y), "style": c.style}
                for c in fig.curves
            ],
        }
        for fig in figures
    ]


def _workspace_summary(workspace) -> dict[str, str]:
    return {name: summarize(value) for name, value in workspace.items()
            if not name.startswith("_")}


def grade_quiz(item: QuizItem, answer: Any) -> tuple[bool, Optional[str]]:
    """Score one quiz answer; malformed input is incorrect, not an error."""
    if item.kind == "numeric":
        if isinstance(answer, bool) or answer is None:
            return False, "answer must be a number"
        try:
            value = float(answer)
        except (TypeError, ValueError):
            return False, "answer must be a number"
        return abs(value - float(item.answer)) <= item.tolerance, None
    if item.kind == "text":
        if not isinstance(answer, str):
            return False, "answer must be text"
        return (answer.strip().casefold()
                == str(item.answer).strip().casefold()), None
    if not isinstance(answer, str) or answer not in item.choices:
        return False, "pick one of the listed choices"
    return answer == item.answer, None


def create_app(course: CourseConfig, store: Store) -> FastAPI:
    app = FastAPI(title="commlab", docs_url=None, redoc_url=None)

    def resolve_task(composite: str) -> tuple[str, TaskManifest]:
        lab_id, sep, task_id = composite.partition("/")
        task = course.task(lab_id, task_id) if sep else None
        if task is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown task {composite!r}")
        return composite, task

    def guard_size(source: str) -> None:
        if len(source.encode("utf-8", errors="replace")) > MAX_SOURCE_BYTES:
            raise HTTPException(status_code=413, detail="source exceeds 64 KiB")

    @app.get("/api/v1/course")
    def get_course() -> dict:
        return list_course(course)

    @app.get("/api/v1/labs/{lab_id}/tasks/{task_id}")
    def get_task(lab_id: str, task_id: str,
                 student: Optional[str] = None) -> dict:
        task = course.task(lab_id, task_id)
        if task is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown task {lab_id!r}/{task_id!r}")
        key = task_key(lab_id, task_id)
        source = task.starter
        completed = False
        attempts = 0
        if student:
            saved = store.last_source(student, key)
            if saved is not None:
                source = saved
            completed = store.completed(student, key)
            attempts = store.attempt_count(student, key)
        return {
            "lab": lab_id,
            "task": task_id,
            "title": task.title,
            "kind": task.kind,
            "instructions": task.instructions,
            "source": source,
            "starter": task.starter,
            "completed": completed,
            "attempts": attempts,
            "quizzes": [
                {"id": q.id, "prompt": q.prompt, "kind": q.kind,
                 "choices": list(q.choices)}
                for q in (course.quizzes[qid] for qid in task.quiz_ids)
            ],
        }

    @app.post("/api/v1/run")
    def post_run(req: RunRequest) -> dict:
        guard_size(req.source)
        key, task = resolve_task(req.task)
        seed = req.seed if req.seed is not None else _fresh_seed()
        outcome = run_source(req.source, get_profile(task.profile),
                             replace(task.limits, seed=seed))
        store.record_run(req.student, key, req.source, outcome, seed)
        error = None
        if outcome.error is not None:
            error = {"message": outcome.error, "line": outcome.error_line,
                     "col": outcome.error_col}
        return {
            "status": outcome.status,
            "printed": list(outcome.printed),
            "figures": _figure_payload(outcome.figures),
            "workspace": _workspace_summary(outcome.workspace),
            "error": error,
            "seed": seed,
        }

    @app.post("/api/v1/check")
    def post_check(req: CheckRequest) -> dict:
        guard_size(req.source)
        key, task = resolve_task(req.task)
        try:
            report: GradeReport = grade(task, req.source,
                                        student_seed=req.seed,
                                        reference_seed=req.reference_seed)
        except AuthoringError as e:
            raise HTTPException(status_code=500, detail=str(e)) from None
        store.record_check(req.student, key, req.source, report)
        return {
            "passed": report.passed,
            "status": report.student_status,
            "checks": [
                {"id": r.spec_id, "verdict": r.verdict, "message": r.message}
                for r in report.results
            ],
            "completed": store.completed(req.student, key),
            "attempts": store.attempt_count(req.student, key),
        }

    @app.post("/api/v1/quiz/{quiz_id}")
    def post_quiz(quiz_id: str, req: QuizRequest) -> dict:
        item = course.quizzes.get(quiz_id)
        if item is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown quiz {quiz_id!r}")
        correct, note = grade_quiz(item, req.answer)
        store.record_quiz(req.student, quiz_id, correct)
        body: dict = {"correct": correct}
        if note:
            body["note"] = note
        return body

    @app.get("/api/v1/progress/{student}")
    def get_progress(student: str) -> dict:
        if not store.known_student(student):
            raise HTTPException(status_code=404,
                                detail=f"unknown student {student!r}")
        return store.score(student).as_dict()

    return app


@dataclass
class ServiceConfig:
    course_dir: Path
    log_path: Path
    host: str = "127.0.0.1"
    port: int = 8000
    snapshot_path: Optional[Path] = None


def load_service_config(path: str | Path) -> ServiceConfig:
    """Read the service config file and apply environment overrides."""
    raw = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a mapping")
    course_dir = raw.get("course", str(shipped_course_dir()))
    log_path = raw.get("log", "attempts.jsonl")
    config = ServiceConfig(
        course_dir=Path(os.environ.get("COMMLAB_COURSE", course_dir)),
        log_path=Path(log_path),
        host=str(raw.get("host", "127.0.0.1")),
        port=int(os.environ.get("COMMLAB_PORT", raw.get("port", 8000))),
        snapshot_path=Path(raw["snapshot"]) if "snapshot" in raw else None,
    )
    return config


def build_app(config: ServiceConfig) -> FastAPI:
    course = load_course(config.course_dir)
    store = Store(course, config.log_path, config.snapshot_path)
    return create_app(course, store)
