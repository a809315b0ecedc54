"""Attempt log and score keeping.

One newline-delimited JSON log is the source of truth: every run,
check, quiz answer and exam-fraction change appends one line, and
replaying the log from the top reproduces every score exactly. A small
derived snapshot file is written alongside for quick inspection; it is
never read back for state.

All mutation goes through a single lock, so concurrent service handlers
serialize on the log while reads work from the same in-memory state.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .grader import GradeReport
from .interpreter import ExecOutcome
from .manifest import CourseConfig


def task_key(lab_id: str, task_id: str) -> str:
    return f"{lab_id}/{task_id}"


@dataclass
class Attempt:
    id: int
    student: str
    task: str
    kind: str                   # run | check
    source: str
    ts: str
    status: str
    verdict: Optional[str]      # pass | fail, checks only
    message_digest: str
    student_seed: Optional[int]
    reference_seed: Optional[int]


@dataclass
class ScoreRecord:
    student: str
    completed: dict[str, bool]
    quizzes: dict[str, bool]
    quiz_fraction: float
    lab_fraction: float
    exam_fraction: float
    cumulative: float
    eligible: bool

    def as_dict(self) -> dict:
        return {
            "student": self.student,
            "completed": dict(self.completed),
            "quizzes": dict(self.quizzes),
            "quiz_fraction": self.quiz_fraction,
            "lab_fraction": self.lab_fraction,
            "exam_fraction": self.exam_fraction,
            "cumulative": self.cumulative,
            "eligible": self.eligible,
        }


@dataclass
class _StudentState:
    completed: set[str] = field(default_factory=set)
    quiz_correct: dict[str, bool] = field(default_factory=dict)
    exam_fraction: float = 0.0
    last_source: dict[str, str] = field(default_factory=dict)
    attempts: dict[str, int] = field(default_factory=dict)


def _digest(messages: list[str]) -> str:
    if not messages:
        return ""
    joined = "\n".join(messages)
    return hashlib.sha256(joined.encode()).hexdigest()[:16]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class Store:
    """Event log plus the state folded from it."""

    def __init__(self, course: CourseConfig, log_path: str | Path,
                 snapshot_path: str | Path | None = None):
        self.course = course
        self.log_path = Path(log_path)
        self.snapshot_path = (Path(snapshot_path) if snapshot_path
                              else self.log_path.with_suffix(".snapshot.json"))
        self._lock = threading.Lock()
        self._students: dict[str, _StudentState] = {}
        self._next_id = 1
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        if self.log_path.exists():
            with self.log_path.open() as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._fold(json.loads(line))

    # --- event folding (shared by live appends and replay) ---

    def _fold(self, event: dict) -> None:
        kind = event.get("type")
        if kind == "attempt":
            self._next_id = max(self._next_id, int(event["id"]) + 1)
            state = self._students.setdefault(event["student"], _StudentState())
            key = event["task"]
            state.last_source[key] = event["source"]
            state.attempts[key] = state.attempts.get(key, 0) + 1
            if event["kind"] == "check" and event.get("verdict") == "pass":
                state.completed.add(key)
        elif kind == "quiz":
            state = self._students.setdefault(event["student"], _StudentState())
            already = state.quiz_correct.get(event["quiz"], False)
            # correctness is sticky, like task completion
            state.quiz_correct[event["quiz"]] = already or bool(event["correct"])
        elif kind == "exam":
            state = self._students.setdefault(event["student"], _StudentState())
            state.exam_fraction = float(event["fraction"])

    def _append(self, event: dict) -> None:
        with self.log_path.open("a") as fh:
            fh.write(json.dumps(event, separators=(",", ":")) + "\n")
        self._fold(event)
        self._write_snapshot()

    def _write_snapshot(self) -> None:
        snap = {student: self._score(student).as_dict()
                for student in sorted(self._students)}
        self.snapshot_path.write_text(json.dumps(snap, indent=2) + "\n")

    # --- recording ---

    def record_run(self, student: str, task: str, source: str,
                   outcome: ExecOutcome, seed: int) -> Attempt:
        with self._lock:
            attempt = Attempt(
                id=self._next_id, student=student, task=task, kind="run",
                source=source, ts=_now(), status=outcome.status, verdict=None,
                message_digest=_digest([outcome.error] if outcome.error else []),
                student_seed=seed, reference_seed=None)
            self._append(self._attempt_event(attempt))
            return attempt

    def record_check(self, student: str, task: str, source: str,
                     report: GradeReport) -> Attempt:
        with self._lock:
            failing = [r.message for r in report.results
                       if r.verdict == "fail" and r.message]
            attempt = Attempt(
                id=self._next_id, student=student, task=task, kind="check",
                source=source, ts=_now(), status=report.student_status,
                verdict="pass" if report.passed else "fail",
                message_digest=_digest(failing),
                student_seed=report.student_seed,
                reference_seed=report.reference_seed)
            self._append(self._attempt_event(attempt))
            return attempt

    def record_quiz(self, student: str, quiz_id: str, correct: bool) -> None:
        with self._lock:
            self._append({"type": "quiz", "student": student,
                          "quiz": quiz_id, "correct": correct, "ts": _now()})

    def set_exam_fraction(self, student: str, fraction: float) -> None:
        if not 0.0 <= fraction <= 1.0:
            raise ValueError("exam fraction must be within [0, 1]")
        with self._lock:
            self._append({"type": "exam", "student": student,
                          "fraction": fraction, "ts": _now()})

    @staticmethod
    def _attempt_event(a: Attempt) -> dict:
        return {
            "type": "attempt", "id": a.id, "student": a.student,
            "task": a.task, "kind": a.kind, "source": a.source, "ts": a.ts,
            "status": a.status, "verdict": a.verdict,
            "message_digest": a.message_digest,
            "student_seed": a.student_seed,
            "reference_seed": a.reference_seed,
        }

    # --- queries ---

    def known_student(self, student: str) -> bool:
        with self._lock:
            return student in self._students

    def last_source(self, student: str, task: str) -> Optional[str]:
        with self._lock:
            state = self._students.get(student)
            return state.last_source.get(task) if state else None

    def attempt_count(self, student: str, task: str) -> int:
        with self._lock:
            state = self._students.get(student)
            return state.attempts.get(task, 0) if state else 0

    def completed(self, student: str, task: str) -> bool:
        with self._lock:
            state = self._students.get(student)
            return bool(state and task in state.completed)

    def score(self, student: str) -> ScoreRecord:
        with self._lock:
            return self._score(student)

    def _score(self, student: str) -> ScoreRecord:
        state = self._students.get(student, _StudentState())
        tasks = [task_key(lab.id, task.id)
                 for lab, task in self.course.all_tasks()]
        completed = {key: key in state.completed for key in tasks}
        quizzes = {qid: state.quiz_correct.get(qid, False)
                   for qid in self.course.quizzes}
        lab_fraction = (sum(completed.values()) / len(tasks)) if tasks else 0.0
        quiz_fraction = (sum(quizzes.values()) / len(quizzes)) if quizzes else 0.0
        weights = self.course.weights
        cumulative = (weights["quiz"] * quiz_fraction
                      + weights["lab"] * lab_fraction
                      + weights["exam"] * state.exam_fraction)
        return ScoreRecord(
            student=student, completed=completed, quizzes=quizzes,
            quiz_fraction=quiz_fraction, lab_fraction=lab_fraction,
            exam_fraction=state.exam_fraction, cumulative=cumulative,
            eligible=cumulative > self.course.pass_threshold)
