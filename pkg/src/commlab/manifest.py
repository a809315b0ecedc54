"""Task and course manifests: YAML schema, loading and validation.

One file per task. The loader resolves every script inline and composes
the effective ordered check list: banned-function scan first, protected
inputs second, then the authored checks with an existence check inserted
ahead of any value check whose variable has none yet.

Validation executes the content rules: the starter must run cleanly, the
reference must pass its own checks, and (outside overview tasks) the
starter must fail at least one check, so shipped content cannot drift
into an ungradeable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .errors import AuthoringError
from .grader import (BannedFunctions, CheckSpec, CommonMistake, FigureMatch,
                     ProtectedInputs, ProtocolTraceCheck, VarClose,
                     VarCloseMSE, VarEquals, VarExists, grade)
from .interpreter import ExecLimits, Interpreter
from .parser import parse
from .profiles import get_profile
from .values import Value, Vec

KINDS = ("overview", "implementation", "evaluation")

# deterministic seeds for authoring-time validation runs
_VALIDATE_STUDENT_SEED = 1200
_VALIDATE_REFERENCE_SEED = 3407


@dataclass
class TaskManifest:
    id: str
    title: str
    kind: str
    instructions: str
    starter: str
    reference: str
    profile: str
    banned: list[str] = field(default_factory=list)
    protected: dict[str, Value] = field(default_factory=dict)
    checks: list[CheckSpec] = field(default_factory=list)
    common_mistakes: list[CommonMistake] = field(default_factory=list)
    quiz_ids: list[str] = field(default_factory=list)
    limits: ExecLimits = field(default_factory=ExecLimits)


@dataclass
class QuizItem:
    id: str
    prompt: str
    kind: str               # numeric | text | choice
    answer: object
    tolerance: float = 0.0
    choices: list[str] = field(default_factory=list)


@dataclass
class Lab:
    id: str
    title: str
    tasks: list[TaskManifest]


@dataclass
class CourseConfig:
    title: str
    labs: list[Lab]
    weights: dict[str, float]
    pass_threshold: float
    quizzes: dict[str, QuizItem]

    def task(self, lab_id: str, task_id: str) -> TaskManifest | None:
        for lab in self.labs:
            if lab.id == lab_id:
                for task in lab.tasks:
                    if task.id == task_id:
                        return task
        return None

    def all_tasks(self) -> list[tuple[Lab, TaskManifest]]:
        return [(lab, task) for lab in self.labs for task in lab.tasks]


def _fail(path, where: str, problem: str) -> AuthoringError:
    return AuthoringError(f"{path}: {where}: {problem}")


def _need(raw: dict, key: str, path, kind=str):
    if key not in raw:
        raise _fail(path, key, "required field is missing")
    value = raw[key]
    if not isinstance(value, kind):
        raise _fail(path, key, f"expected {kind.__name__}")
    return value


def _value_from_yaml(raw, path, where: str) -> Value:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        return raw
    if isinstance(raw, list):
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                   for x in raw):
            raise _fail(path, where, "vector entries must be numbers")
        return Vec(float(x) for x in raw)
    raise _fail(path, where, f"cannot express {type(raw).__name__} as a value")


def _parse_check(raw: dict, path, index: int) -> CheckSpec:
    where = f"checks[{index}]"
    if not isinstance(raw, dict) or "type" not in raw:
        raise _fail(path, where, "each check needs a 'type'")
    ctype = raw["type"]
    message = raw.get("message")
    if ctype == "exists":
        return VarExists(_need(raw, "var", path), message=message)
    if ctype == "equals":
        return VarEquals(_need(raw, "var", path), message=message)
    if ctype == "close":
        return VarClose(_need(raw, "var", path),
                        eps_multiple=float(raw.get("eps_multiple", 100)),
                        message=message)
    if ctype == "mse":
        if "tolerance" not in raw:
            raise _fail(path, where, "mse checks need a 'tolerance'")
        return VarCloseMSE(_need(raw, "var", path),
                           mse_tolerance=float(raw["tolerance"]),
                           message=message)
    if ctype == "figure":
        return FigureMatch(figure=int(raw.get("figure", 1)),
                           eps_multiple=float(raw.get("eps_multiple", 100)),
                           structure_only=bool(raw.get("structure_only", False)),
                           message=message)
    if ctype == "protocol":
        return ProtocolTraceCheck(message=message)
    raise _fail(path, where, f"unknown check type {ctype!r}")


def _effective_checks(banned: list[str], protected: dict[str, Value],
                      authored: list[CheckSpec]) -> list[CheckSpec]:
    checks: list[CheckSpec] = [BannedFunctions(banned), ProtectedInputs(protected)]
    covered = {spec.name for spec in authored if isinstance(spec, VarExists)}
    for spec in authored:
        if isinstance(spec, (VarEquals, VarClose, VarCloseMSE)) \
                and spec.name not in covered:
            checks.append(VarExists(spec.name))
            covered.add(spec.name)
        checks.append(spec)
    return checks


def _parse_limits(raw, path) -> ExecLimits:
    if raw is None:
        return ExecLimits()
    if not isinstance(raw, dict):
        raise _fail(path, "limits", "expected a mapping")
    known = {"max_steps", "max_vector", "max_figures"}
    unknown = set(raw) - known
    if unknown:
        raise _fail(path, "limits", f"unknown fields {sorted(unknown)}")
    return ExecLimits(max_steps=int(raw.get("max_steps", ExecLimits.max_steps)),
                      max_vector=int(raw.get("max_vector", ExecLimits.max_vector)),
                      max_figures=int(raw.get("max_figures", ExecLimits.max_figures)))


def load_task(path: str | Path) -> TaskManifest:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise AuthoringError(f"{path}: not valid YAML: {e}") from None
    if not isinstance(raw, dict):
        raise _fail(path, "top level", "expected a mapping")
    kind = _need(raw, "kind", path)
    if kind not in KINDS:
        raise _fail(path, "kind", f"must be one of {', '.join(KINDS)}")
    starter = _need(raw, "starter", path)
    if kind == "overview":
        reference = raw.get("reference", starter)
    else:
        reference = _need(raw, "reference", path)
    banned = raw.get("banned", [])
    if not isinstance(banned, list) or not all(isinstance(b, str) for b in banned):
        raise _fail(path, "banned", "expected a list of names")
    protected_raw = raw.get("protected", {})
    if not isinstance(protected_raw, dict):
        raise _fail(path, "protected", "expected a mapping")
    protected = {name: _value_from_yaml(v, path, f"protected.{name}")
                 for name, v in protected_raw.items()}
    authored = [_parse_check(c, path, i)
                for i, c in enumerate(raw.get("checks", []))]
    mistakes = []
    for i, m in enumerate(raw.get("common_mistakes", [])):
        where = f"common_mistakes[{i}]"
        if not isinstance(m, dict):
            raise _fail(path, where, "expected a mapping")
        for key in ("id", "script", "message"):
            if key not in m:
                raise _fail(path, where, f"'{key}' is required")
        mistakes.append(CommonMistake(m["id"], m["script"], m["message"]))
    quiz_ids = raw.get("quiz", [])
    if not isinstance(quiz_ids, list):
        raise _fail(path, "quiz", "expected a list of quiz ids")
    profile = _need(raw, "profile", path)
    try:
        get_profile(profile)
    except KeyError:
        raise _fail(path, "profile", f"unknown builtin profile {profile!r}") from None
    return TaskManifest(
        id=_need(raw, "id", path),
        title=_need(raw, "title", path),
        kind=kind,
        instructions=_need(raw, "instructions", path),
        starter=starter,
        reference=reference,
        profile=profile,
        banned=banned,
        protected=protected,
        checks=_effective_checks(banned, protected, authored),
        common_mistakes=mistakes,
        quiz_ids=[str(q) for q in quiz_ids],
        limits=_parse_limits(raw.get("limits"), path),
    )


def load_course(course_dir: str | Path) -> CourseConfig:
    course_dir = Path(course_dir)
    path = course_dir / "course.yaml"
    if not path.exists():
        raise AuthoringError(f"no course found at {course_dir}")
    raw = yaml.safe_load(path.read_text())
    if not isinstance(raw, dict):
        raise _fail(path, "top level", "expected a mapping")
    weights_raw = _need(raw, "weights", path, dict)
    weights = {k: float(v) for k, v in weights_raw.items()}
    if set(weights) != {"quiz", "lab", "exam"}:
        raise _fail(path, "weights", "must name quiz, lab and exam")
    if abs(sum(weights.values()) - 1.0) > 1e-9:
        raise _fail(path, "weights", "must sum to 1")
    threshold = float(_need(raw, "pass_threshold", path, (int, float)))
    if not 0.0 < threshold < 1.0:
        raise _fail(path, "pass_threshold", "must be between 0 and 1")
    labs = []
    for i, lab_raw in enumerate(raw.get("labs", [])):
        where = f"labs[{i}]"
        if not isinstance(lab_raw, dict):
            raise _fail(path, where, "expected a mapping")
        tasks = [load_task(course_dir / rel) for rel in lab_raw.get("tasks", [])]
        labs.append(Lab(id=_need(lab_raw, "id", path),
                        title=_need(lab_raw, "title", path), tasks=tasks))
    quizzes: dict[str, QuizItem] = {}
    for i, q in enumerate(raw.get("quizzes", [])):
        where = f"quizzes[{i}]"
        if not isinstance(q, dict):
            raise _fail(path, where, "expected a mapping")
        kind = _need(q, "kind", path)
        if kind not in ("numeric", "text", "choice"):
            raise _fail(path, where, "kind must be numeric, text or choice")
        if "answer" not in q:
            raise _fail(path, where, "'answer' is required")
        tolerance = float(q.get("tolerance", 0.0))
        if tolerance < 0:
            raise _fail(path, where, "tolerance must be >= 0")
        item = QuizItem(id=_need(q, "id", path), prompt=_need(q, "prompt", path),
                        kind=kind, answer=q["answer"], tolerance=tolerance,
                        choices=[str(c) for c in q.get("choices", [])])
        if item.id in quizzes:
            raise _fail(path, where, f"duplicate quiz id {item.id!r}")
        quizzes[item.id] = item
    for lab in labs:
        seen: set[str] = set()
        kinds = [t.kind for t in lab.tasks]
        first_non_overview = next(
            (i for i, k in enumerate(kinds) if k != "overview"), len(kinds))
        if any(k == "overview" for k in kinds[first_non_overview:]):
            raise _fail(path, f"lab {lab.id}",
                        "overview tasks must come before the others")
        first_eval = next(
            (i for i, k in enumerate(kinds) if k == "evaluation"), len(kinds))
        if any(k != "evaluation" for k in kinds[first_eval:]):
            raise _fail(path, f"lab {lab.id}",
                        "evaluation tasks must come last")
        for task in lab.tasks:
            if task.id in seen:
                raise _fail(path, f"lab {lab.id}",
                            f"duplicate task id {task.id!r}")
            seen.add(task.id)
            for quiz_id in task.quiz_ids:
                if quiz_id not in quizzes:
                    raise _fail(path, f"task {task.id}",
                                f"unknown quiz id {quiz_id!r}")
    return CourseConfig(title=_need(raw, "title", path), labs=labs,
                        weights=weights, pass_threshold=threshold,
                        quizzes=quizzes)


# --- validation ---

@dataclass
class RuleResult:
    rule: str
    ok: bool
    detail: str = ""


@dataclass
class TaskValidation:
    task_id: str
    rules: list[RuleResult]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rules)


def validate_manifest(task: TaskManifest) -> TaskValidation:
    rules: list[RuleResult] = []

    registry = get_profile(task.profile)
    missing = [name for name in task.banned if name not in registry]
    rules.append(RuleResult(
        "banned-names-known", not missing,
        f"banned names not in profile: {missing}" if missing else ""))

    try:
        program = parse(task.starter)
        interp = Interpreter(registry, replace(task.limits,
                                               seed=_VALIDATE_STUDENT_SEED))
        outcome = interp.run(program)
        rules.append(RuleResult(
            "starter-executes", outcome.ok,
            "" if outcome.ok else f"starter failed: {outcome.error}"))
    except Exception as e:   # syntax error or authoring bug
        rules.append(RuleResult("starter-executes", False, str(e)))

    try:
        report = grade(task, task.reference,
                       student_seed=_VALIDATE_STUDENT_SEED,
                       reference_seed=_VALIDATE_REFERENCE_SEED)
        failing = [r for r in report.results if r.verdict == "fail"]
        rules.append(RuleResult(
            "reference-passes", report.passed,
            "" if report.passed else
            "; ".join(f"{r.spec_id}: {r.message}" for r in failing)))
    except Exception as e:
        rules.append(RuleResult("reference-passes", False, str(e)))

    if task.kind == "overview":
        rules.append(RuleResult(
            "overview-starter-is-reference",
            task.starter.strip() == task.reference.strip(),
            "overview tasks are run-and-submit; starter must equal reference"
            if task.starter.strip() != task.reference.strip() else ""))
    else:
        try:
            report = grade(task, task.starter,
                           student_seed=_VALIDATE_STUDENT_SEED,
                           reference_seed=_VALIDATE_REFERENCE_SEED)
            rules.append(RuleResult(
                "starter-fails", not report.passed,
                "" if not report.passed else
                "the starter already passes every check"))
        except Exception as e:
            rules.append(RuleResult("starter-fails", False, str(e)))

    return TaskValidation(task.id, rules)


def validate_course(course: CourseConfig) -> list[TaskValidation]:
    return [validate_manifest(task) for _, task in course.all_tasks()]


def list_course(course: CourseConfig) -> dict:
    """Ordered lab/task summary used by the service and the CLI."""
    return {
        "title": course.title,
        "weights": course.weights,
        "pass_threshold": course.pass_threshold,
        "labs": [
            {
                "id": lab.id,
                "title": lab.title,
                "tasks": [
                    {"id": t.id, "title": t.title, "kind": t.kind,
                     "quiz": list(t.quiz_ids)}
                    for t in lab.tasks
                ],
            }
            for lab in course.labs
        ],
        "quizzes": [
            {"id": q.id, "prompt": q.prompt, "kind": q.kind,
             "choices": list(q.choices)}
            for q in course.quizzes.values()
        ],
    }


def shipped_course_dir() -> Path:
    """Directory of the course content installed with the package."""
    return Path(__file__).resolve().parent / "course"
