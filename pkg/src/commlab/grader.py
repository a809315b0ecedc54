"""Submission assessment pipeline.

A grade runs in a fixed order: parse, banned-function scan, student
execution, protected-input check, reference execution, then the authored
checks. The reference always runs under a different seed than the
submission, so answers that merely replay one noise realization cannot
pass statistical checks.

Feedback is factual: observed against expected, never a guess at intent.
The one exception is the common-mistake match, where a known-wrong
solution reproduces the student's output exactly and earns its specific
message.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .errors import AuthoringError, LabSyntaxError
from .interpreter import (ExecLimits, ExecOutcome, FigureData, Interpreter)
from .nodes import Call, Program, walk
from .parser import parse
from .profiles import get_profile
from .stopwait import trace_complete, trace_from_workspace, trace_violations
from .values import Cell, Value, Vec, fmt_number, kind_of, summarize

EPS = 2.0 ** -52


# --- check specifications ---

@dataclass
class BannedFunctions:
    names: list[str] = field(default_factory=list)
    message: Optional[str] = None


@dataclass
class ProtectedInputs:
    required: dict[str, Value] = field(default_factory=dict)
    message: Optional[str] = None


@dataclass
class VarExists:
    name: str
    message: Optional[str] = None


@dataclass
class VarEquals:
    name: str
    message: Optional[str] = None


@dataclass
class VarClose:
    name: str
    eps_multiple: float = 100.0
    message: Optional[str] = None


@dataclass
class VarCloseMSE:
    name: str
    mse_tolerance: float = 0.01
    message: Optional[str] = None


@dataclass
class FigureMatch:
    figure: int = 1
    eps_multiple: float = 100.0
    structure_only: bool = False
    message: Optional[str] = None


@dataclass
class ProtocolTraceCheck:
    message: Optional[str] = None


@dataclass
class CommonMistake:
    """A known-wrong solution; matching its output earns its message."""
    id: str
    script: str
    message: str


CheckSpec = Union[BannedFunctions, ProtectedInputs, VarExists, VarEquals,
                  VarClose, VarCloseMSE, FigureMatch, ProtocolTraceCheck]


@dataclass
class CheckResult:
    spec_id: str
    verdict: str          # pass | fail | skipped
    message: str = ""


@dataclass
class GradeReport:
    overall: str          # pass | fail
    results: list[CheckResult]
    student_status: str
    student_error: Optional[str]
    printed: list[str]
    figure_count: int
    student_seed: int
    reference_seed: int

    @property
    def passed(self) -> bool:
        return self.overall == "pass"


MISSING_VAR = "Expected variable '{var}' is missing."
DO_NOT_CHANGE = "The variable {var} should be {expected}. Do not change it."


def fill(template: str, **subs: str) -> str:
    """Substitute {var}-style placeholders, leaving unknown ones alone."""
    return re.sub(r"\{(\w+)\}",
                  lambda m: subs.get(m.group(1), m.group(0)), template)


def check_id(spec: CheckSpec) -> str:
    if isinstance(spec, BannedFunctions):
        return "banned"
    if isinstance(spec, ProtectedInputs):
        return "inputs"
    if isinstance(spec, VarExists):
        return f"exists:{spec.name}"
    if isinstance(spec, VarEquals):
        return f"equals:{spec.name}"
    if isinstance(spec, VarClose):
        return f"close:{spec.name}"
    if isinstance(spec, VarCloseMSE):
        return f"mse:{spec.name}"
    if isinstance(spec, FigureMatch):
        return f"figure:{spec.figure}"
    return "protocol"


# --- comparators ---

def _normalize(v: Value) -> Value:
    """Scalar-like values compare as numbers regardless of representation."""
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, Vec) and len(v.items) == 1:
        return v.items[0]
    return v


def _as_vector(v: Value) -> Optional[list[float]]:
    if isinstance(v, bool):
        return [1.0 if v else 0.0]
    if isinstance(v, float):
        return [v]
    if isinstance(v, Vec):
        return list(v.items)
    return None


def _pair_summary(student: Value, reference: Value) -> str:
    return (f"observed: {summarize(student)}\n"
            f"expected: {summarize(reference)}")


def compare_exact(student: Value, reference: Value) -> tuple[bool, str]:
    s, r = _normalize(student), _normalize(reference)
    if kind_of(s) != kind_of(r):
        return False, (f"it should be a {kind_of(r)}, but it is a {kind_of(s)}\n"
                       + _pair_summary(student, reference))
    if isinstance(r, float):
        if s == r:
            return True, ""
        return False, (f"observed {fmt_number(s)}, expected {fmt_number(r)}")
    if isinstance(r, str):
        if s == r:
            return True, ""
        return False, _pair_summary(student, reference)
    if isinstance(r, Vec):
        if len(s.items) != len(r.items):
            return False, (f"it has length {len(s.items)}, but should have "
                           f"length {len(r.items)}\n" + _pair_summary(student, reference))
        for k, (a, b) in enumerate(zip(s.items, r.items), start=1):
            if a != b:
                return False, (f"it differs at index {k}: observed {fmt_number(a)}, "
                               f"expected {fmt_number(b)}\n"
                               + _pair_summary(student, reference))
        return True, ""
    if isinstance(r, Cell):
        if len(s.items) != len(r.items):
            return False, (f"it has {len(s.items)} entries, but should have "
                           f"{len(r.items)}")
        for k, (a, b) in enumerate(zip(s.items, r.items), start=1):
            ok, detail = compare_exact(a, b)
            if not ok:
                return False, f"entry {k}: {detail}"
        return True, ""
    return False, "unsupported value kind"


def compare_close(student: Value, reference: Value,
                  eps_multiple: float) -> tuple[bool, str]:
    s = _as_vector(student)
    r = _as_vector(reference)
    if s is None or r is None:
        return False, (f"it should be numeric\n" + _pair_summary(student, reference))
    if len(s) != len(r):
        return False, (f"it has length {len(s)}, but should have length {len(r)}\n"
                       + _pair_summary(student, reference))
    scale = max([1.0] + [abs(x) for x in r])
    allowed = eps_multiple * EPS * scale
    deviation = max((abs(a - b) for a, b in zip(s, r)), default=0.0)
    if deviation <= allowed:
        return True, ""
    return False, (f"maximum deviation {deviation:.6g} exceeds the allowed "
                   f"{allowed:.6g}\n" + _pair_summary(student, reference))


def compare_mse(student: Value, reference: Value,
                tolerance: float) -> tuple[bool, str]:
    s = _as_vector(student)
    r = _as_vector(reference)
    if s is None or r is None:
        return False, (f"it should be numeric\n" + _pair_summary(student, reference))
    if len(s) != len(r):
        return False, (f"it has length {len(s)}, but should have length {len(r)}\n"
                       + _pair_summary(student, reference))
    mse = sum((a - b) ** 2 for a, b in zip(s, r)) / len(s) if s else 0.0
    if mse <= tolerance:
        return True, ""
    return False, (f"mean squared error {mse:.6g} exceeds the allowed "
                   f"{tolerance:.6g}\n" + _pair_summary(student, reference))


def compare_figures(student: list[FigureData], reference: list[FigureData],
                    spec: FigureMatch) -> tuple[bool, str]:
    """Stage order: figure count, curve count, points per curve, values."""
    if len(student) != len(reference):
        return False, f"expected {len(reference)} figures, found {len(student)}"
    f = spec.figure
    if not 1 <= f <= len(reference):
        raise AuthoringError(f"figure check targets figure {f}, "
                             f"but the reference produced {len(reference)}")
    stu, ref = student[f - 1], reference[f - 1]
    if len(stu.curves) != len(ref.curves):
        return False, (f"figure {f}: expected {len(ref.curves)} curves, "
                       f"found {len(stu.curves)}")
    for j, (cs, cr) in enumerate(zip(stu.curves, ref.curves), start=1):
        if len(cs.y) != len(cr.y):
            return False, (f"figure {f}, curve {j}: expected {len(cr.y)} points, "
                           f"found {len(cs.y)}")
    if spec.structure_only:
        return True, ""
    for j, (cs, cr) in enumerate(zip(stu.curves, ref.curves), start=1):
        for axis, sv, rv in (("x", cs.x, cr.x), ("y", cs.y, cr.y)):
            ok, detail = compare_close(Vec(sv), Vec(rv), spec.eps_multiple)
            if not ok:
                return False, f"figure {f}, curve {j}, {axis} values: {detail}"
    return True, ""


# --- pipeline pieces ---

def check_banned(program: Program, names: list[str]) -> tuple[bool, str]:
    banned = set(names)
    hits = []
    seen = set()
    for node in walk(program):
        if isinstance(node, Call) and node.name in banned and node.name not in seen:
            hits.append((node.name, node.line))
            seen.add(node.name)
    if not hits:
        return True, ""
    return False, "\n".join(
        f"The function '{name}' may not be used in this task (line {line})."
        for name, line in hits)


def check_protected_inputs(workspace: dict[str, Value],
                           required: dict[str, Value]) -> tuple[bool, str]:
    problems = []
    for name, value in required.items():
        if name not in workspace:
            problems.append(fill(MISSING_VAR, var=name))
            continue
        ok, _ = compare_exact(workspace[name], value)
        if not ok:
            problems.append(fill(DO_NOT_CHANGE, var=name, expected=summarize(value)))
    return (not problems), "\n".join(problems)


def check_protocol(workspace: dict[str, Value]) -> tuple[bool, str]:
    data = trace_from_workspace(workspace)
    if data is None:
        return False, ("The stop-and-wait simulation was never run; "
                       "call sw_init and sw_step.")
    trace, timeout, steps = data
    problems = []
    seen_rules = set()
    for v in trace_violations(trace, timeout, steps):
        if v.message in seen_rules:
            continue
        seen_rules.add(v.message)
        problems.append(f"{v.message} (step {v.step}).")
    if not trace_complete(trace):
        problems.append(f"Only {len(trace.delivered)} of {trace.n} packets "
                        f"were delivered within {steps} time steps.")
    return (not problems), "\n".join(problems)


def _run(source: str, profile: str, limits: ExecLimits, seed: int) -> ExecOutcome:
    interp = Interpreter(get_profile(profile), replace(limits, seed=seed))
    try:
        program = parse(source)
    except LabSyntaxError as e:
        return ExecOutcome("script-error", {}, [], [], e.message, e.line, e.col)
    return interp.run(program)


def _located(outcome: ExecOutcome) -> str:
    msg = outcome.error or "execution failed"
    if outcome.error_line is not None:
        return f"{msg} (line {outcome.error_line})"
    return msg


@dataclass
class _AltCache:
    """Common-mistake runs are shared across all failed checks of a grade."""
    task: object
    seed: int
    outcomes: dict[str, Optional[ExecOutcome]] = field(default_factory=dict)

    def outcome(self, mistake: CommonMistake) -> Optional[ExecOutcome]:
        if mistake.id not in self.outcomes:
            out = _run(mistake.script, self.task.profile, self.task.limits, self.seed)
            self.outcomes[mistake.id] = out if out.ok else None
        return self.outcomes[mistake.id]


def _match_common_mistake(task, alts: _AltCache, name: str,
                          student_value: Value, comparator) -> Optional[str]:
    """Message of the first known-wrong solution the student reproduced."""
    for mistake in task.common_mistakes:
        out = alts.outcome(mistake)
        if out is None or name not in out.workspace:
            continue
        ok, _ = comparator(student_value, out.workspace[name])
        if ok:
            return fill(mistake.message, var=name,
                        observed=summarize(student_value))
    return None


def grade(task, submission: str,
          student_seed: Optional[int] = None,
          reference_seed: Optional[int] = None) -> GradeReport:
    """Grade a submission against a task manifest.

    Seeds default to fresh entropy; the two runs never share one, so
    noise realizations differ between student and reference.
    """
    rng = np.random.default_rng()
    if student_seed is None:
        student_seed = int(rng.integers(2 ** 31))
    if reference_seed is None:
        reference_seed = int(rng.integers(2 ** 31))
    if reference_seed == student_seed:
        reference_seed = (reference_seed + 1) % 2 ** 31

    results: list[CheckResult] = []
    banned_spec = next((c for c in task.checks if isinstance(c, BannedFunctions)),
                       BannedFunctions())
    rest = [c for c in task.checks if not isinstance(c, BannedFunctions)]

    def skip_all(reason: str) -> None:
        for spec in rest:
            results.append(CheckResult(check_id(spec), "skipped", reason))

    def report(status: str, error: Optional[str], printed: list[str],
               figures: int) -> GradeReport:
        overall = "pass" if all(r.verdict != "fail" for r in results) else "fail"
        return GradeReport(overall, results, status, error, printed, figures,
                           student_seed, reference_seed)

    try:
        program = parse(submission)
    except LabSyntaxError as e:
        results.append(CheckResult("execution", "fail",
                                   f"syntax error: {e.located()}"))
        results.append(CheckResult("banned", "skipped",
                                   "not checked because the submission did not parse"))
        skip_all("not checked because the submission did not parse")
        return report("script-error", e.located(), [], 0)

    ok, detail = check_banned(program, banned_spec.names)
    if banned_spec.message and not ok:
        detail = fill(banned_spec.message, line=detail)
    results.append(CheckResult("banned", "pass" if ok else "fail", detail))
    if not ok:
        results.append(CheckResult("execution", "skipped",
                                   "not run because a banned function was used"))
        skip_all("not checked because a banned function was used")
        return report("not-run", None, [], 0)

    interp = Interpreter(get_profile(task.profile),
                         replace(task.limits, seed=student_seed))
    student = interp.run(program)
    if student.ok:
        results.append(CheckResult("execution", "pass"))
    else:
        results.append(CheckResult("execution", "fail", _located(student)))

    reference: Optional[ExecOutcome] = None
    if student.ok:
        reference = _run(task.reference, task.profile, task.limits, reference_seed)
        if not reference.ok:
            raise AuthoringError(
                f"reference script of task {getattr(task, 'id', '?')} failed: "
                f"{_located(reference)}")

    alts = _AltCache(task, student_seed)
    failed_vars: set[str] = set()
    mistakes_tried: set[str] = set()

    def value_check(spec, comparator) -> None:
        name = spec.name
        if not student.ok:
            results.append(CheckResult(
                check_id(spec), "skipped",
                "not checked because the submission did not run"))
            return
        if name in failed_vars:
            results.append(CheckResult(
                check_id(spec), "skipped",
                f"not checked because '{name}' is missing"))
            return
        if name not in reference.workspace:
            raise AuthoringError(
                f"check references '{name}', which the reference never sets")
        student_value = student.workspace.get(name)
        if student_value is None:
            results.append(CheckResult(check_id(spec), "fail",
                                       fill(MISSING_VAR, var=name)))
            return
        ref_value = reference.workspace[name]
        ok, detail = comparator(student_value, ref_value)
        if ok:
            results.append(CheckResult(check_id(spec), "pass"))
            return
        message = None
        if name not in mistakes_tried:
            mistakes_tried.add(name)
            message = _match_common_mistake(task, alts, name, student_value,
                                            comparator)
        if message is None:
            template = spec.message or \
                "The variable '{var}' does not have the expected value: {detail}"
            message = fill(template, var=name, detail=detail,
                           observed=summarize(student_value),
                           expected=summarize(ref_value))
        results.append(CheckResult(check_id(spec), "fail", message))

    for spec in rest:
        if isinstance(spec, ProtectedInputs):
            ok, detail = check_protected_inputs(student.workspace, spec.required)
            results.append(CheckResult("inputs", "pass" if ok else "fail", detail))
        elif isinstance(spec, VarExists):
            if not student.ok:
                results.append(CheckResult(
                    check_id(spec), "skipped",
                    "not checked because the submission did not run"))
            elif spec.name in student.workspace:
                results.append(CheckResult(check_id(spec), "pass"))
            else:
                failed_vars.add(spec.name)
                results.append(CheckResult(
                    check_id(spec), "fail",
                    fill(spec.message or MISSING_VAR, var=spec.name)))
        elif isinstance(spec, VarEquals):
            value_check(spec, compare_exact)
        elif isinstance(spec, VarClose):
            value_check(spec, lambda s, r, m=spec.eps_multiple: compare_close(s, r, m))
        elif isinstance(spec, VarCloseMSE):
            value_check(spec, lambda s, r, t=spec.mse_tolerance: compare_mse(s, r, t))
        elif isinstance(spec, FigureMatch):
            if not student.ok:
                results.append(CheckResult(
                    check_id(spec), "skipped",
                    "not checked because the submission did not run"))
            else:
                ok, detail = compare_figures(student.figures, reference.figures, spec)
                if not ok and spec.message:
                    detail = fill(spec.message, detail=detail)
                results.append(CheckResult(check_id(spec), "pass" if ok else "fail",
                                           detail))
        elif isinstance(spec, ProtocolTraceCheck):
            if not student.ok:
                results.append(CheckResult(
                    check_id(spec), "skipped",
                    "not checked because the submission did not run"))
            else:
                ok, detail = check_protocol(student.workspace)
                results.append(CheckResult(check_id(spec), "pass" if ok else "fail",
                                           detail))
        else:
            raise AuthoringError(f"unknown check spec {spec!r}")

    return report(student.status, student.error if not student.ok else None,
                  student.printed, len(student.figures))
