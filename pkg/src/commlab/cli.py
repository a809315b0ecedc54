"""Command line tooling: validate content, run and grade locally, serve.

The run and check commands work on a single task file plus a script
file, which keeps the author loop on the desktop: edit, run, diff the
dumped curves, check. Figure dumps are plain text so they diff well;
--render-dir additionally renders each figure to a PNG with the same
curve data written beside it as CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import AuthoringError
from .grader import grade
from .interpreter import run_source
from .manifest import load_course, load_task, validate_course
from .profiles import get_profile
from .store import Store
from .values import summarize


def _fresh_seed() -> int:
    return int.from_bytes(os.urandom(4), "big")


def _fmt_row(xs) -> str:
    return " ".join(f"{v:.12g}" for v in xs)


def dump_figures(figures, out) -> None:
    for fig in figures:
        title = f": {fig.title}" if fig.title else ""
        print(f"figure {fig.number}{title}", file=out)
        for i, curve in enumerate(fig.curves, start=1):
            style = f" [{curve.style}]" if curve.style else ""
            print(f"curve {i}{style}", file=out)
            print(f"x: {_fmt_row(curve.x)}", file=out)
            print(f"y: {_fmt_row(curve.y)}", file=out)


def render_figures(figures, render_dir: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    render_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fig in figures:
        mfig, ax = plt.subplots()
        for curve in fig.curves:
            fmt = curve.style if curve.style else "-"
            ax.plot(curve.x, curve.y, fmt)
        if fig.title:
            ax.set_title(fig.title)
        if fig.xlabel:
            ax.set_xlabel(fig.xlabel)
        if fig.ylabel:
            ax.set_ylabel(fig.ylabel)
        png = render_dir / f"figure-{fig.number}.png"
        mfig.savefig(png)
        plt.close(mfig)
        written.append(png)
        for i, curve in enumerate(fig.curves, start=1):
            csv = render_dir / f"figure-{fig.number}-curve-{i}.csv"
            with csv.open("w") as fh:
                fh.write("x,y\n")
                for x, y in zip(curve.x, curve.y):
                    fh.write(f"{x:.12g},{y:.12g}\n")
            written.append(csv)
    return written


def cmd_validate(args) -> int:
    try:
        course = load_course(args.course_dir)
    except AuthoringError as e:
        print(e, file=sys.stderr)
        return 1
    reports = validate_course(course)
    failed = False
    for report in reports:
        status = "ok" if report.ok else "FAIL"
        print(f"{status}  {report.task_id}")
        for rule in report.rules:
            if not rule.ok:
                failed = True
                print(f"      {rule.rule}: {rule.detail}")
    print(f"{len(reports)} task manifests, "
          f"{sum(1 for r in reports if r.ok)} ok")
    return 1 if failed else 0


def _load_run_inputs(args):
    task = load_task(args.task_file)
    source = Path(args.script_file).read_text()
    seed = args.seed if args.seed is not None else _fresh_seed()
    return task, source, seed


def cmd_run(args) -> int:
    task, source, seed = _load_run_inputs(args)
    outcome = run_source(source, get_profile(task.profile),
                         replace(task.limits, seed=seed))
    if args.json:
        payload = {
            "status": outcome.status,
            "seed": seed,
            "printed": list(outcome.printed),
            "error": outcome.error,
            "figures": [
                {"number": f.number, "title": f.title,
                 "xlabel": f.xlabel, "ylabel": f.ylabel,
                 "curves": [{"x": list(c.x), "y": list(c.y), "style": c.style}
                            for c in f.curves]}
                for f in outcome.figures
            ],
            "workspace": {k: summarize(v)
                          for k, v in outcome.workspace.items()
                          if not k.startswith("_")},
        }
        print(json.dumps(payload, indent=2))
    else:
        for line in outcome.printed:
            print(line)
        dump_figures(outcome.figures, sys.stdout)
        for name in sorted(outcome.workspace):
            if not name.startswith("_"):
                print(f"{name} = {summarize(outcome.workspace[name])}")
        if outcome.error is not None:
            where = (f" (line {outcome.error_line})"
                     if outcome.error_line else "")
            print(f"{outcome.status}: {outcome.error}{where}",
                  file=sys.stderr)
    if args.render_dir is not None:
        for path in render_figures(outcome.figures, Path(args.render_dir)):
            print(f"wrote {path}")
    return 0 if outcome.ok else 1


def cmd_check(args) -> int:
    task = load_task(args.task_file)
    source = Path(args.script_file).read_text()
    report = grade(task, source, student_seed=args.seed,
                   reference_seed=args.reference_seed)
    if args.json:
        payload = {
            "passed": report.passed,
            "status": report.student_status,
            "checks": [{"id": r.spec_id, "verdict": r.verdict,
                        "message": r.message} for r in report.results],
        }
        print(json.dumps(payload, indent=2))
    else:
        for result in report.results:
            mark = {"pass": "+", "fail": "-", "skipped": " "}[result.verdict]
            line = f"{mark} {result.spec_id}"
            if result.message:
                line += f": {result.message}"
            print(line)
        print("PASS" if report.passed else "FAIL")
    return 0 if report.passed else 1


def cmd_serve(args) -> int:
    from .service import build_app, load_service_config
    try:
        config = load_service_config(args.config)
        app = build_app(config)
    except (AuthoringError, ValueError, OSError) as e:
        print(e, file=sys.stderr)
        return 1
    import uvicorn
    print(f"serving course from {config.course_dir} "
          f"on {config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


def cmd_exam(args) -> int:
    try:
        course = load_course(args.course_dir)
        store = Store(course, args.log)
        store.set_exam_fraction(args.student, args.fraction)
    except (AuthoringError, ValueError) as e:
        print(e, file=sys.stderr)
        return 1
    record = store.score(args.student)
    print(f"{args.student}: exam {record.exam_fraction:.2f}, "
          f"cumulative {record.cumulative:.3f}, eligible {record.eligible}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="commlab",
        description="communication-lab course tooling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a course directory")
    p.add_argument("course_dir")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("run", help="execute a script under a task's profile")
    p.add_argument("task_file")
    p.add_argument("script_file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--render-dir", default=None,
                   help="render figures to PNG+CSV files in this directory")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("check", help="grade a script against a task")
    p.add_argument("task_file")
    p.add_argument("script_file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reference-seed", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("exam", help="set a student's exam fraction")
    p.add_argument("course_dir")
    p.add_argument("student")
    p.add_argument("fraction", type=float)
    p.add_argument("--log", default="attempts.jsonl")
    p.set_defaults(fn=cmd_exam)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except AuthoringError as e:
        print(e, file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(e, file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
