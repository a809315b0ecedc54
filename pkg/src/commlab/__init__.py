"""Interactive lab platform for digital communication courses.

The pieces, bottom up: a small MATLAB-flavored script language with a
sandboxed interpreter, a channel-simulation builtin library, a
stop-and-wait protocol simulator, an autograder that compares student
runs against reference runs, YAML task manifests, and an HTTP service
with an append-only attempt log.
"""

from .errors import (AuthoringError, LabError, LabRuntimeError,
                     LabSyntaxError, ResourceLimitError)
from .grader import GradeReport, grade
from .interpreter import (BuiltinRegistry, ExecLimits, ExecOutcome,
                          Interpreter, run_source)
from .manifest import (CourseConfig, TaskManifest, load_course, load_task,
                       shipped_course_dir, validate_course, validate_manifest)
from .parser import parse
from .profiles import get_profile, profile_names
from .store import ScoreRecord, Store
from .values import Cell, Vec

__version__ = "0.1.0"

__all__ = [
    "AuthoringError", "BuiltinRegistry", "Cell", "CourseConfig",
    "ExecLimits", "ExecOutcome", "GradeReport", "Interpreter", "LabError",
    "LabRuntimeError", "LabSyntaxError", "ResourceLimitError", "ScoreRecord",
    "Store", "TaskManifest", "Vec", "grade", "get_profile", "load_course",
    "load_task", "parse", "profile_names", "run_source",
    "shipped_course_dir", "validate_course", "validate_manifest",
    "__version__",
]
