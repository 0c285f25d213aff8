"""Format conformance scoring for skills and skillsets.

Each check contributes its points only when it passes. Results carry one
compiler-style diagnostic per check, except when the frontmatter cannot be
read at all: that run scores zero and carries a single error.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlparse

from skilldex import SPEC_VERSION
from skilldex.document import (
    ParseFailure,
    SkillDocument,
    extract_relative_links,
    parse_skill_document,
    word_count_of,
)
from skilldex.errors import SkilldexError

PASS = "pass"
WARNING = "warning"
ERROR = "error"

SKILL_FILE = "SKILL.md"
SKILLSET_FILE = "SKILLSET.md"

MIN_DESCRIPTION_WORDS = 30
MAX_SKILL_LINES = 500
ALLOWED_SUBDIRS = ("scripts", "references", "assets")
SCRIPT_EXTENSIONS = frozenset({".sh", ".py", ".js", ".ts", ".rb", ".ps1"})

SKILL_CHECKS: dict[str, int] = {
    "FRONTMATTER": 25,
    "NAME": 10,
    "DESC_PRESENT": 10,
    "DESC_LENGTH": 10,
    "LINE_BUDGET": 15,
    "SUBDIRS": 10,
    "RESOURCES_EXIST": 15,
    "RESOURCES_PLACED": 5,
}

SKILLSET_CHECKS: dict[str, int] = {
    "FRONTMATTER": 25,
    "NAME": 10,
    "DESC_PRESENT": 10,
    "DESC_LENGTH": 10,
    "MIN_SKILLS": 20,
    "TOPLEVEL_DIRS": 10,
    "REMOTE_URLS": 15,
}


@dataclass
class Diagnostic:
    severity: str
    message: str
    check_id: str
    line: int | None = None

    def to_dict(self) -> dict:
        return {"severity": self.severity, "line": self.line, "message": self.message, "checkId": self.check_id}


@dataclass
class ValidationResult:
    subject: str
    score: int
    diagnostics: list[Diagnostic]
    spec_version: str
    kind: str = "skill"

    @property
    def pass_count(self) -> int:
        return sum(d.severity == PASS for d in self.diagnostics)

    @property
    def warn_count(self) -> int:
        return sum(d.severity == WARNING for d in self.diagnostics)

    @property
    def error_count(self) -> int:
        return sum(d.severity == ERROR for d in self.diagnostics)

    @property
    def fatal(self) -> bool:
        return len(self.diagnostics) == 1 and self.diagnostics[0].check_id == "FRONTMATTER" \
            and self.diagnostics[0].severity == ERROR

    def to_dict(self) -> dict:
        return {
            self.kind: self.subject,
            "score": self.score,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "specVersion": self.spec_version,
            "passCount": self.pass_count,
            "warnCount": self.warn_count,
            "errorCount": self.error_count,
        }


def score_of(diagnostics: list[Diagnostic], table: dict[str, int]) -> int:
    return sum(table[d.check_id] for d in diagnostics if d.severity == PASS)


class _Collector:
    def __init__(self, table: dict[str, int]) -> None:
        self.table = table
        self.diagnostics: list[Diagnostic] = []

    def check(self, check_id: str, ok: bool, pass_msg: str, fail_msg: str,
              line: int | None = None, fail_severity: str = ERROR) -> None:
        if ok:
            self.diagnostics.append(Diagnostic(PASS, pass_msg, check_id))
        else:
            self.diagnostics.append(Diagnostic(fail_severity, fail_msg, check_id, line))

    def result(self, subject: str, spec_version: str, kind: str) -> ValidationResult:
        return ValidationResult(subject, score_of(self.diagnostics, self.table),
                                self.diagnostics, spec_version, kind)


def _read_document(directory: Path, filename: str, missing_code: str) -> SkillDocument | ParseFailure:
    if not directory.is_dir():
        raise SkilldexError("E_NOT_A_DIRECTORY", f"not a directory: {directory}")
    path = directory / filename
    if not path.is_file():
        raise SkilldexError(missing_code, f"{filename} not found in {directory}")
    return parse_skill_document(path.read_text(encoding="utf-8", errors="replace"))


def _fatal(failure: ParseFailure, subject: str, kind: str) -> ValidationResult:
    diag = Diagnostic(ERROR, failure.message, "FRONTMATTER", failure.line)
    return ValidationResult(subject, 0, [diag], SPEC_VERSION, kind)


def _spec_version(doc: SkillDocument) -> str:
    return doc.scalar("spec_version") or SPEC_VERSION


def _check_identity(c: _Collector, doc: SkillDocument) -> None:
    """The four frontmatter checks shared by skills and skillsets."""
    c.check("FRONTMATTER", True, "YAML frontmatter valid", "")
    c.check("NAME", doc.scalar("name") is not None, "name field present",
            "name field missing or empty", doc.field_lines.get("name"))
    c.check("DESC_PRESENT", doc.scalar("description") is not None, "description field present",
            "description field missing or empty", doc.field_lines.get("description"))
    words = word_count_of(doc.frontmatter.get("description"))
    c.check("DESC_LENGTH", words >= MIN_DESCRIPTION_WORDS,
            f"description length OK ({words} words)",
            f"description too short ({words} words, recommended: {MIN_DESCRIPTION_WORDS}+)",
            doc.field_lines.get("description"))


def _child_dirs(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.is_dir() and not p.name.startswith("."))


def _is_within(path: Path, parent: Path) -> bool:
    try:
        path.relative_to(parent)
        return True
    except ValueError:
        return False


def validate_skill(skill_dir: str | Path) -> ValidationResult:
    """Score a skill directory against the eight-check skill rubric."""
    skill_dir = Path(skill_dir)
    doc = _read_document(skill_dir, SKILL_FILE, "E_NO_SKILL_FILE")
    if isinstance(doc, ParseFailure):
        return _fatal(doc, skill_dir.name, "skill")

    c = _Collector(SKILL_CHECKS)
    _check_identity(c, doc)

    c.check("LINE_BUDGET", doc.total_lines <= MAX_SKILL_LINES,
            f"SKILL.md line count OK ({doc.total_lines} lines)",
            f"SKILL.md too long ({doc.total_lines} lines, maximum: {MAX_SKILL_LINES})",
            MAX_SKILL_LINES + 1)

    unknown = [p.name for p in _child_dirs(skill_dir) if p.name not in ALLOWED_SUBDIRS]
    quoted = ", ".join(f'"{n}"' for n in unknown)
    c.check("SUBDIRS", not unknown, "Only allowed subdirectories present",
            f"Unknown subdirectory {quoted} -- only scripts/, references/, assets/ allowed",
            fail_severity=WARNING)

    offset = doc.body_start_line - 1
    root = skill_dir.resolve()
    broken, misplaced = [], []
    for link in extract_relative_links(doc.body):
        target = link.target.split("#", 1)[0].split("?", 1)[0]
        resolved = (skill_dir / target).resolve()
        if not resolved.is_file():
            broken.append((link.target, link.line + offset))
        # placement is judged by path, broken or not, so removing a file never raises the score
        # links escaping the skill root (e.g. a skillset's shared ../assets/) are not placed
        if not _is_within(resolved, root) or resolved == root / SKILL_FILE:
            continue
        rel = resolved.relative_to(root)
        top = rel.parts[0] if len(rel.parts) > 1 else ""
        ext = resolved.suffix.lower()
        if ext in SCRIPT_EXTENSIONS and top != "scripts":
            misplaced.append((link.target, link.line + offset, "scripts/"))
        elif ext == ".md" and top != "references":
            misplaced.append((link.target, link.line + offset, "references/"))

    c.check("RESOURCES_EXIST", not broken, "All referenced resources exist",
            "Referenced resource not found: " + ", ".join(f"{t} (line {n})" for t, n in broken),
            broken[0][1] if broken else None)
    c.check("RESOURCES_PLACED", not misplaced, "Referenced resources are in correct subdirectories",
            "Resource in wrong subdirectory: " + ", ".join(f"{t} should be under {d}" for t, _, d in misplaced),
            misplaced[0][1] if misplaced else None)

    return c.result(doc.scalar("name") or skill_dir.name, _spec_version(doc), "skill")


@dataclass
class RemoteSkillRef:
    name: str
    source_url: str

    def to_dict(self) -> dict:
        return {"name": self.name, "source_url": self.source_url}


def is_github_url(url: str) -> bool:
    if url.startswith("git+"):
        url = url[4:]
    parsed = urlparse(url)
    return parsed.scheme == "https" and parsed.hostname == "github.com"


def remote_refs(doc: SkillDocument) -> tuple[list[RemoteSkillRef], list[str]]:
    """Remote references declared in the ``skills`` list, plus shape problems."""
    raw = doc.frontmatter.get("skills")
    if raw is None or raw == "":
        return [], []
    if not isinstance(raw, list):
        return [], ["'skills' must be a list of {name, source_url} entries"]
    refs, problems = [], []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or set(entry) != {"name", "source_url"}:
            problems.append(f"skills[{i}] must have exactly 'name' and 'source_url'")
            continue
        refs.append(RemoteSkillRef(entry["name"], entry["source_url"]))
        if not is_github_url(entry["source_url"]):
            problems.append(f"skills[{i}].source_url is not a GitHub https URL: {entry['source_url']}")
    return refs, problems


def declared_skill_count(doc: SkillDocument) -> int:
    raw = doc.frontmatter.get("skills")
    return len(raw) if isinstance(raw, list) else 0


def embedded_skill_dirs(skillset_dir: Path) -> list[Path]:
    return [p for p in _child_dirs(Path(skillset_dir)) if (p / SKILL_FILE).is_file()]


def validate_skillset(skillset_dir: str | Path) -> ValidationResult:
    """Score a skillset directory against the seven-check skillset rubric."""
    skillset_dir = Path(skillset_dir)
    doc = _read_document(skillset_dir, SKILLSET_FILE, "E_NO_SKILLSET_FILE")
    if isinstance(doc, ParseFailure):
        return _fatal(doc, skillset_dir.name, "skillset")

    c = _Collector(SKILLSET_CHECKS)
    _check_identity(c, doc)

    embedded = embedded_skill_dirs(skillset_dir)
    total = len(embedded) + declared_skill_count(doc)
    c.check("MIN_SKILLS", total >= 1, f"{total} skill(s) present",
            "skillset contains no skills (no embedded skill directories and no 'skills' list)")

    embedded_names = {p.name for p in embedded}
    unknown = [p.name for p in _child_dirs(skillset_dir) if p.name != "assets" and p.name not in embedded_names]
    quoted = ", ".join(f'"{n}"' for n in unknown)
    c.check("TOPLEVEL_DIRS", not unknown, "No unknown top-level directories",
            f"Unknown top-level directory {quoted} -- only assets/ and skill directories allowed",
            fail_severity=WARNING)

    _, problems = remote_refs(doc)
    c.check("REMOTE_URLS", not problems, "Remote skill URLs are GitHub URLs",
            "; ".join(problems), doc.field_lines.get("skills"))

    return c.result(doc.scalar("name") or skillset_dir.name, _spec_version(doc), "skillset")


def render_human(result: ValidationResult) -> str:
    """Compiler-style text rendering of a validation result."""
    out = []
    for d in result.diagnostics:
        loc = f"line {d.line}: " if d.line is not None and d.severity != PASS else ""
        out.append(f"  {d.severity:<7} {loc}{d.message}")
    out.append("")
    out.append(f"Format conformance score: {result.score}/100")
    out.append(f"Validated against: skill-format v{result.spec_version}")
    return "\n".join(out)
