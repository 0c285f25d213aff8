"""Skill installation from registry names, git URLs and local paths.

Every route ends in :func:`install_from_path`; the git and registry routes
only fetch a tree and hand each discovered skill directory to it.
"""

from __future__ import annotations

import base64
import contextlib
import logging
import os
import re
import shutil
import subprocess
import tempfile
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator
from urllib.parse import urlparse

from skilldex.config import load_config
from skilldex.errors import SkilldexError
from skilldex.manifest import InstalledSkill, load_manifest, save_manifest, utc_now
from skilldex.scopes import PRECEDENCE, ScopeLevel, resolve_all_scopes, resolve_scope
from skilldex.validator import SKILL_FILE, ValidationResult, validate_skill

log = logging.getLogger(__name__)

DISCOVERY_DEPTH = 3
SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
TIER_TO_SOURCE = {"verified": "official", "community": "community"}


@dataclass(frozen=True)
class GitRef:
    repo_url: str
    branch: str | None = None
    subpath: str | None = None


@dataclass(frozen=True)
class RegistryName:
    name: str


@dataclass(frozen=True)
class GitSource:
    ref: GitRef
    spec: str


@dataclass(frozen=True)
class LocalPath:
    path: Path


InstallSource = RegistryName | GitSource | LocalPath


@dataclass
class InstallOptions:
    scope: ScopeLevel = ScopeLevel.PROJECT
    force: bool = False
    source_tag: str = "local"
    source_url: str | None = None


@dataclass
class InstallReport:
    installed: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def extend(self, other: "InstallReport") -> None:
        self.installed.extend(other.installed)
        self.warnings.extend(other.warnings)
        self.errors.extend(other.errors)

    def to_dict(self) -> dict:
        d = {"installed": list(self.installed), "warnings": list(self.warnings)}
        if self.errors:
            d["errors"] = list(self.errors)
        return d


# --- source classification -------------------------------------------------

def parse_git_url(url: str) -> GitRef:
    """Parse ``git+https://host/owner/repo[/tree/<branch>[/<subpath>]]``."""
    if not url.startswith("git+"):
        raise SkilldexError("E_BAD_GIT_URL", f"git URL must start with 'git+': {url}")
    parsed = urlparse(url[4:])
    if parsed.scheme != "https" or not parsed.hostname:
        raise SkilldexError("E_BAD_GIT_URL", f"git URL must use https: {url}")
    segments = [s for s in parsed.path.split("/") if s]
    if len(segments) < 2:
        raise SkilldexError("E_BAD_GIT_URL", f"git URL is missing owner/repo: {url}")

    base = f"https://{parsed.netloc}"
    if parsed.hostname == "github.com":
        owner, repo = segments[0], segments[1]
        repo = repo[:-4] if repo.endswith(".git") else repo
        if not repo:
            raise SkilldexError("E_BAD_GIT_URL", f"git URL is missing owner/repo: {url}")
        rest = segments[2:]
        if not rest:
            return GitRef(f"{base}/{owner}/{repo}")
        if rest[0] != "tree" or len(rest) < 2:
            raise SkilldexError("E_BAD_GIT_URL", f"expected /tree/<branch>[/<subpath>] after repository: {url}")
        subpath = "/".join(rest[2:]) or None
        if subpath and ".." in subpath.split("/"):
            raise SkilldexError("E_BAD_GIT_URL", f"subpath may not contain '..': {url}")
        return GitRef(f"{base}/{owner}/{repo}", rest[1], subpath)

    path = "/".join(segments)
    path = path[:-4] if path.endswith(".git") else path
    return GitRef(f"{base}/{path}")


_SCP_REMOTE = re.compile(r"^(?:[\w.-]+@)?([\w.-]+):(?!//)([^\s]+?)/?$")


def normalize_remote_url(remote: str) -> str:
    """Map SSH/scp-style and https git remotes onto ``https://host/owner/repo``."""
    remote = remote.strip()
    parsed = urlparse(remote)
    if parsed.scheme in ("https", "ssh") and parsed.hostname:
        path = parsed.path.strip("/")
        if not path or "/" not in path:
            raise SkilldexError("E_BAD_REMOTE", f"unrecognized git remote: {remote}")
    elif not parsed.scheme or "@" in remote.split(":", 1)[0]:
        m = _SCP_REMOTE.match(remote)
        if not m or "/" not in m.group(2):
            raise SkilldexError("E_BAD_REMOTE", f"unrecognized git remote: {remote}")
        host, path = m.group(1), m.group(2).strip("/")
        return _https(host, path)
    else:
        raise SkilldexError("E_BAD_REMOTE", f"unrecognized git remote: {remote}")
    return _https(parsed.hostname, path)


def _https(host: str, path: str) -> str:
    if path.endswith(".git"):
        path = path[:-4]
    return f"https://{host}/{path}"


def parse_install_source(spec: str) -> InstallSource:
    if not spec:
        raise SkilldexError("E_BAD_SOURCE", "install source must not be empty")
    if spec.startswith("git+"):
        return GitSource(parse_git_url(spec), spec)
    if spec.startswith(("./", "../", "/", "~")) or spec in (".", "..") or os.path.exists(spec):
        return LocalPath(Path(spec).expanduser())
    return RegistryName(spec)


def registry_url_to_spec(source_url: str) -> str | None:
    """Turn a registry ``source_url`` into a ``git+`` install spec (None for local paths)."""
    if source_url.startswith("git+"):
        return source_url
    if source_url.startswith("https://"):
        return "git+" + source_url
    return None


# --- discovery and fetching ------------------------------------------------

def discover_skill_dirs(root: str | Path) -> list[Path]:
    """Directories under ``root`` (depth <= 3) containing ``SKILL.md``.

    A found skill is not descended into.
    """
    root = Path(root)
    if (root / SKILL_FILE).is_file():
        return [root]
    found: list[Path] = []
    queue = deque([(root, 0)])
    while queue:
        current, depth = queue.popleft()
        if depth >= DISCOVERY_DEPTH:
            continue
        try:
            children = sorted(p for p in current.iterdir() if p.is_dir() and not p.name.startswith("."))
        except OSError:
            continue
        for child in children:
            if (child / SKILL_FILE).is_file():
                found.append(child)
            else:
                queue.append((child, depth + 1))
    return sorted(found, key=lambda p: str(p))


def _git_env() -> dict:
    env = dict(os.environ)
    env["GIT_TERMINAL_PROMPT"] = "0"
    return env


def _git_auth_args() -> list[str]:
    token = os.environ.get("GITHUB_TOKEN") or load_config().get("github.token")
    if not token:
        return []
    basic = base64.b64encode(f"x-access-token:{token}".encode()).decode()
    return ["-c", f"http.https://github.com/.extraheader=AUTHORIZATION: basic {basic}"]


@contextlib.contextmanager
def cloned(ref: GitRef) -> Iterator[Path]:
    """Shallow-clone ``ref`` into a temp directory; yields the resolved subpath."""
    tmp = Path(tempfile.mkdtemp(prefix="skilldex-clone-"))
    try:
        checkout = tmp / "repo"
        cmd = ["git", *_git_auth_args(), "clone", "--depth", "1", "--quiet"]
        if ref.branch:
            cmd += ["--branch", ref.branch]
        cmd += [ref.repo_url, str(checkout)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, env=_git_env(), timeout=300)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise SkilldexError("E_GIT_CLONE", f"git clone of {ref.repo_url} failed: {exc}") from exc
        if proc.returncode != 0:
            raise SkilldexError("E_GIT_CLONE", f"git clone of {ref.repo_url} failed: {proc.stderr.strip()}")
        target = checkout
        if ref.subpath:
            target = checkout / ref.subpath
            if not target.is_dir():
                raise SkilldexError("E_SUBPATH_MISSING", f"subpath {ref.subpath!r} not found in {ref.repo_url}")
        yield target
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


# --- install / uninstall ---------------------------------------------------

def detect_scope_conflicts(name: str, target_scope: ScopeLevel | str, start_dir=None) -> list[ScopeLevel]:
    target_scope = ScopeLevel.parse(target_scope)
    conflicts = []
    for scope in resolve_all_scopes(start_dir):
        if scope.level is target_scope:
            continue
        if name in load_manifest(scope.manifest_path, scope.level).skills:
            conflicts.append(scope.level)
    return conflicts


def skill_identity(result: ValidationResult, source_dir: Path) -> str:
    """The installable name of a validated skill, or ``E_UNIDENTIFIABLE_SKILL``."""
    if result.fatal:
        raise SkilldexError("E_UNIDENTIFIABLE_SKILL",
                            f"cannot identify skill in {source_dir.name}: {result.diagnostics[0].message}")
    name_ok = any(d.check_id == "NAME" and d.severity == "pass" for d in result.diagnostics)
    if not name_ok:
        raise SkilldexError("E_UNIDENTIFIABLE_SKILL", f"skill in {source_dir.name} has no name field")
    if not SAFE_NAME.match(result.subject):
        raise SkilldexError("E_UNIDENTIFIABLE_SKILL", f"skill name {result.subject!r} is not a valid directory name")
    return result.subject


def diagnostic_warnings(result: ValidationResult) -> list[str]:
    out = []
    for d in result.diagnostics:
        if d.severity == "pass":
            continue
        loc = f"line {d.line}: " if d.line is not None else ""
        out.append(f"{result.subject}: {d.severity} {loc}{d.message}")
    return out


def _copy_ignore(directory: str, names: list[str]) -> list[str]:
    return [n for n in names if n == ".git"]


def copy_tree_atomic(source: Path, dest: Path) -> None:
    """Copy ``source`` to ``dest`` via a sibling staging directory, replacing ``dest``."""
    dest.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{dest.name}.staging-", dir=dest.parent))
    try:
        shutil.copytree(source, staging / "tree", ignore=_copy_ignore, symlinks=True)
        if dest.exists():
            shutil.rmtree(dest)
        os.replace(staging / "tree", dest)
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def _read_version(source_dir: Path) -> str:
    from skilldex.document import SkillDocument, parse_skill_document

    doc = parse_skill_document((source_dir / SKILL_FILE).read_text(encoding="utf-8", errors="replace"))
    if isinstance(doc, SkillDocument):
        return doc.scalar("version") or "0.0.0"
    return "0.0.0"


def install_from_path(source_dir: str | Path, options: InstallOptions, start_dir=None) -> InstallReport:
    """Validate, copy into ``<scope>/skills/<name>`` and record in the manifest.

    Validation findings become warnings; only an unidentifiable skill aborts.
    """
    source_dir = Path(source_dir).expanduser()
    result = validate_skill(source_dir)
    name = skill_identity(result, source_dir)

    scope = resolve_scope(options.scope, start_dir)
    manifest = load_manifest(scope.manifest_path, scope.level)
    dest = scope.skills_dir / name
    if (name in manifest.skills or dest.exists()) and not options.force:
        raise SkilldexError("E_ALREADY_INSTALLED",
                            f"{name} is already installed at {scope.level.value} scope (use --force to replace)")

    report = InstallReport(warnings=diagnostic_warnings(result))
    for other in detect_scope_conflicts(name, scope.level, start_dir):
        report.warnings.append(f"{name} is also installed at {other.value} scope")

    skills_dir_existed = scope.skills_dir.exists()
    backup = None
    try:
        if dest.exists():
            backup = Path(tempfile.mkdtemp(prefix=".backup-", dir=scope.skills_dir))
            shutil.copytree(dest, backup / "tree", symlinks=True)
        copy_tree_atomic(source_dir, dest)
        manifest.skills[name] = InstalledSkill(
            name=name,
            version=_read_version(source_dir),
            source=options.source_tag,
            source_url=options.source_url,
            installed_at=utc_now(),
            spec_version=result.spec_version,
            score=result.score,
            path=f"skills/{name}",
        )
        save_manifest(scope.manifest_path, manifest)
    except BaseException as exc:
        shutil.rmtree(dest, ignore_errors=True)
        if backup is not None:
            os.replace(backup / "tree", dest)
        if not skills_dir_existed and scope.skills_dir.exists() and not any(scope.skills_dir.iterdir()):
            scope.skills_dir.rmdir()
        if isinstance(exc, OSError):
            raise SkilldexError("E_IO", f"cannot install {name}: {exc}") from exc
        raise
    finally:
        if backup is not None:
            shutil.rmtree(backup, ignore_errors=True)

    report.installed.append({"name": name, "score": result.score, "scope": scope.level.value})
    return report


def _matches_name(skill_dir: Path, name: str) -> bool:
    try:
        return validate_skill(skill_dir).subject == name
    except SkilldexError:
        return False


def install_discovered(root: Path, options: InstallOptions, start_dir=None,
                       only: str | None = None) -> InstallReport:
    """Install every skill discovered under ``root``; sibling failures are collected."""
    dirs = discover_skill_dirs(root)
    if only is not None:
        dirs = [d for d in dirs if _matches_name(d, only)]
    if not dirs:
        raise SkilldexError("E_NO_SKILLS_FOUND", f"no SKILL.md found under {root.name or root}")
    report = InstallReport()
    for skill_dir in dirs:
        try:
            report.extend(install_from_path(skill_dir, options, start_dir))
        except SkilldexError as exc:
            report.errors.append({"path": skill_dir.name, **exc.to_dict()})
    if not report.installed and report.errors:
        first = report.errors[0]
        raise SkilldexError(first["code"], first["message"])
    return report


def install_from_git(ref: GitRef, options: InstallOptions, start_dir=None,
                     spec: str | None = None, only: str | None = None) -> InstallReport:
    if options.source_url is None:
        options = InstallOptions(options.scope, options.force, options.source_tag, spec or _ref_to_spec(ref))
    with cloned(ref) as root:
        return install_discovered(root, options, start_dir, only)


def _ref_to_spec(ref: GitRef) -> str:
    spec = "git+" + ref.repo_url
    if ref.branch:
        spec += f"/tree/{ref.branch}"
        if ref.subpath:
            spec += f"/{ref.subpath}"
    return spec


def _not_in_registry(exc: Exception, kind: str, name: str) -> SkilldexError:
    if getattr(exc, "status", None) == 404:
        return SkilldexError("E_NOT_IN_REGISTRY", f"{kind} {name!r} not found in registry")
    return exc  # type: ignore[return-value]


def install_by_name(name: str, options: InstallOptions, start_dir, client,
                    only: str | None = None) -> InstallReport:
    try:
        info = client.install_info(name)
    except SkilldexError as exc:
        raise _not_in_registry(exc, "skill", name) from exc
    record = info["record"]
    tagged = InstallOptions(options.scope, options.force,
                            TIER_TO_SOURCE.get(record.get("trust_tier"), "community"), None)
    return install_from_registry_url(info["source_url"], tagged, start_dir, only=only or name)


def install_from_registry_url(source_url: str, options: InstallOptions, start_dir=None,
                              only: str | None = None) -> InstallReport:
    """Install from a registry ``source_url``: a GitHub URL, or a local path in test mode."""
    spec = registry_url_to_spec(source_url)
    if spec is not None:
        options.source_url = spec
        return install_from_git(parse_git_url(spec), options, start_dir, spec=spec, only=only)
    options.source_url = source_url
    return install_discovered(Path(source_url), options, start_dir, only)


def install(spec: str, options: InstallOptions, start_dir=None, client=None) -> InstallReport:
    """Install from any of the three source forms."""
    source = parse_install_source(spec)
    if isinstance(source, GitSource):
        if options.source_tag == "local":
            options.source_tag = "community"
        return install_from_git(source.ref, options, start_dir, spec=source.spec)
    if isinstance(source, LocalPath):
        if not source.path.is_dir():
            raise SkilldexError("E_NOT_A_DIRECTORY", f"not a directory: {spec}")
        return install_discovered(source.path, options, start_dir)
    if client is None:
        raise SkilldexError("E_NO_REGISTRY", "no registry configured")
    return install_by_name(source.name, options, start_dir, client)


def uninstall(name: str, scope: ScopeLevel | str, start_dir=None) -> None:
    cfg = resolve_scope(scope, start_dir)
    manifest = load_manifest(cfg.manifest_path, cfg.level)
    if name not in manifest.skills:
        raise SkilldexError("E_NOT_INSTALLED", f"{name} is not installed at {cfg.level.value} scope")
    target = cfg.root_path / manifest.skills[name].path
    del manifest.skills[name]
    save_manifest(cfg.manifest_path, manifest)
    if target.exists():
        shutil.rmtree(target)


def update(name: str, scope: ScopeLevel | str, start_dir=None) -> InstallReport:
    """Re-fetch ``name`` from its recorded source and reinstall it in place."""
    cfg = resolve_scope(scope, start_dir)
    manifest = load_manifest(cfg.manifest_path, cfg.level)
    entry = manifest.skills.get(name)
    if entry is None:
        raise SkilldexError("E_NOT_INSTALLED", f"{name} is not installed at {cfg.level.value} scope")
    if entry.source == "local" or not entry.source_url:
        raise SkilldexError("E_NO_SOURCE_URL", f"{name} was installed from a local path and has no source URL")
    options = InstallOptions(cfg.level, True, entry.source, None)
    return install_from_registry_url(entry.source_url, options, start_dir, only=name)


def installed_skills(start_dir=None) -> list[tuple[ScopeLevel, InstalledSkill]]:
    """All installed skills across scopes in precedence order."""
    out = []
    for scope in resolve_all_scopes(start_dir):
        manifest = load_manifest(scope.manifest_path, scope.level)
        out.extend((scope.level, s) for s in sorted(manifest.skills.values(), key=lambda s: s.name))
    return out


__all__ = [
    "GitRef", "GitSource", "InstallOptions", "InstallReport", "LocalPath", "PRECEDENCE",
    "RegistryName", "detect_scope_conflicts", "discover_skill_dirs", "install", "install_by_name",
    "install_from_git", "install_from_path", "normalize_remote_url", "parse_git_url",
    "parse_install_source", "uninstall", "update",
]
