"""Scope levels, project-root discovery and local-first name resolution."""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from skilldex.errors import SkilldexError

MANIFEST_NAME = "skilldex.json"


class ScopeLevel(str, Enum):
    PROJECT = "project"
    SHARED = "shared"
    GLOBAL = "global"

    @property
    def rank(self) -> int:
        return PRECEDENCE.index(self)

    @classmethod
    def parse(cls, value: "str | ScopeLevel") -> "ScopeLevel":
        if isinstance(value, ScopeLevel):
            return value
        v = value.strip().lower()
        for level in cls:
            if v in (level.value, level.value[0]):
                return level
        raise SkilldexError("E_BAD_SCOPE", f"unknown scope {value!r} (expected global, shared or project)")


PRECEDENCE = (ScopeLevel.PROJECT, ScopeLevel.SHARED, ScopeLevel.GLOBAL)


@dataclass(frozen=True)
class ScopeConfig:
    level: ScopeLevel
    root_path: Path

    @property
    def manifest_path(self) -> Path:
        return self.root_path / MANIFEST_NAME

    @property
    def skills_dir(self) -> Path:
        return self.root_path / "skills"

    @property
    def skillsets_dir(self) -> Path:
        return self.root_path / "skillsets"


def skilldex_home() -> Path:
    """The ``<home>/.skilldex`` directory, or ``$SKILLDEX_HOME`` when set."""
    override = os.environ.get("SKILLDEX_HOME")
    if override:
        return Path(override)
    try:
        home = Path.home()
    except RuntimeError as exc:
        raise SkilldexError("E_NO_HOME", "cannot determine home directory; set SKILLDEX_HOME") from exc
    if not str(home) or str(home) == "~":
        raise SkilldexError("E_NO_HOME", "cannot determine home directory; set SKILLDEX_HOME")
    return home / ".skilldex"


def find_project_root(start_dir: str | Path) -> Path:
    start = Path(start_dir).absolute()
    if not start.is_dir():
        raise SkilldexError("E_NOT_A_DIRECTORY", f"not a directory: {start}")
    for candidate in (start, *start.parents):
        # .git is a file inside worktrees
        if (candidate / ".git").exists() or (candidate / "package.json").is_file():
            return candidate
    return start


def resolve_scope(level: ScopeLevel | str, start_dir: str | Path | None = None) -> ScopeConfig:
    level = ScopeLevel.parse(level)
    if level is ScopeLevel.PROJECT:
        root = find_project_root(start_dir or Path.cwd()) / ".skilldex"
    else:
        root = skilldex_home() / level.value
    return ScopeConfig(level, root)


def resolve_all_scopes(start_dir: str | Path | None = None) -> list[ScopeConfig]:
    return [resolve_scope(level, start_dir) for level in PRECEDENCE]


def resolve_skill(name: str, start_dir: str | Path | None = None):
    """Return ``(level, InstalledSkill)`` for the winning installation of ``name``, or None."""
    from skilldex.manifest import load_manifest

    for scope in resolve_all_scopes(start_dir):
        manifest = load_manifest(scope.manifest_path, scope.level)
        if name in manifest.skills:
            return scope.level, manifest.skills[name]
    return None
