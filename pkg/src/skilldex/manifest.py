"""Per-scope ``skilldex.json`` manifest: schema, loading and atomic saving."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from skilldex import SKILLDEX_VERSION
from skilldex.errors import SkilldexError
from skilldex.scopes import ScopeLevel

log = logging.getLogger(__name__)

SOURCES = ("official", "community", "local")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


@dataclass
class InstalledSkill:
    name: str
    version: str
    source: str
    installed_at: str
    spec_version: str
    score: int
    path: str
    source_url: str | None = None

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "version": self.version,
            "source": self.source,
            "installedAt": self.installed_at,
            "specVersion": self.spec_version,
            "score": self.score,
            "path": self.path,
        }
        if self.source_url is not None:
            d["sourceUrl"] = self.source_url
        return d


@dataclass
class InstalledSkillset(InstalledSkill):
    embedded_skills: list[str] = field(default_factory=list)
    remote_skills: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["embeddedSkills"] = list(self.embedded_skills)
        d["remoteSkills"] = list(self.remote_skills)
        return d


@dataclass
class Manifest:
    scope: ScopeLevel
    skills: dict[str, InstalledSkill] = field(default_factory=dict)
    skillsets: dict[str, InstalledSkillset] = field(default_factory=dict)
    skilldex_version: str = SKILLDEX_VERSION
    updated_at: str = field(default_factory=utc_now)

    def to_dict(self) -> dict:
        return {
            "skilldexVersion": self.skilldex_version,
            "scope": self.scope.value,
            "skills": {k: v.to_dict() for k, v in self.skills.items()},
            "skillsets": {k: v.to_dict() for k, v in self.skillsets.items()},
            "updatedAt": self.updated_at,
        }


class _SchemaError(Exception):
    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


def _req(obj: dict, key: str, kind: type, where: str):
    if key not in obj:
        raise _SchemaError(f"{where}.{key}", "required")
    value = obj[key]
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise _SchemaError(f"{where}.{key}", f"expected {kind.__name__}")
    return value


def _str_list(obj: dict, key: str, where: str) -> list[str]:
    value = _req(obj, key, list, where)
    for i, item in enumerate(value):
        if not isinstance(item, str):
            raise _SchemaError(f"{where}.{key}[{i}]", "expected str")
    return list(value)


def _entry(obj, where: str, prefix: str) -> dict:
    if not isinstance(obj, dict):
        raise _SchemaError(where, "expected object")
    kwargs = dict(
        name=_req(obj, "name", str, where),
        version=_req(obj, "version", str, where),
        source=_req(obj, "source", str, where),
        installed_at=_req(obj, "installedAt", str, where),
        spec_version=_req(obj, "specVersion", str, where),
        score=_req(obj, "score", int, where),
        path=_req(obj, "path", str, where),
    )
    if kwargs["source"] not in SOURCES:
        raise _SchemaError(f"{where}.source", f"must be one of {', '.join(SOURCES)}")
    if not 0 <= kwargs["score"] <= 100:
        raise _SchemaError(f"{where}.score", "must be between 0 and 100")
    if not kwargs["path"].startswith(prefix):
        raise _SchemaError(f"{where}.path", f"must begin with {prefix!r}")
    if "sourceUrl" in obj and obj["sourceUrl"] is not None:
        kwargs["source_url"] = _req(obj, "sourceUrl", str, where)
    return kwargs


def manifest_from_dict(data) -> Manifest:
    """Validate and build a :class:`Manifest`; raises ``E_MANIFEST_CORRUPT``."""
    try:
        if not isinstance(data, dict):
            raise _SchemaError("$", "expected object")
        scope = _req(data, "scope", str, "$")
        if scope not in {s.value for s in ScopeLevel}:
            raise _SchemaError("$.scope", "must be one of global, shared, project")
        skills_raw = _req(data, "skills", dict, "$")
        skills = {}
        for key, value in skills_raw.items():
            skills[key] = InstalledSkill(**_entry(value, f"$.skills.{key}", "skills/"))
        skillsets = {}
        raw_sets = data.get("skillsets", {})
        if not isinstance(raw_sets, dict):
            raise _SchemaError("$.skillsets", "expected object")
        for key, value in raw_sets.items():
            where = f"$.skillsets.{key}"
            kwargs = _entry(value, where, "skillsets/")
            embedded = _str_list(value, "embeddedSkills", where)
            remote = _str_list(value, "remoteSkills", where)
            if set(embedded) & set(remote):
                raise _SchemaError(where, "embeddedSkills and remoteSkills overlap")
            skillsets[key] = InstalledSkillset(**kwargs, embedded_skills=embedded, remote_skills=remote)
        manifest = Manifest(
            scope=ScopeLevel(scope),
            skills=skills,
            skillsets=skillsets,
            skilldex_version=_req(data, "skilldexVersion", str, "$"),
            updated_at=_req(data, "updatedAt", str, "$"),
        )
    except _SchemaError as exc:
        raise SkilldexError("E_MANIFEST_CORRUPT", f"invalid manifest at {exc}") from exc

    for name, ss in manifest.skillsets.items():
        missing = [s for s in ss.embedded_skills + ss.remote_skills if s not in manifest.skills]
        if missing:
            log.warning("skillset %s lists skills missing from manifest: %s", name, ", ".join(missing))
    return manifest


def _infer_scope(path: Path) -> ScopeLevel:
    parent = path.parent.name
    if parent in (ScopeLevel.GLOBAL.value, ScopeLevel.SHARED.value):
        return ScopeLevel(parent)
    return ScopeLevel.PROJECT


def load_manifest(manifest_path: str | Path, scope: ScopeLevel | None = None) -> Manifest:
    """Load a manifest; a missing file yields a fresh, unsaved empty manifest."""
    path = Path(manifest_path)
    if not path.exists():
        return Manifest(scope=scope or _infer_scope(path))
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise SkilldexError("E_MANIFEST_CORRUPT", f"invalid manifest at $: {path} is not valid JSON ({exc})") from exc
    return manifest_from_dict(data)


def serialize_manifest(manifest: Manifest) -> str:
    return json.dumps(manifest.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_manifest(manifest_path: str | Path, manifest: Manifest,
                  fault_hook: Callable[[str], None] | None = None) -> None:
    """Write ``manifest`` via a sibling temp file and rename.

    ``fault_hook`` is called with a stage name (``"partial"``, ``"written"``,
    ``"renamed"``) so tests can inject crashes between steps.
    """
    path = Path(manifest_path)
    manifest.updated_at = utc_now()
    payload = serialize_manifest(manifest).encode("utf-8")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f"{path.name}.tmp.")
    except OSError as exc:
        raise SkilldexError("E_IO", f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            half = len(payload) // 2
            fh.write(payload[:half])
            if fault_hook:
                fault_hook("partial")
            fh.write(payload[half:])
            fh.flush()
            os.fsync(fh.fileno())
        if fault_hook:
            fault_hook("written")
        os.replace(tmp, path)
        if fault_hook:
            fault_hook("renamed")
    except OSError as exc:
        raise SkilldexError("E_IO", f"cannot write {path}: {exc}") from exc
    finally:
        if os.path.exists(tmp):
            try:
                os.remove(tmp)
            except OSError:
                pass
