"""Skillset bundles: discovery, install orchestration, uninstall, update and scaffolding.

Installing a skillset adds no install logic of its own. Member skills go
through :mod:`skilldex.installer`; this module only sequences the steps,
copies the shared ``assets/`` and records the bundle in the manifest.
"""

from __future__ import annotations

import contextlib
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from skilldex import SPEC_VERSION, installer
from skilldex.document import SkillDocument, parse_skill_document
from skilldex.errors import SkilldexError
from skilldex.installer import GitSource, InstallOptions, LocalPath, TIER_TO_SOURCE
from skilldex.manifest import InstalledSkillset, load_manifest, save_manifest, utc_now
from skilldex.scopes import ScopeConfig, ScopeLevel, resolve_all_scopes, resolve_scope
from skilldex.validator import (
    SKILLSET_FILE,
    RemoteSkillRef,
    embedded_skill_dirs,
    remote_refs,
    validate_skillset,
)


@dataclass
class SkillsetDocument:
    document: SkillDocument
    embedded_skill_dirs: list[Path]
    remote_refs: list[RemoteSkillRef]
    assets_dir: Path | None


@dataclass
class SkillsetInstallReport:
    name: str
    score: int
    scope: str
    embedded_skills: list[str] = field(default_factory=list)
    remote_skills: list[str] = field(default_factory=list)
    installed: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "skillset": self.name,
            "score": self.score,
            "scope": self.scope,
            "embeddedSkills": list(self.embedded_skills),
            "remoteSkills": list(self.remote_skills),
            "installed": list(self.installed),
            "warnings": list(self.warnings),
        }


def discover_embedded_skills(skillset_dir: str | Path) -> list[Path]:
    return embedded_skill_dirs(Path(skillset_dir))


def read_skillset(skillset_dir: str | Path) -> SkillsetDocument:
    skillset_dir = Path(skillset_dir)
    path = skillset_dir / SKILLSET_FILE
    if not path.is_file():
        raise SkilldexError("E_NO_SKILLSET_FILE", f"{SKILLSET_FILE} not found in {skillset_dir}")
    doc = parse_skill_document(path.read_text(encoding="utf-8", errors="replace"))
    if not isinstance(doc, SkillDocument):
        raise SkilldexError("E_SKILLSET_VALIDATION", doc.message)
    refs, _ = remote_refs(doc)
    assets = skillset_dir / "assets"
    return SkillsetDocument(doc, discover_embedded_skills(skillset_dir), refs,
                            assets if assets.is_dir() else None)


@contextlib.contextmanager
def scope_transaction(scope: ScopeConfig) -> Iterator[None]:
    """Restore the scope root byte-for-byte if the body raises."""
    root = scope.root_path
    tmp = Path(tempfile.mkdtemp(prefix="skilldex-rollback-"))
    existed = root.exists()
    try:
        if existed:
            shutil.copytree(root, tmp / "root", symlinks=True)
        try:
            yield
        except BaseException:
            shutil.rmtree(root, ignore_errors=True)
            if existed:
                shutil.copytree(tmp / "root", root, symlinks=True)
            raise
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def _git_spec(url: str) -> str:
    return url if url.startswith("git+") else "git+" + url


def install_skillset_from_path(skillset_dir: str | Path, options: InstallOptions,
                               start_dir=None) -> SkillsetInstallReport:
    skillset_dir = Path(skillset_dir).expanduser()
    result = validate_skillset(skillset_dir)
    if result.error_count > 0:
        errors = "; ".join(d.message for d in result.diagnostics if d.severity == "error")
        raise SkilldexError("E_SKILLSET_VALIDATION",
                            f"skillset {result.subject} failed validation ({result.score}/100): {errors}")
    name = result.subject
    if not installer.SAFE_NAME.match(name):
        raise SkilldexError("E_SKILLSET_VALIDATION", f"skillset name {name!r} is not a valid directory name")

    scope = resolve_scope(options.scope, start_dir)
    manifest = load_manifest(scope.manifest_path, scope.level)
    if name in manifest.skillsets and not options.force:
        raise SkilldexError("E_ALREADY_INSTALLED",
                            f"skillset {name} is already installed at {scope.level.value} scope (use --force to replace)")

    bundle = read_skillset(skillset_dir)
    report = SkillsetInstallReport(name, result.score, scope.level.value)
    report.warnings.extend(installer.diagnostic_warnings(result))

    with scope_transaction(scope):
        member_opts = InstallOptions(scope.level, options.force, options.source_tag, None)
        for skill_dir in bundle.embedded_skill_dirs:
            sub = installer.install_from_path(skill_dir, member_opts, start_dir)
            report.installed.extend(sub.installed)
            report.warnings.extend(sub.warnings)
            report.embedded_skills.extend(i["name"] for i in sub.installed)

        for ref in bundle.remote_refs:
            spec = _git_spec(ref.source_url)
            remote_opts = InstallOptions(scope.level, options.force, "community", spec)
            sub = installer.install_from_git(installer.parse_git_url(spec), remote_opts, start_dir,
                                             spec=spec, only=ref.name)
            if sub.errors:
                first = sub.errors[0]
                raise SkilldexError(first["code"], first["message"])
            report.installed.extend(sub.installed)
            report.warnings.extend(sub.warnings)
            report.remote_skills.extend(i["name"] for i in sub.installed
                                        if i["name"] not in report.embedded_skills)

        dest = scope.skillsets_dir / name
        staging = Path(tempfile.mkdtemp(prefix="skilldex-skillset-"))
        try:
            tree = staging / name
            tree.mkdir()
            shutil.copy2(skillset_dir / SKILLSET_FILE, tree / SKILLSET_FILE)
            if bundle.assets_dir is not None:
                shutil.copytree(bundle.assets_dir, tree / "assets", symlinks=True)
            installer.copy_tree_atomic(tree, dest)
        finally:
            shutil.rmtree(staging, ignore_errors=True)

        manifest = load_manifest(scope.manifest_path, scope.level)
        manifest.skillsets[name] = InstalledSkillset(
            name=name,
            version=bundle.document.scalar("version") or "0.0.0",
            source=options.source_tag,
            source_url=options.source_url,
            installed_at=utc_now(),
            spec_version=result.spec_version,
            score=result.score,
            path=f"skillsets/{name}",
            embedded_skills=report.embedded_skills,
            remote_skills=report.remote_skills,
        )
        save_manifest(scope.manifest_path, manifest)
    return report


def _install_skillset_from_url(source_url: str, options: InstallOptions, start_dir) -> SkillsetInstallReport:
    spec = installer.registry_url_to_spec(source_url)
    if spec is None:
        options.source_url = source_url
        return install_skillset_from_path(Path(source_url), options, start_dir)
    options.source_url = spec
    with installer.cloned(installer.parse_git_url(spec)) as root:
        return install_skillset_from_path(root, options, start_dir)


def install_skillset(source_spec: str, options: InstallOptions, start_dir=None,
                     client=None) -> SkillsetInstallReport:
    """Install a skillset from a local path, ``git+https://`` URL or registry name."""
    source = installer.parse_install_source(source_spec)
    if isinstance(source, LocalPath):
        return install_skillset_from_path(source.path, options, start_dir)
    if isinstance(source, GitSource):
        if options.source_tag == "local":
            options.source_tag = "community"
        options.source_url = source.spec
        with installer.cloned(source.ref) as root:
            return install_skillset_from_path(root, options, start_dir)
    if client is None:
        raise SkilldexError("E_NO_REGISTRY", "no registry configured")
    try:
        info = client.skillset_install_info(source.name)
    except SkilldexError as exc:
        if getattr(exc, "status", None) == 404:
            raise SkilldexError("E_NOT_IN_REGISTRY", f"skillset {source.name!r} not found in registry") from exc
        raise
    tagged = InstallOptions(options.scope, options.force,
                            TIER_TO_SOURCE.get(info["record"].get("trust_tier"), "community"), None)
    return _install_skillset_from_url(info["source_url"], tagged, start_dir)


def uninstall_skillset(name: str, scope: ScopeLevel | str, start_dir=None) -> dict:
    """Remove a skillset and every skill it installed; returns removed names and warnings."""
    cfg = resolve_scope(scope, start_dir)
    manifest = load_manifest(cfg.manifest_path, cfg.level)
    entry = manifest.skillsets.get(name)
    if entry is None:
        raise SkilldexError("E_NOT_INSTALLED", f"skillset {name} is not installed at {cfg.level.value} scope")
    removed, warnings, doomed = [], [], []
    for skill in entry.embedded_skills + entry.remote_skills:
        installed = manifest.skills.pop(skill, None)
        if installed is None:
            warnings.append(f"{skill} was already removed from {cfg.level.value} scope")
            continue
        removed.append(skill)
        doomed.append(cfg.root_path / installed.path)
    del manifest.skillsets[name]
    doomed.append(cfg.root_path / entry.path)
    save_manifest(cfg.manifest_path, manifest)
    for path in doomed:
        shutil.rmtree(path, ignore_errors=True)
    return {"skillset": name, "scope": cfg.level.value, "removedSkills": removed, "warnings": warnings}


def update_skillset(name: str, scope: ScopeLevel | str, start_dir=None) -> SkillsetInstallReport:
    cfg = resolve_scope(scope, start_dir)
    manifest = load_manifest(cfg.manifest_path, cfg.level)
    entry = manifest.skillsets.get(name)
    if entry is None:
        raise SkilldexError("E_NOT_INSTALLED", f"skillset {name} is not installed at {cfg.level.value} scope")
    if entry.source == "local" or not entry.source_url:
        raise SkilldexError("E_NO_SOURCE_URL", f"skillset {name} was installed from a local path")
    with scope_transaction(cfg):
        uninstall_skillset(name, cfg.level, start_dir)
        options = InstallOptions(cfg.level, True, entry.source, None)
        return _install_skillset_from_url(entry.source_url, options, start_dir)


def installed_skillsets(start_dir=None) -> list[tuple[ScopeLevel, InstalledSkillset]]:
    out = []
    for scope in resolve_all_scopes(start_dir):
        manifest = load_manifest(scope.manifest_path, scope.level)
        out.extend((scope.level, s) for s in sorted(manifest.skillsets.values(), key=lambda s: s.name))
    return out


_SKILLSET_TEMPLATE = """\
---
name: {name}
description: "A bundle of related skills that share common assets. Describe
  here which workflows the bundled skills cover, which conventions they share
  through the assets directory, and when an agent should reach for this skillset
  instead of an individual skill."
version: "0.1.0"
tags: [{name}]
spec_version: "{spec}"
---
# {name}

Embedded skills live in subdirectories containing a SKILL.md. Files in
`assets/` are shared by every skill in this set.
"""

_SKILL_TEMPLATE = """\
---
name: example-skill
description: "An example skill scaffolded inside the {name} skillset. Replace this
  text with a specific description of what the skill does, which inputs it expects,
  and the situations in which an agent should invoke it during a task."
version: "0.1.0"
tags: [example]
spec_version: "{spec}"
---
## Instructions

Describe the steps the agent should follow. Shared conventions belong in the
skillset's `assets/` directory.
"""


def init_skillset(name: str, target_dir: str | Path) -> Path:
    """Scaffold ``<target_dir>/<name>`` with SKILLSET.md, assets/ and example-skill/."""
    if not installer.SAFE_NAME.match(name):
        raise SkilldexError("E_BAD_NAME", f"invalid skillset name: {name!r}")
    root = Path(target_dir) / name
    if root.exists():
        raise SkilldexError("E_EXISTS", f"{root} already exists")
    (root / "assets").mkdir(parents=True)
    (root / "example-skill").mkdir()
    (root / SKILLSET_FILE).write_text(_SKILLSET_TEMPLATE.format(name=name, spec=SPEC_VERSION), encoding="utf-8")
    (root / "example-skill" / "SKILL.md").write_text(_SKILL_TEMPLATE.format(name=name, spec=SPEC_VERSION),
                                                     encoding="utf-8")
    return root
