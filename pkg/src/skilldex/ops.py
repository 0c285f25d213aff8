"""Core operations returning JSON-ready results.

The CLI's ``--json`` output and the tool server's results are both produced
here, so the two interfaces return identical structures for the same call.
"""

from __future__ import annotations

from pathlib import Path

from skilldex import installer, skillsets, suggest
from skilldex.errors import SkilldexError
from skilldex.installer import InstallOptions
from skilldex.scopes import PRECEDENCE, ScopeLevel, resolve_skill
from skilldex.validator import validate_skill, validate_skillset


def validate(path: str | Path) -> dict:
    return validate_skill(path).to_dict()


def skillset_validate(path: str | Path) -> dict:
    return validate_skillset(path).to_dict()


def _entries(pairs, scope: ScopeLevel | None) -> list[dict]:
    winners: dict[str, ScopeLevel] = {}
    for level, item in pairs:
        winners.setdefault(item.name, level)
    out = []
    for level, item in pairs:
        if scope is not None and level is not scope:
            continue
        entry = {"scope": level.value, **item.to_dict()}
        winner = winners[item.name]
        entry["shadowedBy"] = None if winner is level else winner.value
        out.append(entry)
    order = {lvl: i for i, lvl in enumerate(PRECEDENCE)}
    out.sort(key=lambda e: (order[ScopeLevel(e["scope"])], e["name"]))
    return out


def list_skills(scope: str | None = None, start_dir=None) -> dict:
    level = ScopeLevel.parse(scope) if scope else None
    return {"skills": _entries(installer.installed_skills(start_dir), level)}


def list_skillsets(scope: str | None = None, start_dir=None) -> dict:
    level = ScopeLevel.parse(scope) if scope else None
    return {"skillsets": _entries(skillsets.installed_skillsets(start_dir), level)}


def search(client, query: str | None, tier: str | None = None, limit: int = 20) -> dict:
    return {"results": client.search(query, tier, limit)}


def install(spec: str, scope: str, force: bool = False, start_dir=None, client=None) -> dict:
    options = InstallOptions(ScopeLevel.parse(scope), force)
    return installer.install(spec, options, start_dir, client).to_dict()


def _installed_scope(name: str, scope: str | None, start_dir) -> ScopeLevel:
    if scope:
        return ScopeLevel.parse(scope)
    found = resolve_skill(name, start_dir)
    if found is None:
        raise SkilldexError("E_NOT_INSTALLED", f"{name} is not installed at any scope")
    return found[0]


def uninstall(name: str, scope: str | None = None, start_dir=None) -> dict:
    level = _installed_scope(name, scope, start_dir)
    installer.uninstall(name, level, start_dir)
    return {"uninstalled": name, "scope": level.value}


def update(name: str, scope: str | None = None, start_dir=None) -> dict:
    level = _installed_scope(name, scope, start_dir)
    return installer.update(name, level, start_dir).to_dict()


def _skillset_scope(name: str, scope: str | None, start_dir) -> ScopeLevel:
    if scope:
        return ScopeLevel.parse(scope)
    for level, item in skillsets.installed_skillsets(start_dir):
        if item.name == name:
            return level
    raise SkilldexError("E_NOT_INSTALLED", f"skillset {name} is not installed at any scope")


def skillset_install(spec: str, scope: str, force: bool = False, start_dir=None, client=None) -> dict:
    options = InstallOptions(ScopeLevel.parse(scope), force)
    return skillsets.install_skillset(spec, options, start_dir, client).to_dict()


def skillset_uninstall(name: str, scope: str | None = None, start_dir=None) -> dict:
    return skillsets.uninstall_skillset(name, _skillset_scope(name, scope, start_dir), start_dir)


def skillset_update(name: str, scope: str | None = None, start_dir=None) -> dict:
    return skillsets.update_skillset(name, _skillset_scope(name, scope, start_dir), start_dir).to_dict()


def suggest_proposals(project_root: Path, client, generator=None, start_dir=None) -> list:
    bundle = suggest.gather_context(project_root, start_dir)
    generator = generator or suggest.HeuristicGenerator(client)
    return suggest.generate_proposals(bundle, generator, client)


def suggest_auto(project_root: Path, client, generator=None, start_dir=None) -> dict:
    proposals = suggest_proposals(project_root, client, generator, start_dir)
    result = suggest.run_approval(proposals, "auto_yes")
    return {"proposals": [p.to_dict() for p in proposals], **result.to_dict()}
