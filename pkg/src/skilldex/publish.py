"""Client-side publish: name from frontmatter, source URL from ``git remote``."""

from __future__ import annotations

import subprocess
from pathlib import Path

from skilldex.document import SkillDocument, parse_skill_document
from skilldex.errors import SkilldexError
from skilldex.installer import normalize_remote_url
from skilldex.validator import SKILL_FILE, SKILLSET_FILE


def _git(directory: Path, *args: str) -> str | None:
    try:
        proc = subprocess.run(["git", "-C", str(directory), *args], capture_output=True, text=True)
    except OSError:
        return None
    return proc.stdout.strip() if proc.returncode == 0 else None


def read_name(directory: Path, filename: str) -> str:
    path = directory / filename
    if not path.is_file():
        raise SkilldexError("E_UNIDENTIFIABLE_SKILL", f"{filename} not found in {directory}")
    doc = parse_skill_document(path.read_text(encoding="utf-8", errors="replace"))
    name = doc.scalar("name") if isinstance(doc, SkillDocument) else None
    if not name:
        raise SkilldexError("E_UNIDENTIFIABLE_SKILL", f"{filename} in {directory} has no readable name")
    return name


def detect_source_url(directory: Path) -> str:
    """https URL of the ``origin`` remote, extended with ``/tree/<branch>/<subdir>`` below the repo root."""
    # raw config value: `remote get-url` would apply url.insteadOf rewrites
    remote = _git(directory, "config", "--get", "remote.origin.url")
    if not remote:
        raise SkilldexError("E_NO_REMOTE", f"{directory} has no 'origin' git remote")
    url = normalize_remote_url(remote)
    top = _git(directory, "rev-parse", "--show-toplevel")
    if top:
        rel = directory.resolve().relative_to(Path(top).resolve()).as_posix()
        if rel != ".":
            branch = _git(directory, "rev-parse", "--abbrev-ref", "HEAD") or "main"
            url = f"{url}/tree/{branch}/{rel}"
    return url


def build_submission(directory: str | Path, tags: list[str] | None, kind: str = "skill") -> dict:
    directory = Path(directory)
    name = read_name(directory, SKILL_FILE if kind == "skill" else SKILLSET_FILE)
    return {"name": name, "source_url": detect_source_url(directory), "tags": list(tags or [])}


def publish_flow(directory: str | Path, tags: list[str] | None, client, kind: str = "skill") -> dict:
    if not client.config.auth_token:
        raise SkilldexError("E_NO_TOKEN", "SKILLDEX_TOKEN is not set; export SKILLDEX_TOKEN=<token> to publish")
    sub = build_submission(directory, tags, kind)
    if kind == "skill":
        return client.publish(sub["name"], sub["source_url"], sub["tags"])
    return client.publish_skillset(sub["name"], sub["source_url"], sub["tags"])
