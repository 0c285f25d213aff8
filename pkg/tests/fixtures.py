"""Builders for on-disk skill, skillset and git fixtures used across the suite."""

from __future__ import annotations

import shutil
import subprocess
from pathlib import Path

LISTING_SKILL = """---
name: forensics-memory-analysis
description: "Guides Claude through systematic memory dump
  analysis using Volatility3 and similar tools. Covers
  process enumeration, network connections, and artifact
  extraction for incident response."
version: "1.0.0"
tags: [forensics, memory, volatility, incident-response]
author: "skilly"
spec_version: "1.0"
---
## Instructions
...
"""

# counted by hand, one word per whitespace-separated token of the quoted text
LISTING_DESCRIPTION_WORDS = 23

DEVELOPER_SKILLSET = """---
name: developer
description: "Skills for everyday developer workflows.
  Covers commit message writing using the Conventional
  Commits spec, PR description generation, changelog
  production from git history, and test writing that
  matches a project's existing patterns."
version: "1.0.0"
tags: [developer, git, testing, workflow, productivity]
author: "skilldex-examples"
spec_version: "1.0"
---
# developer

Everyday developer workflow skills sharing one commit vocabulary.
"""

DEVELOPER_DESCRIPTION_WORDS = 31

LONG_DESCRIPTION = ("Walks the agent through a repeatable procedure with explicit checkpoints so that "
                    "every run produces output in the same structure and vocabulary, and explains when "
                    "this skill applies and when a different one is more appropriate for the task.")


def write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def skill_md(name: str | None, description: str | None = LONG_DESCRIPTION, body: str = "## Steps\n\n1. Do it.\n",
             extra: str = "") -> str:
    lines = ["---"]
    if name is not None:
        lines.append(f"name: {name}")
    if description is not None:
        lines.append(f'description: "{description}"')
    lines.append('version: "1.0.0"')
    if extra:
        lines.append(extra.rstrip("\n"))
    lines.append("---")
    return "\n".join(lines) + "\n" + body


def make_skill(root: Path, name: str, description: str = LONG_DESCRIPTION, body: str = "## Steps\n\n1. Do it.\n",
               files: dict[str, str] | None = None, dirname: str | None = None) -> Path:
    d = root / (dirname or name)
    write(d / "SKILL.md", skill_md(name, description, body))
    for rel, text in (files or {}).items():
        write(d / rel, text)
    return d


def make_listing_skill(root: Path) -> Path:
    d = root / "forensics-memory-analysis"
    write(d / "SKILL.md", LISTING_SKILL)
    return d


def make_diagnostics_listing_fixture(root: Path) -> Path:
    """12-word description on line 4, an unknown helpers/ dir, everything else passing."""
    d = root / "triage"
    text = ("---\n"
            "name: triage\n"
            'version: "1.0.0"\n'
            'description: "Triage suspicious log files and summarize the findings for the whole team."\n'
            "---\n"
            "## Steps\n\n"
            "Run [the parser](scripts/parse.sh) and read [notes](references/notes.md).\n")
    write(d / "SKILL.md", text)
    write(d / "scripts" / "parse.sh", "#!/bin/sh\necho parse\n")
    write(d / "references" / "notes.md", "# notes\n")
    write(d / "helpers" / "util.txt", "helper\n")
    return d


def make_developer_skillset(root: Path) -> Path:
    """The four-skill developer skillset with its shared commit-conventions asset."""
    d = root / "developer"
    write(d / "SKILLSET.md", DEVELOPER_SKILLSET)
    write(d / "assets" / "commit-conventions.md",
          "# Commit conventions\n\n| type | changelog section |\n|---|---|\n| feat | Added |\n| fix | Fixed |\n")
    make_skill(d, "conventional-commit",
               body="## Steps\n\nUse the types in [conventions](../assets/commit-conventions.md).\n")
    make_skill(d, "changelog-gen",
               body=("## Steps\n\nMap types with [conventions](../assets/commit-conventions.md), run "
                     "[the parser](scripts/parse-git-log.sh) and fill [template](assets/changelog-template.md).\n"),
               files={"scripts/parse-git-log.sh": "#!/bin/sh\ngit log --oneline\n",
                      "assets/changelog-template.md": "## [Unreleased]\n"})
    make_skill(d, "pr-description", body="## Steps\n\nFill in [the template](assets/pr-template.md).\n",
               files={"assets/pr-template.md": "## Summary\n"})
    make_skill(d, "test-writer",
               body=("## Steps\n\nRead [patterns](references/testing-patterns.md) after running "
                     "[detection](scripts/detect-framework.sh).\n"),
               files={"references/testing-patterns.md": "# patterns\n",
                      "scripts/detect-framework.sh": "#!/bin/sh\necho pytest\n"})
    return d


def tree_bytes(root: Path) -> dict[str, bytes]:
    """Relative path -> content for every file below ``root``."""
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


# --- git ---------------------------------------------------------------------

def git(cwd: Path, *args: str) -> str:
    proc = subprocess.run(["git", "-C", str(cwd), *args], capture_output=True, text=True, check=True,
                          env={"GIT_AUTHOR_NAME": "t", "GIT_AUTHOR_EMAIL": "t@example.com",
                               "GIT_COMMITTER_NAME": "t", "GIT_COMMITTER_EMAIL": "t@example.com",
                               "HOME": str(cwd), "PATH": "/usr/bin:/bin:/usr/local/bin"})
    return proc.stdout.strip()


class GitHost:
    """Local bare repositories served as ``https://github.com/<owner>/<repo>`` via url.insteadOf."""

    def __init__(self, root: Path) -> None:
        self.root = root
        self.work = root.parent / (root.name + "-work")

    def env(self) -> dict[str, str]:
        return {"GIT_CONFIG_COUNT": "1",
                "GIT_CONFIG_KEY_0": f"url.file://{self.root}/.insteadOf",
                "GIT_CONFIG_VALUE_0": "https://github.com/"}

    def publish(self, slug: str, source: Path, branch: str = "main") -> str:
        """Commit a copy of ``source`` as the whole content of ``slug`` and push it."""
        work = self.work / slug
        if not (work / ".git").exists():
            work.mkdir(parents=True)
            git(work, "init", "-q", "-b", branch)
            bare = self.root / slug
            bare.mkdir(parents=True)
            git(bare, "init", "-q", "--bare", "-b", branch)
            git(work, "remote", "add", "origin", str(bare))
        for child in work.iterdir():
            if child.name != ".git":
                shutil.rmtree(child) if child.is_dir() else child.unlink()
        shutil.copytree(source, work, dirs_exist_ok=True)
        git(work, "add", "-A")
        git(work, "commit", "-q", "--allow-empty", "-m", "update")
        git(work, "push", "-q", "origin", f"HEAD:{branch}")
        return f"https://github.com/{slug}"
