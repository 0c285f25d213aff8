"""Three-phase skill suggestion: gather context, propose, human approval.

Suggestion never installs anything. Approved proposals become
``skillpm install`` command lines for the user to run.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import httpx

from skilldex.errors import SkilldexError
from skilldex.installer import installed_skills
from skilldex.registry.search import tokenize
from skilldex.scopes import ScopeLevel

log = logging.getLogger(__name__)

README_LINES = 100
AGENT_CONFIG_DIR = ".claude"
QUERY_TOKENS = 10
CANDIDATE_POOL = 50

STOP_WORDS = frozenset("""
a about all also an and are as at be been but by can do for from has have how if in into is
it its more not of on or our so than that the their then there these this to use was we were
what when which with
""".split())


@dataclass
class ContextBundle:
    readme_excerpt: str = ""
    package_meta: dict = field(default_factory=dict)
    agent_config_listing: list[str] = field(default_factory=list)
    installed_skills: list[tuple[str, str]] = field(default_factory=list)

    def installed_names(self) -> set[str]:
        return {name for name, _ in self.installed_skills}

    def to_context_string(self) -> str:
        meta = self.package_meta
        parts = [
            "## README.md (excerpt)",
            self.readme_excerpt or "(none)",
            "## package.json",
            f"name: {meta.get('name', '')}",
            f"description: {meta.get('description', '')}",
            f"scripts: {', '.join(meta.get('scripts', []))}",
            f"dependencies: {', '.join(meta.get('dependencies', []))}",
            f"## {AGENT_CONFIG_DIR}/",
            "\n".join(self.agent_config_listing) or "(none)",
            "## Installed skills",
            "\n".join(f"{n} ({s})" for n, s in self.installed_skills) or "(none)",
        ]
        return "\n".join(parts)

    def tokens(self) -> Counter:
        meta = self.package_meta
        text = " ".join([
            self.readme_excerpt,
            meta.get("name", ""),
            meta.get("description", ""),
            " ".join(meta.get("scripts", [])),
            " ".join(meta.get("dependencies", [])),
            " ".join(self.agent_config_listing),
        ])
        return Counter(t for t in tokenize(text) if t not in STOP_WORDS)


@dataclass
class SuggestionProposal:
    skill_name: str
    reason: str
    suggested_scope: ScopeLevel = ScopeLevel.PROJECT
    available: bool = False

    def to_dict(self) -> dict:
        return {"skillName": self.skill_name, "reason": self.reason,
                "suggestedScope": self.suggested_scope.value, "available": self.available}

    @classmethod
    def from_dict(cls, d: dict) -> "SuggestionProposal":
        return cls(str(d["skillName"]), str(d.get("reason", "")),
                   ScopeLevel.parse(d.get("suggestedScope", "project")), bool(d.get("available", False)))


@dataclass
class ApprovalResult:
    approved: list[tuple[SuggestionProposal, ScopeLevel]] = field(default_factory=list)
    rejected: list[SuggestionProposal] = field(default_factory=list)
    install_commands: list[str] = field(default_factory=list)
    authoring_candidates: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "approved": [{**p.to_dict(), "finalScope": s.value} for p, s in self.approved],
            "rejected": [p.to_dict() for p in self.rejected],
            "installCommands": list(self.install_commands),
            "authoringCandidates": list(self.authoring_candidates),
        }


# --- phase 1 ---------------------------------------------------------------

def _package_meta(path: Path) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return {}
    if not isinstance(data, dict):
        return {}

    def names(key: str) -> list[str]:
        value = data.get(key)
        return sorted(value) if isinstance(value, dict) else []

    deps = sorted(set(names("dependencies")) | set(names("devDependencies")))
    return {
        "name": str(data.get("name", "")),
        "description": str(data.get("description", "")),
        "scripts": names("scripts"),
        "dependencies": deps,
    }


def gather_context(project_root: str | Path, start_dir=None) -> ContextBundle:
    root = Path(project_root)
    bundle = ContextBundle()
    readme = root / "README.md"
    if readme.is_file():
        lines = readme.read_text(encoding="utf-8", errors="replace").splitlines()
        bundle.readme_excerpt = "\n".join(lines[:README_LINES])
    if (root / "package.json").is_file():
        bundle.package_meta = _package_meta(root / "package.json")
    agent_dir = root / AGENT_CONFIG_DIR
    if agent_dir.is_dir():
        bundle.agent_config_listing = sorted(
            p.relative_to(agent_dir).as_posix() for p in agent_dir.rglob("*") if p.is_file())
    bundle.installed_skills = [(s.name, level.value)
                               for level, s in installed_skills(start_dir or root)]
    return bundle


# --- phase 2 ---------------------------------------------------------------

Generator = Callable[[ContextBundle], list[SuggestionProposal]]


def _shared_reason(shared: set[str], freq: Counter) -> str:
    top = sorted(shared, key=lambda t: (-freq[t], t))[:3]
    return "matched: " + ", ".join(top)


def heuristic_generate(bundle: ContextBundle, client, max_proposals: int = 5) -> list[SuggestionProposal]:
    """Token-overlap matching of the project context against registry records."""
    freq = bundle.tokens()
    if not freq:
        return []
    query = " ".join(t for t, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:QUERY_TOKENS])
    try:
        candidates = client.search(query, limit=CANDIDATE_POOL)
    except SkilldexError as exc:
        log.warning("registry unavailable, no suggestions: %s", exc)
        return []
    installed = bundle.installed_names()
    scored = []
    for record in candidates:
        if record["name"] in installed:
            continue
        words = set(tokenize(record.get("description", "")))
        for tag in record.get("tags") or []:
            words.update(tokenize(tag))
        shared = words & set(freq)
        if shared:
            scored.append((-len(shared), record["name"], shared))
    scored.sort(key=lambda t: t[:2])
    return [SuggestionProposal(name, _shared_reason(shared, freq), ScopeLevel.PROJECT, True)
            for _, name, shared in scored[:max_proposals]]


class HeuristicGenerator:
    def __init__(self, client, max_proposals: int = 5) -> None:
        self.client = client
        self.max_proposals = max_proposals

    def __call__(self, bundle: ContextBundle) -> list[SuggestionProposal]:
        return heuristic_generate(bundle, self.client, self.max_proposals)


class RemoteGenerator:
    """Posts ``{"context": ...}`` to an external endpoint returning proposal objects."""

    def __init__(self, url: str, timeout: float = 60.0, transport: httpx.BaseTransport | None = None) -> None:
        self.url = url
        self.timeout = timeout
        self._transport = transport

    def __call__(self, bundle: ContextBundle) -> list[SuggestionProposal]:
        try:
            with httpx.Client(timeout=self.timeout, transport=self._transport) as http:
                resp = http.post(self.url, json={"context": bundle.to_context_string()})
            resp.raise_for_status()
            data = resp.json()
            if not isinstance(data, list):
                raise ValueError("expected a JSON list of proposals")
            return [SuggestionProposal.from_dict(d) for d in data]
        except (httpx.HTTPError, ValueError, KeyError, TypeError, SkilldexError) as exc:
            raise SkilldexError("E_GENERATOR", f"suggestion generator at {self.url} failed: {exc}") from exc


def _known(client, name: str) -> bool:
    try:
        client.get(name)
        return True
    except SkilldexError:
        return False


def generate_proposals(bundle: ContextBundle, generator: Generator, client) -> list[SuggestionProposal]:
    """Run ``generator`` then drop installed names and recheck registry availability."""
    installed = bundle.installed_names()
    out = []
    for p in generator(bundle):
        if p.skill_name in installed:
            continue
        p.available = _known(client, p.skill_name)
        out.append(p)
    return out


# --- phase 3 ---------------------------------------------------------------

class Prompter(Protocol):
    def ask(self, proposal: SuggestionProposal) -> str: ...


class ScriptedPrompter:
    """Replays canned answers; used by tests and non-tty callers."""

    def __init__(self, answers: list[str]) -> None:
        self.answers = list(answers)
        self.asked: list[str] = []

    def ask(self, proposal: SuggestionProposal) -> str:
        self.asked.append(proposal.skill_name)
        return self.answers.pop(0) if self.answers else ""


def _interpret(answer: str, proposal: SuggestionProposal) -> ScopeLevel | None | bool:
    """Map an answer to a final scope, None for reject, False for unrecognized."""
    a = answer.strip().lower()
    if a in ("", "y", "yes"):
        return proposal.suggested_scope
    if a in ("n", "no"):
        return None
    try:
        return ScopeLevel.parse(a)
    except SkilldexError:
        return False


def run_approval(proposals: list[SuggestionProposal], mode: str = "interactive",
                 prompter: Prompter | None = None) -> ApprovalResult:
    if mode not in ("interactive", "auto_yes"):
        raise ValueError(f"unknown approval mode {mode!r}")
    if mode == "interactive" and prompter is None:
        raise ValueError("interactive approval needs a prompter")
    result = ApprovalResult()
    for proposal in proposals:
        if mode == "auto_yes":
            decision = proposal.suggested_scope
        else:
            decision = False
            for _ in range(3):
                decision = _interpret(prompter.ask(proposal), proposal)
                if decision is not False:
                    break
            if decision is False:
                decision = None
        if decision is None:
            result.rejected.append(proposal)
            continue
        result.approved.append((proposal, decision))
        if proposal.available:
            result.install_commands.append(f"skillpm install {proposal.skill_name} --scope {decision.value}")
        else:
            result.authoring_candidates.append(proposal.skill_name)
    return result


def render_approval(result: ApprovalResult) -> str:
    lines = [f"Approved {len(result.approved)} skill(s)."]
    if result.install_commands:
        lines[0] = f"Approved {len(result.approved)} skill(s). To install, run:"
        lines.extend(f"  {cmd}" for cmd in result.install_commands)
    if result.authoring_candidates:
        lines.append("Not in the registry (authoring candidates):")
        lines.extend(f"  {name}" for name in result.authoring_candidates)
    return "\n".join(lines)
