"""Registry operations over a single-file JSON document store.

Records hold metadata only. Skill content is fetched from ``source_url``
for validation and then discarded.
"""

from __future__ import annotations

import contextlib
import json
import logging
import os
import subprocess
import tempfile
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from skilldex import SPEC_VERSION, installer
from skilldex.document import SkillDocument, parse_skill_document
from skilldex.errors import SkilldexError
from skilldex.registry.search import TRIGRAM_THRESHOLD, fts_rank, trigram_similarity
from skilldex.validator import (
    SKILL_FILE,
    SKILLSET_FILE,
    ValidationResult,
    remote_refs,
    validate_skill,
    validate_skillset,
)

log = logging.getLogger(__name__)

TIERS = ("verified", "community")
KINDS = ("skills", "skillsets")
SPEC_VERSIONS = [SPEC_VERSION]


class RegistryError(Exception):
    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message

    def to_body(self) -> dict:
        return {"error": {"code": self.code, "message": self.message}}


def _not_found(kind: str, name: str) -> RegistryError:
    return RegistryError(404, "not_found", f"{kind[:-1]} {name!r} not found")


@dataclass(frozen=True)
class SeedSource:
    source_url: str
    subpath: str | None = None
    kind: str = "skill"

    @classmethod
    def from_dict(cls, d: dict) -> "SeedSource":
        kind = d.get("kind", "skill")
        if kind not in ("skill", "skillset"):
            raise ValueError(f"seed kind must be skill or skillset, got {kind!r}")
        return cls(d["source_url"], d.get("subpath"), kind)


class Store:
    """In-memory documents persisted to one JSON file after every mutation."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.data = {"publishers": {}, "skills": {}, "skillsets": {}}
        if self.path.exists():
            loaded = json.loads(self.path.read_text(encoding="utf-8"))
            for key in self.data:
                self.data[key] = loaded.get(key, {})

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(self.data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=f"{self.path.name}.tmp.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
        finally:
            if os.path.exists(tmp):
                os.remove(tmp)


def _check_record(record: dict) -> None:
    if record["trust_tier"] not in TIERS:
        raise RegistryError(422, "unprocessable", f"trust_tier must be one of {TIERS}")
    score = record.get("score")
    if score is not None and not 0 <= score <= 100:
        raise RegistryError(422, "unprocessable", "score must be between 0 and 100")
    for key in ("name", "source_url", "spec_version"):
        if not record.get(key):
            raise RegistryError(422, "unprocessable", f"{key} is required")
    if record.get("description") is None:
        raise RegistryError(422, "unprocessable", "description is required")


def public_record(kind: str, record: dict) -> dict:
    out = dict(record)
    if kind == "skillsets":
        out["skill_count"] = len(record.get("skill_refs", []))
    return out


def _current_branch(path: Path) -> str | None:
    proc = subprocess.run(["git", "-C", str(path), "rev-parse", "--abbrev-ref", "HEAD"],
                          capture_output=True, text=True)
    branch = proc.stdout.strip()
    return branch if proc.returncode == 0 and branch and branch != "HEAD" else None


@dataclass
class SourceTree:
    directory: Path
    checkout: Path | None = None
    repo_url: str | None = None
    branch: str | None = None

    def url_for(self, path: Path) -> str:
        """Canonical source URL of ``path`` inside this tree."""
        if self.checkout is None:
            return str(path)
        rel = path.relative_to(self.checkout).as_posix()
        if rel == "." or not self.branch:
            return self.repo_url
        return f"{self.repo_url}/tree/{self.branch}/{rel}"


@dataclass
class Fetched:
    directory: Path
    source_url: str
    document: SkillDocument
    result: ValidationResult


class Registry:
    """Registry operations. Methods raise :class:`RegistryError` carrying an HTTP status."""

    def __init__(self, store_path: str | Path, tokens: dict[str, dict] | None = None,
                 test_mode: bool = False) -> None:
        self.store = Store(store_path)
        self.test_mode = test_mode
        self.tokens: dict[str, dict] = {}
        self._lock = threading.RLock()
        for token, info in (tokens or {}).items():
            self.add_token(token, info["github_handle"], bool(info.get("verified")), bool(info.get("admin")))

    # --- auth ---------------------------------------------------------------

    def add_token(self, token: str, github_handle: str, verified: bool = False, admin: bool = False) -> dict:
        with self._lock:
            publishers = self.store.data["publishers"]
            publisher = next((p for p in publishers.values() if p["github_handle"] == github_handle), None)
            if publisher is None:
                publisher = {"id": str(uuid.uuid4()), "github_handle": github_handle, "verified": verified}
                publishers[publisher["id"]] = publisher
                self.store.save()
            elif publisher["verified"] != verified:
                publisher["verified"] = verified
                self.store.save()
            self.tokens[token] = {"publisher_id": publisher["id"], "admin": admin}
            return dict(publisher)

    def _authenticate(self, token: str | None) -> tuple[dict, bool]:
        entry = self.tokens.get(token or "")
        if entry is None:
            raise RegistryError(401, "unauthorized", "missing or invalid bearer token")
        return self.store.data["publishers"][entry["publisher_id"]], entry["admin"]

    def auth_me(self, token: str | None) -> dict:
        publisher, _ = self._authenticate(token)
        return dict(publisher)

    def spec_versions(self) -> list[str]:
        return list(SPEC_VERSIONS)

    def spec_versions_current(self) -> str:
        return SPEC_VERSIONS[-1]

    # --- reads --------------------------------------------------------------

    def search(self, kind: str, query: str | None = None, tier: str | None = None,
               limit: int = 20, tags: list[str] | None = None) -> list[dict]:
        if limit <= 0:
            raise RegistryError(400, "bad_request", "limit must be a positive integer")
        if tier is not None and tier not in TIERS:
            raise RegistryError(400, "bad_request", f"tier must be one of {TIERS}")
        with self._lock:
            records = [dict(r) for r in self.store.data[kind].values()]
        if tier:
            records = [r for r in records if r["trust_tier"] == tier]
        if tags:
            records = [r for r in records if set(tags) <= set(r.get("tags") or [])]
        query = (query or "").strip()
        if not query:
            records.sort(key=lambda r: (-r["install_count"], r["name"]))
        else:
            scored = []
            for r in records:
                rank = fts_rank(query, r["name"], r["description"])
                sim = trigram_similarity(query, r["name"])
                if rank > 0 or sim >= TRIGRAM_THRESHOLD:
                    scored.append((-rank, -sim, -r["install_count"], r["name"], r))
            scored.sort(key=lambda t: t[:4])
            records = [t[4] for t in scored]
        return [public_record(kind, r) for r in records[:limit]]

    def get(self, kind: str, name: str) -> dict:
        with self._lock:
            record = self.store.data[kind].get(name)
            if record is None:
                raise _not_found(kind, name)
            return public_record(kind, record)

    def install_info(self, kind: str, name: str) -> dict:
        with self._lock:
            record = self.store.data[kind].get(name)
            if record is None:
                raise _not_found(kind, name)
            record["install_count"] += 1
            self.store.save()
            return {"record": public_record(kind, record), "source_url": record["source_url"],
                    "install_count": record["install_count"]}

    # --- fetching -----------------------------------------------------------

    @contextlib.contextmanager
    def _fetch_tree(self, source_url: str, subpath: str | None = None) -> Iterator["SourceTree"]:
        """Materialize a GitHub URL (or, in test mode, a local path) as a directory."""
        spec = installer.registry_url_to_spec(source_url)
        if spec is None:
            if not self.test_mode:
                raise RegistryError(422, "unprocessable", f"source_url must be an https URL: {source_url}")
            directory = Path(source_url) / (subpath or "")
            if not directory.is_dir():
                raise RegistryError(422, "unprocessable", f"source path not found: {directory}")
            yield SourceTree(directory)
            return
        try:
            ref = installer.parse_git_url(spec)
        except SkilldexError as exc:
            raise RegistryError(422, "unprocessable", exc.message) from exc
        sub = "/".join(p for p in (ref.subpath, subpath) if p)
        try:
            with installer.cloned(installer.GitRef(ref.repo_url, ref.branch)) as checkout:
                directory = checkout / sub if sub else checkout
                if not directory.is_dir():
                    raise RegistryError(422, "unprocessable", f"subpath {sub!r} not found")
                yield SourceTree(directory, checkout, ref.repo_url, ref.branch or _current_branch(checkout))
        except SkilldexError as exc:
            raise RegistryError(422, "unprocessable", exc.message) from exc

    def _fetch_skills(self, source_url: str, subpath: str | None = None) -> list[Fetched]:
        """Every skill found at the source, each with its own canonical source URL."""
        with self._fetch_tree(source_url, subpath) as tree:
            return [self._validated(d, tree.url_for(d), SKILL_FILE, validate_skill)
                    for d in installer.discover_skill_dirs(tree.directory)]

    def _fetch_skillset(self, source_url: str, subpath: str | None = None) -> Fetched:
        with self._fetch_tree(source_url, subpath) as tree:
            if not (tree.directory / SKILLSET_FILE).is_file():
                raise RegistryError(422, "unprocessable", f"no {SKILLSET_FILE} at source")
            return self._validated(tree.directory, tree.url_for(tree.directory), SKILLSET_FILE,
                                   validate_skillset)

    @staticmethod
    def _validated(directory: Path, url: str, filename: str, validate) -> Fetched:
        result = validate(directory)
        doc = parse_skill_document((directory / filename).read_text(encoding="utf-8", errors="replace"))
        if result.fatal or not isinstance(doc, SkillDocument):
            raise RegistryError(422, "unprocessable",
                                f"{directory.name}: {result.diagnostics[0].message}")
        if doc.scalar("name") is None:
            raise RegistryError(422, "unprocessable", f"{directory.name}: name field missing")
        return Fetched(directory, url, doc, result)

    @staticmethod
    def _pick(fetched: list[Fetched], name: str | None) -> Fetched:
        if name is not None:
            matches = [f for f in fetched if f.result.subject == name]
            if matches:
                return matches[0]
            raise RegistryError(422, "unprocessable", f"no skill named {name!r} found at source")
        if len(fetched) != 1:
            raise RegistryError(422, "unprocessable", f"expected exactly one skill at source, found {len(fetched)}")
        return fetched[0]

    @staticmethod
    def _metadata(kind: str, f: Fetched) -> dict:
        doc = f.document
        tags = doc.frontmatter.get("tags")
        meta = {
            "name": f.result.subject,
            "description": doc.scalar("description") or "",
            "score": f.result.score,
            "spec_version": f.result.spec_version,
            "version": doc.scalar("version") or "0.0.0",
            "tags": [t for t in tags if isinstance(t, str)] if isinstance(tags, list) else [],
            "author": doc.scalar("author"),
        }
        if kind == "skillsets":
            refs, _ = remote_refs(doc)
            meta["skill_refs"] = [r.to_dict() for r in refs]
        return meta

    def _fetch_for(self, kind: str, source_url: str, name: str | None, subpath: str | None = None) -> Fetched:
        if kind == "skills":
            return self._pick(self._fetch_skills(source_url, subpath), name)
        f = self._fetch_skillset(source_url, subpath)
        if f.result.error_count > 0:
            errors = "; ".join(d.message for d in f.result.diagnostics if d.severity == "error")
            raise RegistryError(422, "unprocessable", f"skillset failed validation: {errors}")
        if name is not None and f.result.subject != name:
            raise RegistryError(422, "unprocessable", f"SKILLSET.md names {f.result.subject!r}, not {name!r}")
        return f

    # --- mutations ----------------------------------------------------------

    def publish(self, kind: str, token: str | None, submission: dict) -> dict:
        publisher, _ = self._authenticate(token)
        name = submission.get("name")
        source_url = submission.get("source_url")
        if not isinstance(name, str) or not name or not isinstance(source_url, str) or not source_url:
            raise RegistryError(400, "bad_request", "name and source_url are required")
        tags = submission.get("tags") or []
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise RegistryError(400, "bad_request", "tags must be a list of strings")
        with self._lock:
            if name in self.store.data[kind]:
                raise RegistryError(409, "conflict", f"{kind[:-1]} {name!r} already exists")
        fetched = self._fetch_for(kind, source_url, name)
        meta = self._metadata(kind, fetched)
        record = {
            "id": str(uuid.uuid4()),
            **meta,
            "source_url": source_url,
            "trust_tier": "community",
            "tags": tags or meta["tags"],
            "author": meta["author"] or publisher["github_handle"],
            "install_count": 0,
            "published_by": publisher["id"],
        }
        _check_record(record)
        with self._lock:
            if name in self.store.data[kind]:
                raise RegistryError(409, "conflict", f"{kind[:-1]} {name!r} already exists")
            self.store.data[kind][name] = record
            self.store.save()
            return public_record(kind, record)

    def _owned(self, kind: str, token: str | None, name: str) -> dict:
        publisher, admin = self._authenticate(token)
        record = self.store.data[kind].get(name)
        if record is None:
            raise _not_found(kind, name)
        if not admin and record.get("published_by") != publisher["id"]:
            raise RegistryError(403, "forbidden", f"only the publisher of {name!r} may modify it")
        return record

    def patch(self, kind: str, token: str | None, name: str) -> dict:
        with self._lock:
            record = dict(self._owned(kind, token, name))
        fetched = self._fetch_for(kind, record["source_url"], name)
        meta = self._metadata(kind, fetched)
        for key in ("description", "score", "spec_version", "version"):
            record[key] = meta[key]
        if kind == "skillsets":
            record["skill_refs"] = meta["skill_refs"]
        _check_record(record)
        with self._lock:
            if name not in self.store.data[kind]:
                raise _not_found(kind, name)
            record["install_count"] = self.store.data[kind][name]["install_count"]
            self.store.data[kind][name] = record
            self.store.save()
            return public_record(kind, record)

    def delete(self, kind: str, token: str | None, name: str) -> None:
        with self._lock:
            self._owned(kind, token, name)
            del self.store.data[kind][name]
            self.store.save()

    def upsert_verified(self, kind: str, fetched: Fetched) -> dict:
        meta = self._metadata(kind, fetched)
        with self._lock:
            existing = self.store.data[kind].get(meta["name"])
            record = dict(existing) if existing else {
                "id": str(uuid.uuid4()), "install_count": 0, "published_by": None,
            }
            record.update(meta)
            record["source_url"] = fetched.source_url
            record["trust_tier"] = "verified"
            _check_record(record)
            self.store.data[kind][meta["name"]] = record
            self.store.save()
            return public_record(kind, record)

    def seed(self, sources: list[SeedSource]) -> dict:
        """Fetch, validate and upsert each source as ``verified``; failures don't stop the run."""
        upserted, failures = [], []
        for source in sources:
            try:
                if source.kind == "skillset":
                    f = self._fetch_skillset(source.source_url, source.subpath)
                    if f.result.error_count > 0:
                        raise RegistryError(422, "unprocessable", "skillset failed validation")
                    upserted.append(self.upsert_verified("skillsets", f)["name"])
                else:
                    found = self._fetch_skills(source.source_url, source.subpath)
                    if not found:
                        raise RegistryError(422, "unprocessable", "no skills found at source")
                    for f in found:
                        upserted.append(self.upsert_verified("skills", f)["name"])
            except RegistryError as exc:
                log.warning("seed source %s failed: %s", source.source_url, exc.message)
                failures.append({"source_url": source.source_url, "subpath": source.subpath,
                                 "error": exc.message})
        return {"upserted": upserted, "failures": failures}


def load_tokens(path: str | Path | None) -> dict[str, dict]:
    """Read a token file mapping bearer token to ``{github_handle, verified, admin}``."""
    if not path or not Path(path).exists():
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))
