"""Newline-delimited JSON-RPC 2.0 tool server over stdio.

Every tool maps onto one function in :mod:`skilldex.ops`, the same functions
behind the CLI's ``--json`` output. stdout carries protocol frames only; logs
go to stderr.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, TextIO

import jsonschema

from skilldex import __version__, ops
from skilldex.client import RegistryClient, resolve_client_config
from skilldex.config import load_config
from skilldex.errors import SkilldexError
from skilldex.scopes import find_project_root

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "2024-11-05"
SERVER_NAME = "skilldex"

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602

_SCOPE = {"type": "string", "enum": ["global", "shared", "project", "g", "s", "p"]}


def _schema(props: dict, required: list[str] | None = None) -> dict:
    return {"type": "object", "properties": props, "required": required or [], "additionalProperties": False}


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    input_schema: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description, "inputSchema": self.input_schema}


TOOLS = (
    ToolDescriptor("skilldex_install", "Install skill from path, registry name, or git+https:// URL",
                   _schema({"source": {"type": "string"}, "scope": _SCOPE, "force": {"type": "boolean"}},
                           ["source"])),
    ToolDescriptor("skilldex_uninstall", "Remove skill from a scope",
                   _schema({"name": {"type": "string"}, "scope": _SCOPE}, ["name"])),
    ToolDescriptor("skilldex_validate", "Validate a skill directory against the format and return its score",
                   _schema({"path": {"type": "string"}}, ["path"])),
    ToolDescriptor("skilldex_list", "List installed skills across scopes",
                   _schema({"scope": _SCOPE})),
    ToolDescriptor("skilldex_search", "Search registry by query, tier, and limit",
                   _schema({"query": {"type": "string"},
                            "tier": {"type": "string", "enum": ["verified", "community"]},
                            "limit": {"type": "integer", "minimum": 1}})),
    ToolDescriptor("skilldex_suggest", "Propose skills for the current project; never installs",
                   _schema({"projectRoot": {"type": "string"}, "autoYes": {"type": "boolean"}})),
    ToolDescriptor("skilldex_skillset_install", "Install skillset from path, registry name, or git+https:// URL",
                   _schema({"source": {"type": "string"}, "scope": _SCOPE, "force": {"type": "boolean"}},
                           ["source"])),
    ToolDescriptor("skilldex_skillset_uninstall", "Remove skillset and its skills from a scope",
                   _schema({"name": {"type": "string"}, "scope": _SCOPE}, ["name"])),
    ToolDescriptor("skilldex_skillset_list", "List installed skillsets across scopes",
                   _schema({"scope": _SCOPE})),
    ToolDescriptor("skilldex_skillset_validate", "Validate a skillset directory and return its score",
                   _schema({"path": {"type": "string"}}, ["path"])),
)


class RpcError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message


class ToolServer:
    """Dispatches tool calls; ``start_dir`` anchors project-scope resolution."""

    def __init__(self, start_dir: str | Path | None = None,
                 client_factory: Callable[[], RegistryClient] | None = None) -> None:
        self.start_dir = Path(start_dir) if start_dir else Path.cwd()
        self._client_factory = client_factory or (lambda: RegistryClient(resolve_client_config(None, load_config())))
        self._handlers: dict[str, Callable[[dict], dict]] = {
            "skilldex_install": self._install,
            "skilldex_uninstall": lambda a: ops.uninstall(a["name"], a.get("scope"), self.start_dir),
            "skilldex_validate": lambda a: ops.validate(self._path(a["path"])),
            "skilldex_list": lambda a: ops.list_skills(a.get("scope"), self.start_dir),
            "skilldex_search": lambda a: ops.search(self._client_factory(), a.get("query"), a.get("tier"),
                                                    a.get("limit", 20)),
            "skilldex_suggest": self._suggest,
            "skilldex_skillset_install": self._skillset_install,
            "skilldex_skillset_uninstall": lambda a: ops.skillset_uninstall(a["name"], a.get("scope"),
                                                                            self.start_dir),
            "skilldex_skillset_list": lambda a: ops.list_skillsets(a.get("scope"), self.start_dir),
            "skilldex_skillset_validate": lambda a: ops.skillset_validate(self._path(a["path"])),
        }

    def _path(self, value: str) -> Path:
        p = Path(value).expanduser()
        return p if p.is_absolute() else self.start_dir / p

    def _source(self, value: str) -> str:
        # relative local paths resolve against the server's working dir, not the process cwd
        if value.startswith(("./", "../")) or value in (".", ".."):
            return str(self.start_dir / value)
        return value

    def _install(self, a: dict) -> dict:
        return ops.install(self._source(a["source"]), a.get("scope", "project"), a.get("force", False),
                           self.start_dir, self._client_factory())

    def _skillset_install(self, a: dict) -> dict:
        return ops.skillset_install(self._source(a["source"]), a.get("scope", "project"), a.get("force", False),
                                    self.start_dir, self._client_factory())

    def _suggest(self, a: dict) -> dict:
        root = self._path(a["projectRoot"]) if "projectRoot" in a else find_project_root(self.start_dir)
        client = self._client_factory()
        if a.get("autoYes"):
            return ops.suggest_auto(root, client, start_dir=self.start_dir)
        proposals = ops.suggest_proposals(root, client, start_dir=self.start_dir)
        return {"proposals": [p.to_dict() for p in proposals]}

    # --- protocol -----------------------------------------------------------

    def call_tool(self, name: str, arguments: dict) -> dict:
        handler = self._handlers.get(name)
        if handler is None:
            raise RpcError(METHOD_NOT_FOUND, f"unknown tool: {name}")
        descriptor = next(t for t in TOOLS if t.name == name)
        try:
            jsonschema.validate(arguments, descriptor.input_schema)
        except jsonschema.ValidationError as exc:
            raise RpcError(INVALID_PARAMS, f"invalid arguments for {name}: {exc.message}") from exc
        try:
            data = handler(arguments)
        except SkilldexError as exc:
            return {"isError": True, "error": exc.to_dict(),
                    "content": [{"type": "text", "text": str(exc)}]}
        return {"isError": False, "structuredContent": data,
                "content": [{"type": "text", "text": json.dumps(data, indent=2)}]}

    def handle(self, method: str, params) -> dict:
        if method == "initialize":
            return {"protocolVersion": PROTOCOL_VERSION,
                    "serverInfo": {"name": SERVER_NAME, "version": __version__},
                    "capabilities": {"tools": {}}}
        if method == "tools/list":
            return {"tools": [t.to_dict() for t in TOOLS]}
        if method == "tools/call":
            if not isinstance(params, dict) or not isinstance(params.get("name"), str):
                raise RpcError(INVALID_PARAMS, "tools/call needs a string 'name'")
            arguments = params.get("arguments") or {}
            if not isinstance(arguments, dict):
                raise RpcError(INVALID_PARAMS, "'arguments' must be an object")
            return self.call_tool(params["name"], arguments)
        if method == "ping":
            return {}
        raise RpcError(METHOD_NOT_FOUND, f"method not found: {method}")

    def handle_line(self, line: str) -> dict | None:
        """Process one frame; returns the response, or None for notifications."""
        try:
            msg = json.loads(line)
        except ValueError as exc:
            return _error(None, PARSE_ERROR, f"parse error: {exc}")
        if not isinstance(msg, dict) or msg.get("jsonrpc") != "2.0" or not isinstance(msg.get("method"), str):
            return _error(msg.get("id") if isinstance(msg, dict) else None, INVALID_REQUEST, "invalid request")
        is_notification = "id" not in msg
        try:
            result = self.handle(msg["method"], msg.get("params"))
        except RpcError as exc:
            return None if is_notification else _error(msg["id"], exc.code, exc.message)
        except Exception as exc:  # noqa: BLE001 - keep serving after a bug
            log.exception("internal error handling %s", msg["method"])
            return None if is_notification else _error(msg["id"], -32603, f"internal error: {exc}")
        if is_notification:
            return None
        return {"jsonrpc": "2.0", "id": msg["id"], "result": result}

    def serve(self, stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout) -> None:
        for line in stdin:
            if not line.strip():
                continue
            response = self.handle_line(line)
            if response is not None:
                stdout.write(json.dumps(response) + "\n")
                stdout.flush()


def _error(msg_id, code: int, message: str) -> dict:
    return {"jsonrpc": "2.0", "id": msg_id, "error": {"code": code, "message": message}}
