from __future__ import annotations

import json
from pathlib import Path

import pytest

from fixtures import GitHost
from skilldex.client import ClientConfig, RegistryClient
from skilldex.registry import Registry, RegistryServer

ADMIN_TOKEN = "admin-token"
ALICE_TOKEN = "alice-token"
BOB_TOKEN = "bob-token"


@pytest.fixture(autouse=True)
def hermetic_env(tmp_path, monkeypatch):
    """Point every scope at tmp_path and strip ambient registry/token settings."""
    home = tmp_path / "home"
    monkeypatch.setenv("SKILLDEX_HOME", str(home))
    for var in ("SKILLDEX_TOKEN", "SKILLDEX_REGISTRY", "GITHUB_TOKEN", "GIT_CONFIG_COUNT"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.setenv("GIT_CONFIG_NOSYSTEM", "1")
    monkeypatch.setenv("GIT_TERMINAL_PROMPT", "0")
    return home


@pytest.fixture
def home(hermetic_env) -> Path:
    return hermetic_env


@pytest.fixture
def project(tmp_path, monkeypatch) -> Path:
    """A project root marked by .git; the process cwd is set inside it."""
    root = tmp_path / "project"
    (root / ".git").mkdir(parents=True)
    monkeypatch.chdir(root)
    return root


@pytest.fixture
def git_host(tmp_path, monkeypatch) -> GitHost:
    host = GitHost(tmp_path / "repos")
    host.root.mkdir()
    for key, value in host.env().items():
        monkeypatch.setenv(key, value)
    return host


@pytest.fixture
def tokens() -> dict:
    return {
        ADMIN_TOKEN: {"github_handle": "skilldex-admin", "verified": True, "admin": True},
        ALICE_TOKEN: {"github_handle": "alice", "verified": False, "admin": False},
        BOB_TOKEN: {"github_handle": "bob", "verified": False, "admin": False},
    }


@pytest.fixture
def registry(tmp_path, tokens) -> Registry:
    return Registry(tmp_path / "registry" / "store.json", tokens, test_mode=True)


@pytest.fixture
def server(registry):
    srv = RegistryServer(registry, "127.0.0.1", 0)
    srv.start()
    yield srv
    srv.stop()


@pytest.fixture
def client(server) -> RegistryClient:
    return RegistryClient(ClientConfig(server.base_url))


@pytest.fixture
def alice(server) -> RegistryClient:
    return RegistryClient(ClientConfig(server.base_url, ALICE_TOKEN))


@pytest.fixture
def use_registry(server, monkeypatch):
    """Route CLI and tool-server clients to the embedded registry."""
    monkeypatch.setenv("SKILLDEX_REGISTRY", server.base_url)
    return server


def read_json(path: Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
