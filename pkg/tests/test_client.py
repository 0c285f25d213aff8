import json

import httpx
import pytest

from conftest import ALICE_TOKEN
from fixtures import make_skill
from skilldex.client import DEFAULT_REGISTRY_URL, ClientConfig, RegistryClient, resolve_client_config
from skilldex.errors import SkilldexError


def _recording(status=200, body=None):
    seen = []

    def handler(request):
        seen.append(request)
        return httpx.Response(status, json=body if body is not None else {})

    return seen, httpx.MockTransport(handler)


def test_base_url_gets_v1_suffix():
    assert ClientConfig("http://r.example").base_url == "http://r.example/v1"
    assert ClientConfig("http://r.example/v1/").base_url == "http://r.example/v1"


def test_config_precedence(monkeypatch):
    cfg = {"registry.url": "http://from-config", "auth.token": "cfg-token"}
    assert resolve_client_config(None, {}).base_url == DEFAULT_REGISTRY_URL
    assert resolve_client_config(None, cfg).base_url == "http://from-config/v1"
    monkeypatch.setenv("SKILLDEX_REGISTRY", "http://from-env")
    assert resolve_client_config(None, cfg).base_url == "http://from-env/v1"
    assert resolve_client_config("http://from-flag", cfg).base_url == "http://from-flag/v1"
    assert resolve_client_config(None, cfg).auth_token == "cfg-token"
    monkeypatch.setenv("SKILLDEX_TOKEN", "env-token")
    assert resolve_client_config(None, cfg).auth_token == "env-token"


def test_publish_without_token_sends_nothing():
    seen, transport = _recording()
    client = RegistryClient(ClientConfig("http://r"), transport)
    with pytest.raises(SkilldexError) as exc:
        client.publish("x", "https://github.com/o/x")
    assert exc.value.code == "E_NO_TOKEN"
    assert "SKILLDEX_TOKEN" in exc.value.message
    assert seen == []


def test_request_shape():
    seen, transport = _recording(201, {"name": "x"})
    client = RegistryClient(ClientConfig("http://r", "tok"), transport)
    client.publish("x", "https://github.com/o/x", ["a"])
    req = seen[0]
    assert req.method == "POST"
    assert str(req.url) == "http://r/v1/skills"
    assert req.headers["Authorization"] == "Bearer tok"
    assert json.loads(req.content) == {"name": "x", "source_url": "https://github.com/o/x", "tags": ["a"]}


def test_search_params():
    seen, transport = _recording(200, {"skills": []})
    RegistryClient(ClientConfig("http://r"), transport).search("mem", "verified", 5, ["a", "b"])
    assert dict(seen[0].url.params) == {"limit": "5", "q": "mem", "tier": "verified", "tags": "a,b"}


def test_error_statuses(client):
    with pytest.raises(SkilldexError) as exc:
        client.get("missing")
    assert exc.value.code == "E_HTTP"
    assert exc.value.status == 404
    assert exc.value.server_code == "not_found"


def test_network_error():
    def boom(request):
        raise httpx.ConnectError("refused")

    with pytest.raises(SkilldexError) as exc:
        RegistryClient(ClientConfig("http://r"), httpx.MockTransport(boom)).search()
    assert exc.value.code == "E_NETWORK"


def test_malformed_search_body():
    _, transport = _recording(200, {"unexpected": 1})
    with pytest.raises(SkilldexError) as exc:
        RegistryClient(ClientConfig("http://r"), transport).search()
    assert exc.value.code == "E_DECODE"


def test_install_info_against_server(server, tmp_path):
    d = make_skill(tmp_path, "alpha")
    alice = RegistryClient(ClientConfig(server.base_url, ALICE_TOKEN))
    alice.publish("alpha", str(d))
    info = alice.install_info("alpha")
    assert info["source_url"] == str(d)
    assert info["install_count"] == 1
    assert info["record"]["name"] == "alpha"
