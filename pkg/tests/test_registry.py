import hashlib
import json

import httpx
import pytest

from conftest import ADMIN_TOKEN, ALICE_TOKEN, BOB_TOKEN
from fixtures import LONG_DESCRIPTION, make_developer_skillset, make_skill, write
from skilldex.client import ClientConfig, RegistryClient
from skilldex.errors import SkilldexError
from skilldex.registry import Registry, RegistryServer, SeedSource
from skilldex.registry.ratelimit import RateLimiter
from skilldex.registry.search import fts_rank, trigram_similarity, trigrams


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- ranking ----------------------------------------------------------------

def test_trigrams_by_hand():
    assert trigrams("cat") == {"  c", " ca", "cat", "at "}
    assert trigrams("Hi there") == {"  h", " hi", "hi ", "  t", " th", "the", "her", "ere", "re "}


@pytest.mark.parametrize("a, b, expected", [
    ("word", "word ", 1.0),
    ("cat", "cat", 1.0),
    # lint: 5 grams, linter: 7, shared 4, union 8
    ("lint", "linter", 0.5),
    ("abc", "xyz", 0.0),
    ("", "", 0.0),
])
def test_trigram_similarity(a, b, expected):
    assert trigram_similarity(a, b) == pytest.approx(expected)


def test_fts_rank_weights_name_over_description():
    # name shares "commit" (2); description shares "commit" and "git" (1 each)
    assert fts_rank("git commit", "conventional-commit", "Write commit messages with git") == 4
    assert fts_rank("memory", "memory-forensics", "nothing here") == 2
    assert fts_rank("memory", "other", "memory dumps") == 1
    assert fts_rank("zzz", "other", "memory dumps") == 0


# --- HTTP -------------------------------------------------------------------

@pytest.fixture
def sources(tmp_path):
    root = tmp_path / "sources"
    make_skill(root, "memory-forensics", "Analyze memory dumps with volatility to find injected code and "
               "rogue processes during incident response work for any team that needs it today.")
    make_skill(root, "log-triage", LONG_DESCRIPTION)
    make_skill(root, "memo-writer", "Write memos. " + LONG_DESCRIPTION)
    return root


def _publish_all(alice, sources):
    for name in ("memory-forensics", "log-triage", "memo-writer"):
        alice.publish(name, str(sources / name))


def test_publish_creates_community_record(alice, sources):
    rec = alice.publish("log-triage", str(sources / "log-triage"), ["ops"])
    assert rec["trust_tier"] == "community"
    assert rec["install_count"] == 0
    assert rec["tags"] == ["ops"]
    assert rec["author"] == "alice"
    assert 0 <= rec["score"] <= 100


def test_publish_conflict_and_auth(alice, client, sources, server):
    alice.publish("log-triage", str(sources / "log-triage"))
    with pytest.raises(SkilldexError) as exc:
        alice.publish("log-triage", str(sources / "log-triage"))
    assert exc.value.status == 409
    bad = RegistryClient(ClientConfig(server.base_url, "not-a-token"))
    with pytest.raises(SkilldexError) as exc:
        bad.publish("memo-writer", str(sources / "memo-writer"))
    assert exc.value.status == 401


def test_publish_unknown_name_at_source(alice, sources):
    with pytest.raises(SkilldexError) as exc:
        alice.publish("not-there", str(sources / "log-triage"))
    assert exc.value.status == 422


def test_search_ranking(alice, client, sources):
    _publish_all(alice, sources)
    names = [r["name"] for r in client.search("memory")]
    assert names[0] == "memory-forensics"
    assert "log-triage" not in names
    # "memo" matches no token but is trigram-similar to memo-writer
    assert "memo-writer" in [r["name"] for r in client.search("memo")]
    assert len(client.search(limit=2)) == 2


def test_empty_query_orders_by_installs(alice, client, sources):
    _publish_all(alice, sources)
    for _ in range(3):
        client.install_info("memo-writer")
    client.install_info("log-triage")
    assert [r["name"] for r in client.search()] == ["memo-writer", "log-triage", "memory-forensics"]


def test_tier_filter(alice, client, sources, registry):
    _publish_all(alice, sources)
    make_skill(sources / "v", "verified-one")
    registry.seed([SeedSource(str(sources / "v"))])
    assert [r["name"] for r in client.search(tier="verified")] == ["verified-one"]
    assert len(client.search(tier="community")) == 3


def test_bad_search_params(client):
    with pytest.raises(SkilldexError) as exc:
        client.search(tier="gold")
    assert exc.value.status == 400
    with pytest.raises(SkilldexError) as exc:
        client.search(limit=0)
    assert exc.value.status == 400


def test_get_is_case_sensitive(alice, client, sources):
    alice.publish("log-triage", str(sources / "log-triage"))
    assert client.get("log-triage")["name"] == "log-triage"
    with pytest.raises(SkilldexError) as exc:
        client.get("Log-Triage")
    assert exc.value.status == 404


def test_install_info_counts(alice, client, sources):
    alice.publish("log-triage", str(sources / "log-triage"))
    for i in range(1, 4):
        assert client.install_info("log-triage")["install_count"] == i
    assert client.get("log-triage")["install_count"] == 3
    assert client.install_info("log-triage")["source_url"] == str(sources / "log-triage")


def test_patch_and_delete_ownership(alice, server, sources):
    alice.publish("log-triage", str(sources / "log-triage"))
    bob = RegistryClient(ClientConfig(server.base_url, BOB_TOKEN))
    admin = RegistryClient(ClientConfig(server.base_url, ADMIN_TOKEN))
    with pytest.raises(SkilldexError) as exc:
        bob.delete("log-triage")
    assert exc.value.status == 403
    with pytest.raises(SkilldexError) as exc:
        bob.patch("nothing")
    assert exc.value.status == 404
    write(sources / "log-triage" / "SKILL.md",
          (sources / "log-triage" / "SKILL.md").read_text().replace('version: "1.0.0"', 'version: "1.1.0"'))
    assert alice.patch("log-triage")["version"] == "1.1.0"
    assert admin.delete("log-triage") == {"deleted": "log-triage"}
    with pytest.raises(SkilldexError) as exc:
        alice.get("log-triage")
    assert exc.value.status == 404


def test_patch_keeps_install_count(alice, sources):
    alice.publish("log-triage", str(sources / "log-triage"))
    alice.install_info("log-triage")
    assert alice.patch("log-triage")["install_count"] == 1


def test_skillset_records(alice, client, tmp_path):
    src = make_developer_skillset(tmp_path / "ss")
    rec = alice.publish_skillset("developer", str(src))
    assert rec["skill_count"] == 0  # embedded members are not remote refs
    assert client.get_skillset("developer")["trust_tier"] == "community"
    assert [r["name"] for r in client.search_skillsets("developer")] == ["developer"]


def test_skillset_with_remote_refs_counts_them(alice, tmp_path):
    d = tmp_path / "remote-set"
    write(d / "SKILLSET.md", "---\nname: remote-set\ndescription: \"" + LONG_DESCRIPTION + "\"\nskills:\n"
          "  - name: a\n    source_url: https://github.com/o/a\n"
          "  - name: b\n    source_url: https://github.com/o/b\n---\n")
    assert alice.publish_skillset("remote-set", str(d))["skill_count"] == 2


def test_skillset_without_skills_rejected(alice, tmp_path):
    d = tmp_path / "hollow"
    write(d / "SKILLSET.md", f'---\nname: hollow\ndescription: "{LONG_DESCRIPTION}"\n---\n')
    with pytest.raises(SkilldexError) as exc:
        alice.publish_skillset("hollow", str(d))
    assert exc.value.status == 422


def test_spec_versions_and_auth_me(alice, client):
    assert client.spec_versions() == ["1.0"]
    assert client.spec_versions_current() == "1.0"
    assert alice.auth_me()["github_handle"] == "alice"
    assert alice.auth_me()["verified"] is False


def test_unsupported_routes(server):
    with httpx.Client() as http:
        assert http.put(server.base_url + "/skills").status_code == 405
        assert http.get(server.base_url + "/nowhere").status_code == 404
        r = http.get(server.base_url + "/auth/github")
        assert r.status_code == 501
        assert r.json()["error"]["code"] == "not_implemented"
        r = http.post(server.base_url + "/skills", content=b"{oops",
                      headers={"Authorization": f"Bearer {ALICE_TOKEN}", "Content-Type": "application/json"})
        assert r.status_code == 400


# --- rate limiting ------------------------------------------------------------

def test_search_limit_over_http(registry):
    # a pinned clock keeps all 101 requests inside one window
    limiter = RateLimiter(clock=lambda: 1000.0)
    with RegistryServer(registry, limiter=limiter) as srv, httpx.Client() as http:
        codes = [http.get(srv.base_url + "/skills").status_code for _ in range(101)]
        assert codes[:100] == [200] * 100
        assert codes[100] == 429
        last = http.get(srv.base_url + "/skills")
        assert int(last.headers["Retry-After"]) >= 1
        # other endpoint classes have their own budget
        assert http.get(srv.base_url + "/spec-versions").status_code == 200


def test_window_reset_and_client_isolation():
    now = [1000.0]
    limiter = RateLimiter({"search": 3, "default": 10}, window=60, clock=lambda: now[0])
    assert [limiter.check("a", "search")[0] for _ in range(4)] == [True, True, True, False]
    assert limiter.check("b", "search") == (True, 0)
    # window [960, 1020) ends 20 seconds from now
    assert limiter.check("a", "search") == (False, 20)
    now[0] = 1020.0
    assert limiter.check("a", "search") == (True, 0)


# --- seeding --------------------------------------------------------------------

def test_seed_is_idempotent(tmp_path, registry):
    src = tmp_path / "seed"
    make_skill(src, "one")
    make_skill(src, "two")
    result = registry.seed([SeedSource(str(src))])
    assert sorted(result["upserted"]) == ["one", "two"]
    store = registry.store.path
    before = _sha(store)
    registry.seed([SeedSource(str(src))])
    assert _sha(store) == before
    assert registry.get("skills", "one")["trust_tier"] == "verified"


def test_seed_continues_past_bad_source(tmp_path, registry):
    good1 = make_skill(tmp_path / "g1", "alpha")
    good2 = make_skill(tmp_path / "g2", "beta")
    result = registry.seed([SeedSource(str(good1)), SeedSource(str(tmp_path / "missing")),
                            SeedSource(str(good2))])
    assert result["upserted"] == ["alpha", "beta"]
    assert len(result["failures"]) == 1
    assert result["failures"][0]["source_url"] == str(tmp_path / "missing")


def test_seed_over_git(tmp_path, registry, git_host):
    make_skill(tmp_path / "src" / "skills", "alpha")
    url = git_host.publish("org/pack", tmp_path / "src")
    registry.seed([SeedSource(url)])
    assert registry.get("skills", "alpha")["source_url"] == url + "/tree/main/skills/alpha"


def test_production_mode_rejects_local_paths(tmp_path):
    reg = Registry(tmp_path / "store.json", {ALICE_TOKEN: {"github_handle": "alice"}})
    make_skill(tmp_path, "x")
    result = reg.seed([SeedSource(str(tmp_path / "x"))])
    assert result["upserted"] == [] and len(result["failures"]) == 1


def test_store_survives_restart(tmp_path, tokens, sources):
    path = tmp_path / "persist" / "store.json"
    reg = Registry(path, tokens, test_mode=True)
    reg.publish("skills", ALICE_TOKEN, {"name": "log-triage", "source_url": str(sources / "log-triage")})
    again = Registry(path, tokens, test_mode=True)
    assert again.get("skills", "log-triage")["name"] == "log-triage"
    assert json.loads(path.read_text())["skills"]["log-triage"]["trust_tier"] == "community"
