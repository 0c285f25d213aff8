"""HTTP client for the registry ``/v1`` API."""

from __future__ import annotations

import os
from dataclasses import dataclass

import httpx

from skilldex.errors import SkilldexError

DEFAULT_REGISTRY_URL = "http://127.0.0.1:8787/v1"


class RegistryHTTPError(SkilldexError):
    """A non-2xx response, carrying the HTTP status and the server's error code."""

    def __init__(self, status: int, server_code: str, message: str) -> None:
        super().__init__("E_HTTP", f"registry returned {status} ({server_code}): {message}")
        self.status = status
        self.server_code = server_code

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "status": self.status, "serverCode": self.server_code}


@dataclass(frozen=True)
class ClientConfig:
    base_url: str = DEFAULT_REGISTRY_URL
    auth_token: str | None = None
    timeout: float = 30.0

    def __post_init__(self) -> None:
        url = self.base_url.rstrip("/")
        if not url.endswith("/v1"):
            url += "/v1"
        object.__setattr__(self, "base_url", url)


def resolve_client_config(flag_url: str | None = None, config: dict | None = None) -> ClientConfig:
    """Flag > SKILLDEX_REGISTRY > config ``registry.url`` > default; token from SKILLDEX_TOKEN > ``auth.token``."""
    config = config or {}
    url = flag_url or os.environ.get("SKILLDEX_REGISTRY") or config.get("registry.url") or DEFAULT_REGISTRY_URL
    token = os.environ.get("SKILLDEX_TOKEN") or config.get("auth.token")
    return ClientConfig(url, token)


class RegistryClient:
    def __init__(self, config: ClientConfig | None = None, transport: httpx.BaseTransport | None = None) -> None:
        self.config = config or ClientConfig()
        self._transport = transport

    def _request(self, method: str, path: str, *, params: dict | None = None, json: dict | None = None,
                 auth: bool = False):
        headers = {"Accept": "application/json"}
        if auth:
            if not self.config.auth_token:
                raise SkilldexError("E_NO_TOKEN",
                                    "SKILLDEX_TOKEN is not set; export SKILLDEX_TOKEN=<token> to publish")
            headers["Authorization"] = f"Bearer {self.config.auth_token}"
        try:
            with httpx.Client(timeout=self.config.timeout, transport=self._transport) as http:
                resp = http.request(method, self.config.base_url + path, params=params, json=json, headers=headers)
        except httpx.HTTPError as exc:
            raise SkilldexError("E_NETWORK", f"cannot reach registry at {self.config.base_url}: {exc}") from exc
        try:
            body = resp.json() if resp.content else None
        except ValueError as exc:
            if resp.is_success:
                raise SkilldexError("E_DECODE", f"invalid JSON from registry: {exc}") from exc
            body = None
        if not resp.is_success:
            err = (body or {}).get("error", {}) if isinstance(body, dict) else {}
            raise RegistryHTTPError(resp.status_code, err.get("code", "unknown"),
                                    err.get("message", resp.reason_phrase))
        return body

    # --- skills -------------------------------------------------------------

    def _search(self, kind: str, query, tier, limit, tags) -> list[dict]:
        params = {"limit": limit}
        if query:
            params["q"] = query
        if tier:
            params["tier"] = tier
        if tags:
            params["tags"] = ",".join(tags)
        body = self._request("GET", f"/{kind}", params=params)
        try:
            return list(body[kind])
        except (TypeError, KeyError) as exc:
            raise SkilldexError("E_DECODE", f"unexpected search response: {body!r}") from exc

    def search(self, query: str | None = None, tier: str | None = None, limit: int = 20,
               tags: list[str] | None = None) -> list[dict]:
        return self._search("skills", query, tier, limit, tags)

    def get(self, name: str) -> dict:
        return self._request("GET", f"/skills/{name}")

    def install_info(self, name: str) -> dict:
        return self._request("GET", f"/skills/{name}/install")

    def publish(self, name: str, source_url: str, tags: list[str] | None = None) -> dict:
        return self._request("POST", "/skills", json={"name": name, "source_url": source_url, "tags": tags or []},
                             auth=True)

    def patch(self, name: str) -> dict:
        return self._request("PATCH", f"/skills/{name}", auth=True)

    def delete(self, name: str) -> dict:
        return self._request("DELETE", f"/skills/{name}", auth=True)

    # --- skillsets ----------------------------------------------------------

    def search_skillsets(self, query: str | None = None, tier: str | None = None, limit: int = 20,
                         tags: list[str] | None = None) -> list[dict]:
        return self._search("skillsets", query, tier, limit, tags)

    def get_skillset(self, name: str) -> dict:
        return self._request("GET", f"/skillsets/{name}")

    def skillset_install_info(self, name: str) -> dict:
        return self._request("GET", f"/skillsets/{name}/install")

    def publish_skillset(self, name: str, source_url: str, tags: list[str] | None = None) -> dict:
        return self._request("POST", "/skillsets",
                             json={"name": name, "source_url": source_url, "tags": tags or []}, auth=True)

    def patch_skillset(self, name: str) -> dict:
        return self._request("PATCH", f"/skillsets/{name}", auth=True)

    def delete_skillset(self, name: str) -> dict:
        return self._request("DELETE", f"/skillsets/{name}", auth=True)

    # --- misc ---------------------------------------------------------------

    def auth_me(self) -> dict:
        return self._request("GET", "/auth/me", auth=True)

    def spec_versions(self) -> list[str]:
        return self._request("GET", "/spec-versions")["versions"]

    def spec_versions_current(self) -> str:
        return self._request("GET", "/spec-versions/current")["current"]
