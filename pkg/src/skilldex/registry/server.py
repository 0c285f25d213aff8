"""HTTP/1.1 JSON front end for :class:`~skilldex.registry.service.Registry`."""

from __future__ import annotations

import json
import logging
import re
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlparse

from skilldex.registry.ratelimit import RateLimiter
from skilldex.registry.service import Registry, RegistryError

log = logging.getLogger(__name__)

PREFIX = "/v1"
_KIND = r"(skills|skillsets)"
_NAME = r"([^/]+)"

# (method, pattern, handler name, rate-limit class)
ROUTES = [
    ("GET", rf"^/{_KIND}$", "search", "search"),
    ("POST", rf"^/{_KIND}$", "publish", "default"),
    ("GET", rf"^/{_KIND}/{_NAME}/install$", "install_info", "install"),
    ("GET", rf"^/{_KIND}/{_NAME}$", "get", "default"),
    ("PATCH", rf"^/{_KIND}/{_NAME}$", "patch", "default"),
    ("DELETE", rf"^/{_KIND}/{_NAME}$", "delete", "default"),
    ("GET", r"^/auth/github$", "oauth", "default"),
    ("GET", r"^/auth/github/callback$", "oauth", "default"),
    ("GET", r"^/auth/me$", "auth_me", "default"),
    ("GET", r"^/spec-versions$", "spec_versions", "default"),
    ("GET", r"^/spec-versions/current$", "spec_versions_current", "default"),
]
_COMPILED = [(m, re.compile(p), h, c) for m, p, h, c in ROUTES]


class _Handler(BaseHTTPRequestHandler):
    server: "RegistryServer"
    protocol_version = "HTTP/1.1"
    # headers and body go out in separate writes; avoid the delayed-ACK stall
    disable_nagle_algorithm = True

    def log_message(self, format: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), format % args)

    def _send(self, status: int, body, headers: dict | None = None) -> None:
        payload = b"" if body is None else json.dumps(body, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        for key, value in (headers or {}).items():
            self.send_header(key, value)
        self.end_headers()
        if payload:
            self.wfile.write(payload)

    def _token(self) -> str | None:
        header = self.headers.get("Authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:].strip()
        return None

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except ValueError as exc:
            raise RegistryError(400, "bad_request", f"invalid JSON body: {exc}") from exc
        if not isinstance(body, dict):
            raise RegistryError(400, "bad_request", "JSON body must be an object")
        return body

    def _dispatch(self, method: str) -> None:
        url = urlparse(self.path)
        path = url.path.rstrip("/") or "/"
        if not path.startswith(PREFIX + "/"):
            self._send(404, RegistryError(404, "not_found", f"no route for {path}").to_body())
            return
        path = path[len(PREFIX):]
        for route_method, pattern, handler, limit_class in _COMPILED:
            m = pattern.match(path)
            if not m or route_method != method:
                continue
            allowed, retry_after = self.server.limiter.check(self.client_address[0], limit_class)
            if not allowed:
                err = RegistryError(429, "rate_limited", f"rate limit exceeded for {limit_class} requests")
                self._send(429, err.to_body(), {"Retry-After": str(retry_after)})
                return
            try:
                status, body = getattr(self, "_h_" + handler)(*[unquote(g) for g in m.groups()],
                                                              query=parse_qs(url.query))
            except RegistryError as exc:
                self._send(exc.status, exc.to_body())
                return
            except Exception as exc:  # noqa: BLE001 - a handler bug must not kill the server
                log.exception("unhandled error on %s %s", method, self.path)
                self._send(500, RegistryError(500, "internal", str(exc)).to_body())
                return
            self._send(status, body)
            return
        known = any(p.match(path) for _, p, _, _ in _COMPILED)
        status = 405 if known else 404
        code = "method_not_allowed" if known else "not_found"
        self._send(status, RegistryError(status, code, f"{method} {path} not supported").to_body())

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_PATCH(self) -> None:
        self._dispatch("PATCH")

    def do_DELETE(self) -> None:
        self._dispatch("DELETE")

    def do_PUT(self) -> None:
        # no PUT routes; dispatching yields 405 on known paths
        self._dispatch("PUT")

    # --- handlers -----------------------------------------------------------

    @property
    def registry(self) -> Registry:
        return self.server.registry

    def _h_search(self, kind, query):
        def one(key):
            values = query.get(key)
            return values[-1] if values else None

        limit_raw = one("limit")
        try:
            limit = int(limit_raw) if limit_raw is not None else 20
        except ValueError as exc:
            raise RegistryError(400, "bad_request", "limit must be an integer") from exc
        tags = [t for t in (one("tags") or "").split(",") if t] or None
        results = self.registry.search(kind, one("q"), one("tier"), limit, tags)
        return 200, {kind: results}

    def _h_get(self, kind, name, query):
        return 200, self.registry.get(kind, name)

    def _h_install_info(self, kind, name, query):
        return 200, self.registry.install_info(kind, name)

    def _h_publish(self, kind, query):
        body = self._body()
        return 201, self.registry.publish(kind, self._token(), body)

    def _h_patch(self, kind, name, query):
        return 200, self.registry.patch(kind, self._token(), name)

    def _h_delete(self, kind, name, query):
        self.registry.delete(kind, self._token(), name)
        return 200, {"deleted": name}

    def _h_oauth(self, query):
        raise RegistryError(501, "not_implemented",
                            "GitHub OAuth is not available; use a provisioned bearer token")

    def _h_auth_me(self, query):
        return 200, self.registry.auth_me(self._token())

    def _h_spec_versions(self, query):
        return 200, {"versions": self.registry.spec_versions()}

    def _h_spec_versions_current(self, query):
        return 200, {"current": self.registry.spec_versions_current()}


class RegistryServer(ThreadingHTTPServer):
    """Threaded HTTP server; ``registry`` serializes its own mutations."""

    daemon_threads = True

    def __init__(self, registry: Registry, host: str = "127.0.0.1", port: int = 0,
                 limiter: RateLimiter | None = None) -> None:
        super().__init__((host, port), _Handler)
        self.registry = registry
        self.limiter = limiter or RateLimiter()
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}{PREFIX}"

    def start(self) -> "RegistryServer":
        """Serve on a background thread (used by tests and the embedded mode)."""
        self._thread = threading.Thread(target=self.serve_forever, args=(0.05,),
                                        name="skilldex-registry", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "RegistryServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
