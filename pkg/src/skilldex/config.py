"""User configuration stored at ``<skilldex home>/config.json``."""

from __future__ import annotations

import json
from pathlib import Path

from skilldex.errors import SkilldexError
from skilldex.scopes import skilldex_home

KEYS = ("registry.url", "auth.token", "github.token", "defaults.scope", "suggest.generator_url")


def config_path() -> Path:
    return skilldex_home() / "config.json"


def load_config() -> dict[str, str]:
    path = config_path()
    if not path.exists():
        return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise SkilldexError("E_CONFIG_CORRUPT", f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SkilldexError("E_CONFIG_CORRUPT", f"{path} must contain a JSON object")
    return {str(k): str(v) for k, v in data.items()}


def _check_key(key: str) -> None:
    if key not in KEYS:
        raise SkilldexError("E_UNKNOWN_KEY", f"unknown config key {key!r}; known keys: {', '.join(KEYS)}")


def _write(config: dict[str, str]) -> None:
    path = config_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)


def get_value(key: str) -> str | None:
    _check_key(key)
    return load_config().get(key)


def set_value(key: str, value: str) -> None:
    _check_key(key)
    if key == "defaults.scope":
        from skilldex.scopes import ScopeLevel

        value = ScopeLevel.parse(value).value
    config = load_config()
    config[key] = value
    _write(config)


def unset_value(key: str) -> None:
    _check_key(key)
    config = load_config()
    config.pop(key, None)
    _write(config)
