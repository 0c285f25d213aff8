"""``skilldex-registry``: run the registry service and its admin tasks."""

from __future__ import annotations

import json
import logging
import secrets
import sys
from pathlib import Path

import click

from skilldex.registry.server import RegistryServer
from skilldex.registry.service import Registry, SeedSource, load_tokens

DEFAULTS = {"host": "127.0.0.1", "port": 8787, "store": "registry.json", "tokens": "tokens.json",
            "test_mode": False}


def _settings(config: str | None, **overrides) -> dict:
    settings = dict(DEFAULTS)
    if config:
        settings.update(json.loads(Path(config).read_text(encoding="utf-8")))
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return settings


def _registry(s: dict) -> Registry:
    return Registry(s["store"], load_tokens(s["tokens"]), test_mode=bool(s["test_mode"]))


@click.group()
@click.option("--config", type=click.Path(dir_okay=False), help="JSON file with host/port/store/tokens/test_mode.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx: click.Context, config: str | None, verbose: bool) -> None:
    """Skilldex metadata registry."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"config": config}


@main.command()
@click.option("--host")
@click.option("--port", type=int)
@click.option("--store", type=click.Path(dir_okay=False))
@click.option("--tokens", type=click.Path(dir_okay=False))
@click.option("--test-mode/--no-test-mode", default=None, help="Accept local paths as source_url.")
@click.pass_obj
def serve(obj, host, port, store, tokens, test_mode) -> None:
    """Serve the /v1 API until interrupted."""
    s = _settings(obj["config"], host=host, port=port, store=store, tokens=tokens, test_mode=test_mode)
    server = RegistryServer(_registry(s), s["host"], int(s["port"]))
    click.echo(f"registry listening on {server.base_url}", err=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


@main.command()
@click.argument("sources_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", type=click.Path(dir_okay=False))
@click.option("--test-mode/--no-test-mode", default=None)
@click.pass_obj
def seed(obj, sources_file, store, test_mode) -> None:
    """Fetch, validate and upsert every source in SOURCES_FILE as verified.

    SOURCES_FILE is a JSON list of {"source_url", "subpath", "kind"} objects.
    """
    s = _settings(obj["config"], store=store, test_mode=test_mode)
    sources = [SeedSource.from_dict(d) for d in json.loads(Path(sources_file).read_text(encoding="utf-8"))]
    report = _registry(s).seed(sources)
    click.echo(json.dumps(report, indent=2))
    if report["failures"]:
        sys.exit(1)


@main.command("add-token")
@click.argument("github_handle")
@click.option("--tokens", type=click.Path(dir_okay=False))
@click.option("--verified", is_flag=True)
@click.option("--admin", is_flag=True)
@click.option("--token", "token_value", help="Token to register (generated when omitted).")
@click.pass_obj
def add_token(obj, github_handle, tokens, verified, admin, token_value) -> None:
    """Provision a bearer token for GITHUB_HANDLE and print it."""
    s = _settings(obj["config"], tokens=tokens)
    path = Path(s["tokens"])
    table = load_tokens(path)
    token_value = token_value or secrets.token_urlsafe(32)
    table[token_value] = {"github_handle": github_handle, "verified": verified, "admin": admin}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(table, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(token_value)


if __name__ == "__main__":
    main()
