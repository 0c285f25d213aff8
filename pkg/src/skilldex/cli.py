"""``skillpm`` / ``spm`` command line."""

from __future__ import annotations

import json
import logging
import sys
from functools import wraps
from pathlib import Path

import click

from skilldex import __version__, ops, publish, skillsets, suggest
from skilldex import config as cfg
from skilldex.client import RegistryClient, resolve_client_config
from skilldex.errors import SkilldexError
from skilldex.scopes import find_project_root
from skilldex.validator import validate_skill, validate_skillset, render_human

EXIT_ERROR = 1
EXIT_FATAL = 3
EXIT_BELOW_MIN = 4

SCOPE_CHOICES = click.Choice(["global", "shared", "project", "g", "s", "p"], case_sensitive=False)


class Ctx:
    def __init__(self, json_mode: bool, registry: str | None) -> None:
        self.json_mode = json_mode
        self.registry = registry

    def client(self) -> RegistryClient:
        return RegistryClient(resolve_client_config(self.registry, cfg.load_config()))

    def default_scope(self) -> str:
        return cfg.load_config().get("defaults.scope", "project")


def _emit_json(data) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


def command(group: click.Group, name: str | None = None, **kwargs):
    """Register a command with a local ``--json`` flag and uniform error handling."""

    def decorate(fn):
        @group.command(name, **kwargs)
        @click.option("--json", "json_flag", is_flag=True, help="Emit a structured JSON result.")
        @click.pass_context
        @wraps(fn)
        def wrapper(ctx: click.Context, json_flag: bool, **params):
            obj: Ctx = ctx.find_object(Ctx) or Ctx(False, None)
            obj.json_mode = obj.json_mode or json_flag
            try:
                return fn(obj, **params)
            except SkilldexError as exc:
                if obj.json_mode:
                    _emit_json({"error": exc.to_dict()})
                else:
                    click.echo(f"error: {exc}", err=True)
                ctx.exit(EXIT_ERROR)

        return wrapper

    return decorate


def _warn(lines) -> None:
    for line in lines:
        click.echo(f"warning: {line}", err=True)


@click.group()
@click.option("--json", "json_mode", is_flag=True, help="Emit structured JSON on every command.")
@click.option("--registry", envvar=None, help="Registry base URL (overrides SKILLDEX_REGISTRY and config).")
@click.option("-v", "--verbose", is_flag=True, help="Log debug output to stderr.")
@click.version_option(__version__, prog_name="skillpm")
@click.pass_context
def main(ctx: click.Context, json_mode: bool, registry: str | None, verbose: bool) -> None:
    """Package manager for agent skills and skillsets."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = Ctx(json_mode, registry)


# --- skills ------------------------------------------------------------------

def _render_install(data: dict) -> None:
    for item in data["installed"]:
        click.echo(f"Installed {item['name']} ({item['score']}/100) to {item['scope']} scope")
    _warn(data["warnings"])
    for err in data.get("errors", []):
        click.echo(f"error: {err['code']}: {err['message']}", err=True)


@command(main)
@click.argument("spec")
@click.option("--scope", type=SCOPE_CHOICES)
@click.option("--force", is_flag=True, help="Overwrite an existing install at the same scope.")
def install(obj: Ctx, spec: str, scope: str | None, force: bool) -> None:
    """Install skills from a path, registry name, or git+https:// URL."""
    data = ops.install(spec, scope or obj.default_scope(), force, client=obj.client())
    _emit_json(data) if obj.json_mode else _render_install(data)


@command(main)
@click.argument("name")
@click.option("--scope", type=SCOPE_CHOICES)
def uninstall(obj: Ctx, name: str, scope: str | None) -> None:
    """Remove a skill from a scope (the winning scope by default)."""
    data = ops.uninstall(name, scope)
    _emit_json(data) if obj.json_mode else click.echo(f"Uninstalled {name} from {data['scope']} scope")


@command(main)
@click.argument("name")
@click.option("--scope", type=SCOPE_CHOICES)
def update(obj: Ctx, name: str, scope: str | None) -> None:
    """Re-fetch a skill from its recorded source."""
    data = ops.update(name, scope)
    _emit_json(data) if obj.json_mode else _render_install(data)


def _render_list(entries: list[dict], noun: str) -> None:
    if not entries:
        click.echo(f"No {noun} installed.")
        return
    width = max(len(e["name"]) for e in entries)
    for e in entries:
        note = f"  (shadowed by {e['shadowedBy']})" if e["shadowedBy"] else ""
        click.echo(f"{e['name']:<{width}}  {e['version']:<8}  {e['scope']:<7}  {e['score']:>3}/100{note}")


@command(main, "list")
@click.option("--scope", type=SCOPE_CHOICES, help="Show one scope only.")
@click.option("--all", "all_scopes", is_flag=True, help="Show every scope (the default).")
def list_cmd(obj: Ctx, scope: str | None, all_scopes: bool) -> None:
    """List installed skills in precedence order."""
    if scope and all_scopes:
        raise click.UsageError("--scope and --all are mutually exclusive")
    data = ops.list_skills(scope)
    _emit_json(data) if obj.json_mode else _render_list(data["skills"], "skills")


def _validate(obj: Ctx, result, min_score: int | None) -> None:
    if obj.json_mode:
        _emit_json(result.to_dict())
    else:
        click.echo(render_human(result))
    if result.fatal:
        sys.exit(EXIT_FATAL)
    if min_score is not None and result.score < min_score:
        if not obj.json_mode:
            click.echo(f"score {result.score} is below --min-score {min_score}", err=True)
        sys.exit(EXIT_BELOW_MIN)


@command(main)
@click.argument("directory", type=click.Path(file_okay=False))
@click.option("--min-score", type=click.IntRange(0, 100), help="Exit 4 when the score is below N.")
def validate(obj: Ctx, directory: str, min_score: int | None) -> None:
    """Check a skill directory and print a conformance score."""
    _validate(obj, validate_skill(directory), min_score)


def _tags(value: str | None) -> list[str]:
    return [t.strip() for t in (value or "").split(",") if t.strip()]


def _render_record(record: dict, verb: str) -> None:
    click.echo(f"{verb} {record['name']} ({record.get('trust_tier', '?')}, score {record.get('score', '?')}/100)")
    click.echo(f"  {record.get('source_url', '')}")


@command(main, "publish")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--tags", help="Comma-separated tags.")
def publish_cmd(obj: Ctx, directory: str, tags: str | None) -> None:
    """Publish a skill's metadata to the registry."""
    data = publish.publish_flow(directory, _tags(tags), obj.client(), "skill")
    _emit_json(data) if obj.json_mode else _render_record(data, "Published")


def _render_search(results: list[dict]) -> None:
    if not results:
        click.echo("No results.")
    for r in results:
        click.echo(f"{r['name']}  [{r['trust_tier']}]  {r['score']}/100  installs: {r.get('install_count', 0)}")
        click.echo(f"    {r.get('description', '')}")


@command(main)
@click.argument("query", required=False)
@click.option("--tier", type=click.Choice(["verified", "community"]))
@click.option("--limit", type=click.IntRange(1), default=20, show_default=True)
def search(obj: Ctx, query: str | None, tier: str | None, limit: int) -> None:
    """Search the registry."""
    data = ops.search(obj.client(), query, tier, limit)
    _emit_json(data) if obj.json_mode else _render_search(data["results"])


class TerminalPrompter:
    """Asks on stderr so ``--json`` output on stdout stays clean."""

    def ask(self, proposal: suggest.SuggestionProposal) -> str:
        status = "" if proposal.available else " (not in registry)"
        click.echo(f"\n{proposal.skill_name}{status}: {proposal.reason}", err=True)
        return click.prompt(f"Install at {proposal.suggested_scope.value} scope? [Y/n/global/shared/project]",
                            default="", show_default=False, err=True)


@command(main, "suggest")
@click.option("--yes", "auto_yes", is_flag=True, help="Approve every proposal at its suggested scope.")
def suggest_cmd(obj: Ctx, auto_yes: bool) -> None:
    """Propose skills for this project; prints install commands, never installs."""
    client = obj.client()
    url = cfg.load_config().get("suggest.generator_url")
    generator = suggest.RemoteGenerator(url) if url else None
    root = find_project_root(Path.cwd())
    proposals = ops.suggest_proposals(root, client, generator)
    if auto_yes:
        result = suggest.run_approval(proposals, "auto_yes")
    else:
        result = suggest.run_approval(proposals, "interactive", TerminalPrompter())
    if obj.json_mode:
        _emit_json({"proposals": [p.to_dict() for p in proposals], **result.to_dict()})
    elif not proposals:
        click.echo("No suggestions.")
    else:
        click.echo(suggest.render_approval(result))


# --- config ------------------------------------------------------------------

@main.group("config")
def config_group() -> None:
    """Read and write user configuration."""


@command(config_group, "get")
@click.argument("key")
def config_get(obj: Ctx, key: str) -> None:
    value = cfg.get_value(key)
    if obj.json_mode:
        _emit_json({key: value})
    elif value is not None:
        click.echo(value)


@command(config_group, "set")
@click.argument("key")
@click.argument("value")
def config_set(obj: Ctx, key: str, value: str) -> None:
    cfg.set_value(key, value)
    if obj.json_mode:
        _emit_json({key: cfg.get_value(key)})


@command(config_group, "unset")
@click.argument("key")
def config_unset(obj: Ctx, key: str) -> None:
    cfg.unset_value(key)
    if obj.json_mode:
        _emit_json({key: None})


@command(config_group, "list")
def config_list(obj: Ctx) -> None:
    data = cfg.load_config()
    if obj.json_mode:
        _emit_json(data)
        return
    for key, value in sorted(data.items()):
        click.echo(f"{key}={value}")


# --- skillsets ---------------------------------------------------------------

@main.group("skillset")
def skillset_group() -> None:
    """Work with skillsets (bundles of skills plus shared assets)."""


@command(skillset_group, "init")
@click.argument("name")
@click.option("--dir", "target", type=click.Path(file_okay=False), default=".", show_default=True)
def skillset_init(obj: Ctx, name: str, target: str) -> None:
    path = skillsets.init_skillset(name, target)
    _emit_json({"skillset": name, "path": str(path)}) if obj.json_mode else click.echo(f"Created {path}")


def _render_skillset_install(data: dict) -> None:
    click.echo(f"Installed skillset {data['skillset']} ({data['score']}/100) to {data['scope']} scope")
    for item in data["installed"]:
        click.echo(f"  {item['name']} ({item['score']}/100)")
    _warn(data["warnings"])


@command(skillset_group, "install")
@click.argument("spec")
@click.option("--scope", type=SCOPE_CHOICES)
@click.option("--force", is_flag=True)
def skillset_install(obj: Ctx, spec: str, scope: str | None, force: bool) -> None:
    data = ops.skillset_install(spec, scope or obj.default_scope(), force, client=obj.client())
    _emit_json(data) if obj.json_mode else _render_skillset_install(data)


@command(skillset_group, "publish")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--tags")
def skillset_publish(obj: Ctx, directory: str, tags: str | None) -> None:
    data = publish.publish_flow(directory, _tags(tags), obj.client(), "skillset")
    _emit_json(data) if obj.json_mode else _render_record(data, "Published skillset")


@command(skillset_group, "list")
@click.option("--scope", type=SCOPE_CHOICES)
def skillset_list(obj: Ctx, scope: str | None) -> None:
    data = ops.list_skillsets(scope)
    _emit_json(data) if obj.json_mode else _render_list(data["skillsets"], "skillsets")


@command(skillset_group, "validate")
@click.argument("directory", type=click.Path(file_okay=False))
@click.option("--min-score", type=click.IntRange(0, 100))
def skillset_validate(obj: Ctx, directory: str, min_score: int | None) -> None:
    _validate(obj, validate_skillset(directory), min_score)


@command(skillset_group, "uninstall")
@click.argument("name")
@click.option("--scope", type=SCOPE_CHOICES)
def skillset_uninstall(obj: Ctx, name: str, scope: str | None) -> None:
    data = ops.skillset_uninstall(name, scope)
    if obj.json_mode:
        _emit_json(data)
        return
    click.echo(f"Uninstalled skillset {name} from {data['scope']} scope")
    _warn(data["warnings"])


@command(skillset_group, "update")
@click.argument("name")
@click.option("--scope", type=SCOPE_CHOICES)
def skillset_update(obj: Ctx, name: str, scope: str | None) -> None:
    data = ops.skillset_update(name, scope)
    _emit_json(data) if obj.json_mode else _render_skillset_install(data)


# --- agent tool server -------------------------------------------------------

@main.command("mcp", hidden=True)
def mcp() -> None:
    """Serve the agent tools over stdio JSON-RPC."""
    from skilldex.toolserver import ToolServer

    ToolServer(Path.cwd()).serve(sys.stdin, sys.stdout)


if __name__ == "__main__":
    main()
