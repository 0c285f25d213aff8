"""Parsing of ``SKILL.md`` / ``SKILLSET.md`` documents.

A document is a ``---`` delimited YAML frontmatter block followed by a
Markdown body. Frontmatter values are kept as text (or lists of text) so
that ``version: 1.0`` stays ``"1.0"`` rather than becoming a float.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

import yaml

MISSING_FRONTMATTER = "MISSING_FRONTMATTER"
MALFORMED_YAML = "MALFORMED_YAML"

# Only the `skills` list of a skillset may hold mappings.
NESTED_LIST_KEYS = frozenset({"skills"})

FrontmatterValue = Union[str, list]


@dataclass
class SkillDocument:
    frontmatter: dict[str, FrontmatterValue]
    body: str
    field_lines: dict[str, int]
    body_start_line: int
    total_lines: int

    def scalar(self, key: str) -> str | None:
        """Return a stripped, non-empty text value for ``key`` or None."""
        value = self.frontmatter.get(key)
        if isinstance(value, str) and value.strip():
            return value.strip()
        return None


@dataclass
class ParseFailure:
    kind: str  # MISSING_FRONTMATTER or MALFORMED_YAML
    message: str
    line: int | None = None


@dataclass(frozen=True)
class RelativeLink:
    target: str
    line: int


class _Malformed(Exception):
    def __init__(self, message: str, line: int | None) -> None:
        super().__init__(message)
        self.line = line


def _scalar_text(node: yaml.ScalarNode) -> str:
    if node.tag == "tag:yaml.org,2002:null" and node.style is None:
        return ""
    return node.value


def _convert(node: yaml.Node, key: str, line_offset: int) -> FrontmatterValue:
    line = node.start_mark.line + line_offset
    if isinstance(node, yaml.ScalarNode):
        return _scalar_text(node)
    if isinstance(node, yaml.SequenceNode):
        items: list = []
        for item in node.value:
            if isinstance(item, yaml.ScalarNode):
                items.append(_scalar_text(item))
            elif key in NESTED_LIST_KEYS and isinstance(item, yaml.MappingNode):
                entry = {}
                for k, v in item.value:
                    if not isinstance(k, yaml.ScalarNode) or not isinstance(v, yaml.ScalarNode):
                        raise _Malformed(f"nested structure in '{key}' entry", v.start_mark.line + line_offset)
                    entry[k.value] = _scalar_text(v)
                items.append(entry)
            else:
                raise _Malformed(f"nested structure in field '{key}'", item.start_mark.line + line_offset)
        return items
    raise _Malformed(f"field '{key}' must be text or a list", line)


def _parse_block(block: str, line_offset: int) -> tuple[dict, dict]:
    """Parse the frontmatter block; ``line_offset`` maps 0-based block lines to file lines."""
    block_lines = max(1, len(block.splitlines()))
    try:
        for event in yaml.parse(block, Loader=yaml.SafeLoader):
            if isinstance(event, yaml.AliasEvent) or getattr(event, "anchor", None):
                raise _Malformed("YAML anchors and aliases are not supported", event.start_mark.line + line_offset)
        root = yaml.compose(block, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None) or getattr(exc, "context_mark", None)
        line = None
        if mark is not None:
            line = min(mark.line, block_lines - 1) + line_offset
        problem = getattr(exc, "problem", None) or str(exc)
        raise _Malformed(problem, line) from exc

    if root is None:
        return {}, {}
    if not isinstance(root, yaml.MappingNode):
        raise _Malformed("frontmatter must be a mapping", root.start_mark.line + line_offset)

    frontmatter: dict[str, FrontmatterValue] = {}
    lines: dict[str, int] = {}
    for key_node, value_node in root.value:
        if not isinstance(key_node, yaml.ScalarNode):
            raise _Malformed("frontmatter keys must be scalars", key_node.start_mark.line + line_offset)
        key = key_node.value
        frontmatter[key] = _convert(value_node, key, line_offset)
        lines[key] = key_node.start_mark.line + line_offset
    return frontmatter, lines


def parse_skill_document(file_text: str) -> SkillDocument | ParseFailure:
    """Split ``file_text`` into frontmatter and body.

    Returns a :class:`ParseFailure` (never raises) when the delimiters are
    missing or the block is not valid YAML.
    """
    if file_text.startswith("\ufeff"):
        file_text = file_text[1:]
    lines = file_text.splitlines(keepends=True)
    total_lines = len(lines)

    if not lines or lines[0].rstrip("\r\n") != "---":
        return ParseFailure(MISSING_FRONTMATTER, "YAML frontmatter missing (file must start with '---')", 1)
    closing = None
    for idx in range(1, len(lines)):
        if lines[idx].rstrip("\r\n") == "---":
            closing = idx
            break
    if closing is None:
        return ParseFailure(MISSING_FRONTMATTER, "YAML frontmatter not closed (no terminating '---')", 1)

    block = "".join(lines[1:closing])
    try:
        # block line 0 is file line 2
        frontmatter, field_lines = _parse_block(block, line_offset=2)
    except _Malformed as exc:
        return ParseFailure(MALFORMED_YAML, f"YAML frontmatter malformed: {exc}", exc.line)

    return SkillDocument(
        frontmatter=frontmatter,
        body="".join(lines[closing + 1:]),
        field_lines=field_lines,
        body_start_line=closing + 2,
        total_lines=total_lines,
    )


_FENCE = re.compile(r"^\s{0,3}(`{3,}|~{3,})")
_INLINE_LINK = re.compile(r"!?\[[^\]]*\]\(\s*<?([^)\s>]+)>?(?:\s+[\"'(][^)]*)?\)")
_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")


def _is_relative(target: str) -> bool:
    if not target or target.startswith("#") or "://" in target:
        return False
    if target.lower().startswith("mailto:"):
        return False
    return not _SCHEME.match(target)


def extract_relative_links(body: str) -> list[RelativeLink]:
    """Relative targets of inline links and images, with 1-based body line numbers.

    Links inside fenced code blocks are skipped. Duplicates are kept.
    """
    links: list[RelativeLink] = []
    fence: str | None = None
    for lineno, line in enumerate(body.splitlines(), start=1):
        m = _FENCE.match(line)
        if m:
            marker = m.group(1)
            if fence is None:
                fence = marker
                continue
            if marker[0] == fence[0] and len(marker) >= len(fence):
                fence = None
                continue
        if fence is not None:
            continue
        for link in _INLINE_LINK.finditer(line):
            target = link.group(1)
            if _is_relative(target):
                links.append(RelativeLink(target, lineno))
    return links


def count_words(text: str) -> int:
    return len(text.split())


def word_count_of(value: FrontmatterValue | None) -> int:
    """Word count of a frontmatter value; list items are joined."""
    if value is None:
        return 0
    if isinstance(value, list):
        return sum(count_words(v) for v in value if isinstance(v, str))
    return count_words(value)
