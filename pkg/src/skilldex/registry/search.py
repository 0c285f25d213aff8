"""Full-text ranking and trigram similarity used by registry search."""

from __future__ import annotations

import re

_TOKEN = re.compile(r"[a-z0-9]+")

NAME_WEIGHT = 2
DESCRIPTION_WEIGHT = 1
TRIGRAM_THRESHOLD = 0.3


def tokenize(text: str) -> list[str]:
    """Lowercase maximal alphanumeric runs, in order, duplicates kept."""
    return _TOKEN.findall(text.lower())


def fts_rank(query: str, name: str, description: str) -> int:
    q = set(tokenize(query))
    return (NAME_WEIGHT * len(q & set(tokenize(name)))
            + DESCRIPTION_WEIGHT * len(q & set(tokenize(description))))


def trigrams(text: str) -> set[str]:
    """pg_trgm style trigrams: each word padded with two leading blanks and one trailing."""
    grams: set[str] = set()
    for word in tokenize(text):
        padded = f"  {word} "
        grams.update(padded[i:i + 3] for i in range(len(padded) - 2))
    return grams


def trigram_similarity(a: str, b: str) -> float:
    ta, tb = trigrams(a), trigrams(b)
    union = ta | tb
    if not union:
        return 0.0
    return len(ta & tb) / len(union)
