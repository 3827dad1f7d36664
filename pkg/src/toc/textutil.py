"""Shared text primitives: tokenization, stop words, sentence splitting.

The stop-word list ships as a versioned data file so every component
(scope comparison, evidence retrieval, the mock examiner) filters the
same 50 function words.
"""

from __future__ import annotations

import re
from collections import Counter
from importlib import resources

_WORD = re.compile(r"[a-z0-9]+")

# sentence boundaries are ". " and "; "; these endings never close a sentence
ABBREVIATIONS = (
    "e.g.", "i.e.", "etc.", "cf.", "fig.", "figs.", "no.", "nos.",
    "u.s.", "pat.", "col.", "al.", "vs.", "approx.",
)


def load_stopwords() -> frozenset[str]:
    text = resources.files("toc").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    words = [line.strip() for line in text.splitlines()
             if line.strip() and not line.startswith("#")]
    return frozenset(words)


STOPWORDS = load_stopwords()


def tokens(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    return [t for t in tokens(text) if t not in STOPWORDS]


def content_token_set(text: str) -> frozenset[str]:
    return frozenset(content_tokens(text))


def content_token_counts(text: str) -> "Counter[str]":
    return Counter(content_tokens(text))


def _ends_with_abbreviation(fragment: str) -> bool:
    low = fragment.lower().rstrip()
    return any(low.endswith(abbr) for abbr in ABBREVIATIONS)


def split_sentences(text: str) -> list[str]:
    """Split on ". " and "; " with an abbreviation guard.

    Returned sentences are verbatim substrings of the input (modulo
    surrounding whitespace).
    """
    out: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".;" and i + 1 < n and text[i + 1] in " \t\n":
            fragment = text[start:i + 1]
            if ch == "." and _ends_with_abbreviation(fragment):
                i += 1
                continue
            stripped = fragment.strip()
            if stripped:
                out.append(stripped)
            start = i + 1
        i += 1
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out
