"""Span search with offset-preserving text normalization.

Model output rarely matches the section text byte-for-byte: extra whitespace
gets collapsed, parenthesized asides get skipped, sentence-initial casing
drifts.  The matcher therefore searches a ladder of normalized views of the
section text, each carrying a character-level map back to the original string,
so every hit resolves to exact offsets in the untouched section text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class SpanNotLocatable(Exception):
    """Answer text cannot be found in the section text under any normalization."""


@dataclass(frozen=True)
class TextView:
    """A normalized rendering of a source string with per-char origin indices."""

    text: str
    origin: tuple[int, ...]  # origin[i] = index in the source string

    def to_source_interval(self, start: int, end: int) -> tuple[int, int]:
        return self.origin[start], self.origin[end - 1] + 1


def identity_view(source: str) -> TextView:
    return TextView(source, tuple(range(len(source))))


def collapse_whitespace(view: TextView) -> TextView:
    """Collapse whitespace runs to single spaces, dropping edge whitespace."""
    chars: list[str] = []
    origin: list[int] = []
    pending_space_origin = -1
    for ch, src in zip(view.text, view.origin):
        if ch.isspace():
            if chars:
                pending_space_origin = src
        else:
            if pending_space_origin >= 0:
                chars.append(" ")
                origin.append(pending_space_origin)
                pending_space_origin = -1
            chars.append(ch)
            origin.append(src)
    return TextView("".join(chars), tuple(origin))


def strip_parentheses(view: TextView) -> TextView:
    """Drop '( ... )' regions (nesting-aware); unbalanced parens are kept."""
    chars: list[str] = []
    origin: list[int] = []
    depth = 0
    held: list[tuple[str, int]] = []  # chars inside a possibly-unbalanced region
    for ch, src in zip(view.text, view.origin):
        if ch == "(":
            depth += 1
            held.append((ch, src))
        elif ch == ")" and depth > 0:
            depth -= 1
            if depth == 0:
                held = []
        elif depth > 0:
            held.append((ch, src))
        else:
            chars.append(ch)
            origin.append(src)
    for ch, src in held:  # no closing paren arrived; restore verbatim
        chars.append(ch)
        origin.append(src)
    return TextView("".join(chars), tuple(origin))


def _normalize_needle(needle: str) -> str:
    return re.sub(r"\s+", " ", needle).strip()


def _views(source: str) -> list[TextView]:
    base = identity_view(source)
    ws = collapse_whitespace(base)
    no_parens = collapse_whitespace(strip_parentheses(base))
    return [base, ws, no_parens]


def find_span(needle: str, source: str) -> tuple[int, int] | None:
    """Locate `needle` in `source`, returning original-character offsets.

    Search order: raw text, whitespace-collapsed, parentheses-stripped — each
    case-sensitive first, then case-insensitive.  On multiple occurrences the
    earliest match wins.  Returns None when nothing matches.
    """
    if not needle or not needle.strip():
        return None
    base, ws, no_parens = _views(source)
    norm = _normalize_needle(needle)
    pairs = [(base, needle), (ws, norm), (no_parens, norm)]
    for casefold in (False, True):
        for view, ndl in pairs:
            hay = view.text.lower() if casefold else view.text
            pat = ndl.lower() if casefold else ndl
            if not pat:
                continue
            pos = hay.find(pat)
            if pos >= 0:
                return view.to_source_interval(pos, pos + len(pat))
    return None


def occurs_in(needle: str, source: str) -> bool:
    return find_span(needle, source) is not None
