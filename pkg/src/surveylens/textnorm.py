"""Text normalization shared by excerpt span location and fidelity checks.

Normalized form: lowercased, punctuation stripped, runs of whitespace
collapsed to single spaces, leading/trailing whitespace removed.  The
mapping variant keeps, for every character of the normalized string, the
index of the character in the original text it came from, so matches in
normalized space can be translated back to source character spans.
"""

from __future__ import annotations

import unicodedata


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize(text: str) -> str:
    return normalize_with_map(text)[0]


def normalize_with_map(text: str) -> tuple[str, list[int]]:
    """Return (normalized, index_map) where index_map[i] is the source
    index of normalized character i."""
    chars: list[str] = []
    index_map: list[int] = []
    pending_space = False
    for i, ch in enumerate(text):
        if _is_punct(ch):
            continue
        if ch.isspace():
            if chars:
                pending_space = True
            continue
        if pending_space:
            # Map the separator to the first source char of the next word;
            # span arithmetic only uses word-start/word-end positions.
            chars.append(" ")
            index_map.append(i)
            pending_space = False
        chars.append(ch.lower())
        index_map.append(i)
    return "".join(chars), index_map


def locate(excerpt: str, source: str) -> tuple[int, int] | None:
    """Find `excerpt` in `source` ignoring case/punctuation/whitespace.

    Returns a (start, end) character span into the original source, or
    None when the normalized excerpt is not a contiguous substring of the
    normalized source (or normalizes to the empty string).
    """
    norm_excerpt = normalize(excerpt)
    if not norm_excerpt:
        return None
    norm_source, index_map = normalize_with_map(source)
    pos = norm_source.find(norm_excerpt)
    if pos < 0:
        return None
    start = index_map[pos]
    end = index_map[pos + len(norm_excerpt) - 1] + 1
    return start, end


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance, two-row dynamic programming."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def edit_ratio(a: str, b: str) -> float:
    """Edit distance normalized by the longer string; 0.0 for two empties."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return edit_distance(a, b) / longest


def best_window_ratio(excerpt_norm: str, source_norm: str) -> float:
    """Smallest normalized edit ratio between the excerpt and any word
    window of the source.  Both inputs must already be normalized."""
    if not excerpt_norm:
        return 0.0 if not source_norm else 1.0
    if not source_norm:
        return 1.0
    if excerpt_norm in source_norm:
        return 0.0
    words = source_norm.split(" ")
    k = len(excerpt_norm.split(" "))
    margin = max(2, k // 4)
    best = edit_ratio(excerpt_norm, source_norm)
    for size in range(max(1, k - margin), min(len(words), k + margin) + 1):
        for start in range(0, len(words) - size + 1):
            window = " ".join(words[start : start + size])
            # Cheap lower bound: length gap alone can rule a window out.
            if abs(len(window) - len(excerpt_norm)) / max(len(window), len(excerpt_norm)) >= best:
                continue
            ratio = edit_ratio(excerpt_norm, window)
            if ratio < best:
                best = ratio
                if best == 0.0:
                    return 0.0
    return best
