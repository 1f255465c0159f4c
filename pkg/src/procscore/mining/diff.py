"""Line-level LCS diffs and gross/net changed-line counts."""

from __future__ import annotations

import difflib
from typing import NamedTuple

from procscore.errors import InvariantViolation, UnsupportedBinaryContent
from procscore.mining.lines import LanguageProfile, LineClass, classify_lines

# beyond this edit distance the O(D^2) trace gets large; use difflib instead
MAX_MYERS_EDITS = 2000


class DiffStats(NamedTuple):
    added_gross: int
    deleted_gross: int
    added_net: int
    deleted_net: int


def decode_text(content: str | bytes | None) -> str | None:
    if content is None or isinstance(content, str):
        return content
    if b"\x00" in content[:8000]:
        raise UnsupportedBinaryContent("content contains NUL bytes")
    try:
        return content.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnsupportedBinaryContent(f"not valid UTF-8: {exc}") from None


def _myers(a: list, b: list) -> tuple[list[int], list[int]] | None:
    """Shortest edit script; returns (deleted indices in a, added indices in b)."""
    n, m = len(a), len(b)
    v = {1: 0}
    trace = []
    for d in range(min(n + m, MAX_MYERS_EDITS) + 1):
        trace.append(dict(v))
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[k - 1] < v[k + 1]):
                x = v[k + 1]
            else:
                x = v[k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k] = x
            if x >= n and y >= m:
                return _backtrack(trace, n, m)
    return None


def _backtrack(trace: list[dict], n: int, m: int) -> tuple[list[int], list[int]]:
    deleted, added = [], []
    x, y = n, m
    for d in range(len(trace) - 1, -1, -1):
        v = trace[d]
        k = x - y
        if k == -d or (k != d and v[k - 1] < v[k + 1]):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = v[prev_k]
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            x -= 1
            y -= 1
        if d > 0:
            if x == prev_x:
                added.append(prev_y)
            else:
                deleted.append(prev_x)
        x, y = prev_x, prev_y
    deleted.reverse()
    added.reverse()
    return deleted, added


def line_diff(old_lines: list[str], new_lines: list[str]) -> tuple[list[int], list[int]]:
    """Indices of deleted old lines and added new lines under an LCS alignment.

    A modified line shows up as one deletion plus one addition.
    """
    lo = 0
    while lo < len(old_lines) and lo < len(new_lines) and old_lines[lo] == new_lines[lo]:
        lo += 1
    hi_old, hi_new = len(old_lines), len(new_lines)
    while hi_old > lo and hi_new > lo and old_lines[hi_old - 1] == new_lines[hi_new - 1]:
        hi_old -= 1
        hi_new -= 1
    a, b = old_lines[lo:hi_old], new_lines[lo:hi_new]
    result = _myers(a, b)
    if result is None:
        deleted, added = [], []
        matcher = difflib.SequenceMatcher(None, a, b, autojunk=False)
        for tag, i1, i2, j1, j2 in matcher.get_opcodes():
            if tag in ("delete", "replace"):
                deleted.extend(range(i1, i2))
            if tag in ("insert", "replace"):
                added.extend(range(j1, j2))
    else:
        deleted, added = result
    return [i + lo for i in deleted], [j + lo for j in added]


def diff_net_stats(
    old_text: str | bytes | None,
    new_text: str | bytes | None,
    profile: LanguageProfile,
    ext: str,
) -> DiffStats:
    """Gross and net added/deleted line counts between two file versions.

    ``None`` on either side means the file was added (old) or deleted (new).
    Net counts drop changed lines that classify as comment or blank, with
    block-comment state threaded through each whole file version.
    """
    if old_text is None and new_text is None:
        raise ValueError("at least one of old_text/new_text must be present")
    old = decode_text(old_text)
    new = decode_text(new_text)
    old_lines = old.splitlines() if old is not None else []
    new_lines = new.splitlines() if new is not None else []
    deleted, added = line_diff(old_lines, new_lines)
    old_cls = classify_lines(old_lines, profile, ext)
    new_cls = classify_lines(new_lines, profile, ext)
    deleted_net = sum(1 for i in deleted if old_cls[i] is LineClass.CODE)
    added_net = sum(1 for j in added if new_cls[j] is LineClass.CODE)
    return DiffStats(len(added), len(deleted), added_net, deleted_net)


def compute_density(gross_lines: int, net_lines: int) -> float:
    """Net over gross changed lines; 0.0 when nothing changed."""
    if gross_lines < 0 or net_lines < 0:
        raise InvariantViolation("line counts must be nonnegative")
    if net_lines > gross_lines:
        raise InvariantViolation(f"net lines ({net_lines}) exceed gross lines ({gross_lines})")
    if gross_lines == 0:
        return 0.0
    return net_lines / gross_lines
