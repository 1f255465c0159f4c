from __future__ import annotations

import re
from dataclasses import dataclass, field, fields

DEFAULT_KEYWORDS: tuple[str, ...] = (
    "fix", "bug", "feature", "implement", "add", "refactor", "clean", "test", "doc", "merge",
    "update", "remove", "improve", "error", "fail", "change", "release", "style", "format", "rename",
)

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def count_keywords(message: str, keywords) -> dict[str, int]:
    """Case-insensitive whole-word counts; tokens are runs of ASCII letters/digits."""
    keywords = list(keywords)
    if not keywords:
        raise ValueError("keyword list must not be empty")
    counts = dict.fromkeys(keywords, 0)
    for token in _TOKEN_SPLIT.split(message.lower()):
        if token in counts:
            counts[token] += 1
    return counts


@dataclass(frozen=True)
class CommitRecord:
    id: str
    parent_ids: tuple[str, ...]
    author_timestamp: int
    message: str
    files_added_gross: int = 0
    files_modified_gross: int = 0
    files_deleted_gross: int = 0
    files_renamed_gross: int = 0
    files_added_net: int = 0
    files_modified_net: int = 0
    files_deleted_net: int = 0
    files_renamed_net: int = 0
    lines_added_gross: int = 0
    lines_deleted_gross: int = 0
    lines_added_net: int = 0
    lines_deleted_net: int = 0
    keyword_counts: dict[str, int] = field(default_factory=dict)
    density: float = 0.0
    is_merge: bool = False
    is_initial: bool = False
    sojourn_seconds: int | None = None

    @property
    def gross_lines(self) -> int:
        return self.lines_added_gross + self.lines_deleted_gross

    @property
    def net_lines(self) -> int:
        return self.lines_added_net + self.lines_deleted_net

    @property
    def first_parent(self) -> str | None:
        return self.parent_ids[0] if self.parent_ids else None


COUNTER_FIELDS: tuple[str, ...] = tuple(
    f.name for f in fields(CommitRecord) if f.name.startswith(("files_", "lines_"))
)
