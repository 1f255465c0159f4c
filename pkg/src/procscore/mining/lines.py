"""Per-language comment syntax and line classification."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path


class LineClass(enum.Enum):
    CODE = "code"
    COMMENT = "comment"
    BLANK = "blank"


@dataclass(frozen=True)
class CommentSyntax:
    line_markers: tuple[str, ...] = ()
    block_pairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if len(set(self.line_markers)) != len(self.line_markers):
            raise ValueError(f"duplicate line comment markers: {self.line_markers}")
        for opener, closer in self.block_pairs:
            if not opener or not closer:
                raise ValueError("block comment markers must be non-empty strings")


C_LIKE = CommentSyntax(("//",), (("/*", "*/"),))
HASH = CommentSyntax(("#",))
DASHES = CommentSyntax(("--",))
MARKUP = CommentSyntax((), (("<!--", "-->"),))
# heuristic for unknown extensions
FALLBACK = CommentSyntax(("#", "//"))

_DEFAULT_TABLE: dict[str, CommentSyntax] = {}
for _exts, _syntax in [
    ("c h cc cpp cxx hpp hh java cs js jsx ts tsx go rs swift kt kts scala dart groovy m mm", C_LIKE),
    ("py pyw rb sh bash zsh pl pm r yaml yml toml cfg conf mk cmake ps1 tf dockerfile", HASH),
    ("sql ada adb ads elm", DASHES),
    ("html htm xml xhtml svg vue md xaml csproj", MARKUP),
]:
    for _ext in _exts.split():
        _DEFAULT_TABLE[_ext] = _syntax
_DEFAULT_TABLE["css"] = CommentSyntax((), (("/*", "*/"),))
_DEFAULT_TABLE["scss"] = C_LIKE
_DEFAULT_TABLE["less"] = C_LIKE
_DEFAULT_TABLE["php"] = CommentSyntax(("//", "#"), (("/*", "*/"),))
_DEFAULT_TABLE["lua"] = CommentSyntax(("--",), (("--[[", "]]"),))
_DEFAULT_TABLE["hs"] = CommentSyntax(("--",), (("{-", "-}"),))


@dataclass(frozen=True)
class LanguageProfile:
    """Maps a file extension (lowercase, no dot) to its comment syntax."""

    entries: dict[str, CommentSyntax] = field(default_factory=dict)
    fallback: CommentSyntax = FALLBACK

    def syntax_for(self, ext: str) -> CommentSyntax:
        return self.entries.get(ext.lower().lstrip("."), self.fallback)

    @classmethod
    def default(cls) -> "LanguageProfile":
        return cls(dict(_DEFAULT_TABLE))

    @classmethod
    def from_dict(cls, data: dict) -> "LanguageProfile":
        """``{"ext": {"line": ["//"], "block": [["/*", "*/"]]}, ...}``.

        The reserved key ``"*"`` overrides the fallback syntax. Entries are
        merged over the default table.
        """
        entries = dict(_DEFAULT_TABLE)
        fallback = FALLBACK
        for ext, spec in data.items():
            syntax = CommentSyntax(
                tuple(spec.get("line", ())),
                tuple((str(o), str(c)) for o, c in spec.get("block", ())),
            )
            if ext == "*":
                fallback = syntax
            else:
                entries[ext.lower().lstrip(".")] = syntax
        return cls(entries, fallback)

    @classmethod
    def load(cls, path: str | Path) -> "LanguageProfile":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def extension_of(path: str) -> str:
    name = path.rsplit("/", 1)[-1]
    if "." not in name.lstrip("."):
        return name.lower()
    return name.rsplit(".", 1)[-1].lower()


def _find_first(line: str, start: int, markers) -> tuple[int, str | None]:
    best, which = -1, None
    for m in markers:
        i = line.find(m, start)
        if i != -1 and (best == -1 or i < best or (i == best and len(m) > len(which))):
            best, which = i, m
    return best, which


def classify_line(
    line: str,
    profile: LanguageProfile,
    ext: str,
    in_block: bool = False,
) -> tuple[LineClass, bool]:
    """Classify one source line and thread the block-comment state.

    Any non-comment, non-whitespace character makes the line CODE, so
    ``x = 1; // c`` counts toward the net size.
    """
    syntax = profile.syntax_for(ext)
    openers = {o: c for o, c in syntax.block_pairs}
    closers = tuple(c for _, c in syntax.block_pairs)
    n = len(line)
    pos = 0
    has_code = False
    state = in_block
    while pos < n:
        if state:
            i, closer = _find_first(line, pos, closers)
            if i == -1:
                pos = n
                break
            pos = i + len(closer)
            state = False
            continue
        while pos < n and line[pos].isspace():
            pos += 1
        if pos >= n:
            break
        i, marker = _find_first(line, pos, tuple(syntax.line_markers) + tuple(openers))
        if i == pos:
            if marker in openers:
                state = True
                pos += len(marker)
                continue
            break  # line comment runs to end of line
        has_code = True
        if i == -1 or marker not in openers:
            break
        pos = i
    if not line.strip():
        return LineClass.BLANK, state
    return (LineClass.CODE if has_code else LineClass.COMMENT), state


def classify_lines(lines: list[str], profile: LanguageProfile, ext: str) -> list[LineClass]:
    out = []
    state = False
    for line in lines:
        cls, state = classify_line(line, profile, ext, state)
        out.append(cls)
    return out
