"""Commit extraction from a Git repository through the ``git`` executable."""

from __future__ import annotations

import logging
import subprocess
from dataclasses import dataclass
from pathlib import Path

from procscore.errors import CorruptObject, RepositoryNotFound, UnsupportedBinaryContent
from procscore.mining.diff import compute_density, diff_net_stats
from procscore.mining.lines import LanguageProfile, extension_of
from procscore.mining.records import DEFAULT_KEYWORDS, CommitRecord, count_keywords

log = logging.getLogger(__name__)

GITLINK_MODE = "160000"


@dataclass
class FileChange:
    status: str  # one of A, M, D, R
    old_sha: str | None
    new_sha: str | None
    old_path: str | None
    new_path: str | None
    gitlink: bool = False

    @property
    def path(self) -> str:
        return self.new_path or self.old_path or ""


def _git(repo: Path, *args: str) -> bytes:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        check=False,
    )
    if proc.returncode != 0:
        raise subprocess.CalledProcessError(proc.returncode, args, proc.stdout, proc.stderr)
    return proc.stdout


class _BlobReader:
    """Persistent ``git cat-file --batch`` process."""

    def __init__(self, repo: Path):
        self.proc = subprocess.Popen(
            ["git", "-C", str(repo), "cat-file", "--batch"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )

    def read(self, sha: str) -> bytes:
        self.proc.stdin.write(sha.encode() + b"\n")
        self.proc.stdin.flush()
        header = self.proc.stdout.readline().decode().split()
        if len(header) != 3:
            raise CorruptObject(sha, " ".join(header) or "no response")
        size = int(header[2])
        data = self.proc.stdout.read(size)
        self.proc.stdout.read(1)
        if len(data) != size:
            raise CorruptObject(sha, "short read")
        return data

    def close(self):
        if self.proc.stdin:
            self.proc.stdin.close()
        self.proc.wait()


def _parse_raw_diff(raw: bytes) -> list[FileChange]:
    parts = raw.split(b"\x00")
    changes = []
    i = 0
    while i < len(parts) and parts[i]:
        meta = parts[i].decode().lstrip(":").split()
        old_mode, new_mode, old_sha, new_sha, status = meta[:5]
        kind = status[0]
        if kind in ("R", "C"):
            src, dst = parts[i + 1].decode(), parts[i + 2].decode()
            i += 3
        else:
            src = dst = parts[i + 1].decode()
            i += 2
        gitlink = GITLINK_MODE in (old_mode, new_mode)
        if kind == "A":
            changes.append(FileChange("A", None, new_sha, None, dst, gitlink))
        elif kind == "D":
            changes.append(FileChange("D", old_sha, None, src, None, gitlink))
        elif kind == "R":
            changes.append(FileChange("R", old_sha, new_sha, src, dst, gitlink))
        elif kind == "C":
            # copies are not requested (-C); treat defensively as additions
            changes.append(FileChange("A", None, new_sha, None, dst, gitlink))
        else:  # M, T
            changes.append(FileChange("M", old_sha, new_sha, src, dst, gitlink))
    return changes


def _list_commits(repo: Path) -> list[tuple[str, tuple[str, ...], int, str]]:
    out = _git(repo, "log", "--topo-order", "--reverse", "-z", "--format=%H%x1f%P%x1f%at%x1f%B", "HEAD")
    commits = []
    for entry in out.split(b"\x00"):
        if not entry.strip():
            continue
        sha, parents, ts, message = entry.decode("utf-8", errors="replace").split("\x1f", 3)
        commits.append((sha.strip(), tuple(parents.split()), int(ts), message.rstrip("\n")))
    return commits


def _file_changes(repo: Path, sha: str, parent: str | None) -> list[FileChange]:
    args = ["diff-tree", "-r", "-z", "--no-commit-id", "--raw", "-M"]
    if parent is None:
        raw = _git(repo, *args, "--root", sha)
    else:
        raw = _git(repo, *args, parent, sha)
    return _parse_raw_diff(raw)


def _commit_record(repo: Path, blobs: _BlobReader, sha, parents, ts, message,
                   parent_ts, profile, keywords) -> CommitRecord:
    kinds = ("files_added", "files_modified", "files_deleted", "files_renamed")
    gross = dict.fromkeys(kinds, 0)
    net = dict.fromkeys(kinds, 0)
    lines = {"added_gross": 0, "deleted_gross": 0, "added_net": 0, "deleted_net": 0}
    is_merge = len(parents) >= 2
    if not is_merge:
        key_of = {"A": "files_added", "M": "files_modified", "D": "files_deleted", "R": "files_renamed"}
        for change in _file_changes(repo, sha, parents[0] if parents else None):
            key = key_of[change.status]
            gross[key] += 1
            if change.gitlink:
                continue
            old = blobs.read(change.old_sha) if change.old_sha else None
            new = blobs.read(change.new_sha) if change.new_sha else None
            try:
                stats = diff_net_stats(old, new, profile, extension_of(change.path))
            except UnsupportedBinaryContent:
                log.debug("skipping binary content of %s in %s", change.path, sha)
                continue
            if stats.added_net + stats.deleted_net > 0:
                net[key] += 1
            lines["added_gross"] += stats.added_gross
            lines["deleted_gross"] += stats.deleted_gross
            lines["added_net"] += stats.added_net
            lines["deleted_net"] += stats.deleted_net
    sojourn = None if parent_ts is None else max(0, ts - parent_ts)
    return CommitRecord(
        id=sha,
        parent_ids=tuple(parents),
        author_timestamp=ts,
        message=message,
        files_added_gross=gross["files_added"],
        files_modified_gross=gross["files_modified"],
        files_deleted_gross=gross["files_deleted"],
        files_renamed_gross=gross["files_renamed"],
        files_added_net=net["files_added"],
        files_modified_net=net["files_modified"],
        files_deleted_net=net["files_deleted"],
        files_renamed_net=net["files_renamed"],
        lines_added_gross=lines["added_gross"],
        lines_deleted_gross=lines["deleted_gross"],
        lines_added_net=lines["added_net"],
        lines_deleted_net=lines["deleted_net"],
        keyword_counts=count_keywords(message, keywords),
        density=compute_density(
            lines["added_gross"] + lines["deleted_gross"],
            lines["added_net"] + lines["deleted_net"],
        ),
        is_merge=is_merge,
        is_initial=not parents,
        sojourn_seconds=sojourn,
    )


def mine_repository(
    repo_path: str | Path,
    profile: LanguageProfile | None = None,
    keywords=DEFAULT_KEYWORDS,
) -> list[CommitRecord]:
    """One record per commit reachable from HEAD, oldest first in topological order.

    Merge commits are kept with ``is_merge=True`` and zero size counters;
    downstream classification filters them out.
    """
    repo = Path(repo_path)
    profile = profile or LanguageProfile.default()
    if not repo.exists():
        raise RepositoryNotFound(f"no such path: {repo}")
    try:
        _git(repo, "rev-parse", "--git-dir")
    except subprocess.CalledProcessError:
        raise RepositoryNotFound(f"not a git repository: {repo}") from None
    try:
        _git(repo, "rev-parse", "--verify", "HEAD")
    except subprocess.CalledProcessError:
        raise RepositoryNotFound(f"repository has no commits: {repo}") from None

    try:
        commits = _list_commits(repo)
    except subprocess.CalledProcessError as exc:
        raise CorruptObject("HEAD", exc.stderr.decode(errors="replace").strip()) from None
    timestamps = {sha: ts for sha, _, ts, _ in commits}
    blobs = _BlobReader(repo)
    records = []
    try:
        for sha, parents, ts, message in commits:
            parent_ts = timestamps.get(parents[0]) if parents else None
            try:
                records.append(
                    _commit_record(repo, blobs, sha, parents, ts, message, parent_ts, profile, keywords)
                )
            except subprocess.CalledProcessError as exc:
                raise CorruptObject(sha, exc.stderr.decode(errors="replace").strip()) from None
    finally:
        blobs.close()
    return records
