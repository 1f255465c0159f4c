import os
import subprocess
from pathlib import Path

import pytest

GIT_ENV = {
    "GIT_AUTHOR_NAME": "Test Author",
    "GIT_AUTHOR_EMAIL": "author@example.org",
    "GIT_COMMITTER_NAME": "Test Author",
    "GIT_COMMITTER_EMAIL": "author@example.org",
    "GIT_CONFIG_NOSYSTEM": "1",
    "HOME": "/nonexistent",
}

# (message, author unix time, {path: content or None to delete})
THREE_COMMITS = [
    (
        "Implement main entry point",
        1_600_000_000,
        {
            "main.c": (
                "// header comment\n"
                "int main() {\n"
                "    /* block\n"
                "       comment */\n"
                "    return 0;\n"
                "\n"
                "}\n"
            ),
            "util.py": "# util\ndef f():\n    return 1\n",
        },
    ),
    (
        "Fix exit code",
        1_600_003_600,
        {
            "main.c": (
                "// header comment\n"
                "int main() {\n"
                "    /* block\n"
                "       comment */\n"
                "    // exit code\n"
                "    return 1;\n"
                "\n"
                "}\n"
            ),
        },
    ),
    (
        "Update docs and add logo",
        1_600_090_000,
        {
            "util.py": "# utilities\ndef f():\n    return 1\n",
            "logo.bin": b"\x89PNG\x00\x01\x02",
        },
    ),
]


def git(repo: Path, *args: str, when: int | None = None) -> str:
    env = dict(os.environ, **GIT_ENV)
    if when is not None:
        env["GIT_AUTHOR_DATE"] = f"@{when} +0000"
        env["GIT_COMMITTER_DATE"] = f"@{when} +0000"
    out = subprocess.run(["git", "-C", str(repo), *args], env=env, check=True,
                         stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    return out.stdout.decode().strip()


def write_commit(repo: Path, message: str, when: int, files: dict) -> str:
    for name, content in files.items():
        target = repo / name
        if content is None:
            git(repo, "rm", "-q", name)
            continue
        target.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            target.write_bytes(content)
        else:
            target.write_text(content, encoding="utf-8", newline="\n")
        git(repo, "add", name)
    git(repo, "commit", "-q", "-m", message, when=when)
    return git(repo, "rev-parse", "HEAD")


def init_repo(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    git(path, "init", "-q", "-b", "main")
    return path


def build_repo(path: Path, commits) -> tuple[Path, list[str]]:
    repo = init_repo(path)
    shas = [write_commit(repo, msg, when, files) for msg, when, files in commits]
    return repo, shas


@pytest.fixture
def three_commit_repo(tmp_path):
    return build_repo(tmp_path / "repo3", THREE_COMMITS)


@pytest.fixture
def merge_repo(tmp_path):
    repo = init_repo(tmp_path / "merge")
    base = write_commit(repo, "initial", 1_600_000_000, {"a.txt": "one\n"})
    git(repo, "checkout", "-q", "-b", "side")
    side = write_commit(repo, "add feature b", 1_600_000_100, {"b.txt": "two\n"})
    git(repo, "checkout", "-q", "main")
    main2 = write_commit(repo, "fix a", 1_600_000_200, {"a.txt": "one!\n"})
    git(repo, "merge", "-q", "--no-ff", "-m", "merge side", "side", when=1_600_000_300)
    merge = git(repo, "rev-parse", "HEAD")
    return repo, {"base": base, "side": side, "main2": main2, "merge": merge}


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
