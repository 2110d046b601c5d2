"""Walks a shadow git repository (or bundle) into ShadowCommit values.

Traversal is first-parent from the default branch head, oldest commit
first; the initial commit is diffed against the empty tree. Reading is
strictly non-mutating: only plumbing commands run, with optional locks off.
"""
from __future__ import annotations

import logging
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .errors import CorpusError
from .linediff import compute_file_diff
from .models import CommitKind, FileDiff, ShadowCommit, UserRef

log = logging.getLogger(__name__)

_EMPTY_TREE = "4b825dc642cb6eb9a060e54bf8d69288fbee4904"


def _absent(sha: str) -> bool:
    return set(sha) == {"0"}
_GIT_ENV_EXTRA = {"GIT_OPTIONAL_LOCKS": "0"}

_KIND_KEYWORDS = {
    "SAVE": CommitKind.SAVE,
    "CREATE": CommitKind.CREATE,
    "DELETE": CommitKind.DELETE,
    "RENAME": CommitKind.RENAME,
    "DIRTY_SNAPSHOT": CommitKind.DIRTY_SNAPSHOT,
}


@dataclass(frozen=True)
class RepoSource:
    """Either a git repository directory or a git bundle file."""
    path: Path

    @classmethod
    def of(cls, path: str | Path) -> "RepoSource":
        return cls(path=Path(path))

    @property
    def is_bundle(self) -> bool:
        return self.path.is_file()


def _git(repo: Path, *args: str, input_bytes: bytes | None = None) -> bytes:
    import os

    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        input=input_bytes,
        capture_output=True,
        env={**os.environ, **_GIT_ENV_EXTRA},
    )
    if proc.returncode != 0:
        raise CorpusError(f"git {' '.join(args[:2])} failed in {repo}: {proc.stderr.decode(errors='replace').strip()}")
    return proc.stdout


def parse_commit_message(message: str) -> tuple[CommitKind, str | None, str | None]:
    """Map a labeled commit message onto (kind, rename_from, rename_to).

    Grammar: ``SAVE <path>`` | ``CREATE <path>`` | ``DELETE <path>`` |
    ``RENAME <old> -> <new>`` | ``DIRTY_SNAPSHOT <path or —>``.
    Anything unparseable is Unknown, never an error.
    """
    first_line = message.strip().split("\n", 1)[0].strip()
    if not first_line:
        return CommitKind.UNKNOWN, None, None
    keyword, _, rest = first_line.partition(" ")
    kind = _KIND_KEYWORDS.get(keyword)
    if kind is None:
        return CommitKind.UNKNOWN, None, None
    if kind == CommitKind.RENAME:
        old, sep, new = rest.partition(" -> ")
        if not sep or not old.strip() or not new.strip():
            return CommitKind.UNKNOWN, None, None
        return kind, old.strip(), new.strip()
    return kind, None, None


class _BlobReader:
    """One persistent ``git cat-file --batch`` pipe for all blob lookups."""

    def __init__(self, repo: Path):
        import os

        self._proc = subprocess.Popen(
            ["git", "-C", str(repo), "cat-file", "--batch"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            env={**os.environ, **_GIT_ENV_EXTRA},
        )

    def get(self, sha: str) -> bytes:
        assert self._proc.stdin is not None and self._proc.stdout is not None
        self._proc.stdin.write(sha.encode() + b"\n")
        self._proc.stdin.flush()
        header = self._proc.stdout.readline().decode().strip()
        if header.endswith("missing"):
            raise CorpusError(f"blob {sha} missing from repository")
        size = int(header.rsplit(" ", 1)[1])
        payload = self._proc.stdout.read(size)
        self._proc.stdout.read(1)  # trailing newline
        return payload

    def close(self) -> None:
        if self._proc.stdin:
            self._proc.stdin.close()
        self._proc.wait()


def _decode(blob: bytes) -> str:
    return blob.decode("utf-8", errors="replace")


def _changed_files(repo: Path, parent: str, commit: str) -> list[tuple[str, str, str]]:
    """(path, old_sha, new_sha) per changed file; zero sha means absent."""
    out = _git(repo, "diff-tree", "-r", "--no-renames", "-z", parent, commit).decode()
    entries: list[tuple[str, str, str]] = []
    tokens = out.split("\0")
    for meta, path in zip(tokens[::2], tokens[1::2]):
        if not meta.startswith(":"):
            continue
        _, _, old_sha, new_sha, _status = meta[1:].split(" ")
        entries.append((path, old_sha, new_sha))
    entries.sort(key=lambda e: e[0])
    return entries


def read_shadow_history(
    source: RepoSource | str | Path,
    user: UserRef,
    on_warning: Callable[[str], None] | None = None,
) -> list[ShadowCommit]:
    """All commits along first-parent ancestry, oldest first, with line diffs."""
    if not isinstance(source, RepoSource):
        source = RepoSource.of(source)
    warn = on_warning or (lambda msg: log.warning("%s", msg))

    if source.is_bundle:
        with tempfile.TemporaryDirectory(prefix="traceweave-bundle-") as tmp:
            clone = Path(tmp) / "repo"
            proc = subprocess.run(
                ["git", "clone", "--quiet", str(source.path), str(clone)],
                capture_output=True,
            )
            if proc.returncode != 0:
                raise CorpusError(f"cannot clone bundle {source.path}: {proc.stderr.decode(errors='replace').strip()}")
            return _read_repo(clone, user, warn)
    if not source.path.is_dir():
        raise CorpusError(f"shadow repository missing: {source.path}")
    return _read_repo(source.path, user, warn)


def _read_repo(repo: Path, user: UserRef, warn: Callable[[str], None]) -> list[ShadowCommit]:
    raw = _git(repo, "log", "--first-parent", "--reverse", "-z", "--format=%H%x1f%P%x1f%at%x1f%B", "HEAD")
    records = [r for r in raw.decode("utf-8", errors="replace").split("\0") if r]
    if not records:
        raise CorpusError(f"repository has no commits: {repo}")

    reader = _BlobReader(repo)
    try:
        commits: list[ShadowCommit] = []
        for record in records:
            commit_id, parents_field, author_ts, message = record.split("\x1f", 3)
            parents = parents_field.split()
            if len(parents) > 1:
                warn(f"merge commit {commit_id[:12]} in {repo.name}: taking first-parent side")
            parent = parents[0] if parents else _EMPTY_TREE

            kind, rename_from, rename_to = parse_commit_message(message)
            diffs: list[FileDiff] = []
            for path, old_sha, new_sha in _changed_files(repo, parent, commit_id):
                old = None if _absent(old_sha) else _decode(reader.get(old_sha))
                new = None if _absent(new_sha) else _decode(reader.get(new_sha))
                diffs.append(compute_file_diff(old, new, path))

            commits.append(ShadowCommit(
                commit_id=commit_id,
                user=user,
                timestamp_ms=int(author_ts) * 1000,
                kind=kind,
                file_diffs=diffs,
                rename_from=rename_from,
                rename_to=rename_to,
            ))
    finally:
        reader.close()

    out_of_order = any(
        commits[i].timestamp_ms < commits[i - 1].timestamp_ms for i in range(1, len(commits))
    )
    if out_of_order:
        # Never drop events; re-sort and record the anomaly.
        warn(f"commit timestamps out of order in {repo.name}; re-sorting")
        commits.sort(key=lambda c: c.timestamp_ms)
    return commits
