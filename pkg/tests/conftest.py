"""Shared fixtures: hand-built git repos and in-memory corpus builders."""
from __future__ import annotations

import json
import os
import random
import subprocess
from pathlib import Path

import pytest

from traceweave.models import (
    ChatRequest,
    ChatSession,
    CommitKind,
    FileDiff,
    ShadowCommit,
    TextEditGroup,
    UserRef,
    hash_user_id,
)

USER = UserRef(hash_user_id("fixture-user"))


def run_git(repo: Path, *args: str, ts: int | None = None) -> str:
    """Run git with a pinned identity and, optionally, pinned dates."""
    env = {
        **os.environ,
        "GIT_AUTHOR_NAME": "Fixture",
        "GIT_AUTHOR_EMAIL": "fixture@localhost",
        "GIT_COMMITTER_NAME": "Fixture",
        "GIT_COMMITTER_EMAIL": "fixture@localhost",
    }
    if ts is not None:
        env["GIT_AUTHOR_DATE"] = f"@{ts} +0000"
        env["GIT_COMMITTER_DATE"] = f"@{ts} +0000"
    proc = subprocess.run(["git", "-C", str(repo), *args], env=env, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


@pytest.fixture
def git_repo(tmp_path):
    """Empty initialized repository plus a commit helper.

    The helper writes/removes files and commits with a pinned timestamp, so
    tests construct known histories (this is the diff oracle: the content
    written here is exactly what the reader must reconstruct).
    """
    repo = tmp_path / "repo"
    repo.mkdir()
    run_git(repo, "init", "--quiet", "-b", "main")

    base_ts = 1_767_225_600

    def commit(message: str, files: dict[str, str | None], offset_s: int) -> None:
        for rel, content in files.items():
            target = repo / rel
            if content is None:
                run_git(repo, "rm", "--quiet", rel)
            else:
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(content, encoding="utf-8")
                run_git(repo, "add", rel)
        run_git(repo, "commit", "--quiet", "--allow-empty", "-m", message, ts=base_ts + offset_s)

    return repo, commit, base_ts


def write_chat_file(directory: Path, session_id: str, user_hash: str, requests: list[dict]) -> Path:
    path = directory / f"{session_id}.json"
    path.write_text(json.dumps({
        "schema": "recap-chat-v1",
        "session_id": session_id,
        "user_hash": user_hash,
        "requests": requests,
    }, indent=2), encoding="utf-8")
    return path


def make_request(request_id: str, ts_ms: int, prompt: str = "implement the upload endpoint",
                 tegs: list[tuple[str, list[str]]] = (), tool_calls: list = (),
                 agent: bool = False) -> ChatRequest:
    return ChatRequest(
        request_id=request_id,
        timestamp_ms=ts_ms,
        prompt_text=prompt,
        is_agent_turn=agent,
        tool_calls=list(tool_calls),
        text_edit_groups=[
            TextEditGroup(file_path=p, proposed_lines=lines, request_id=request_id)
            for p, lines in tegs
        ],
    )


def make_session(session_id: str, requests: list[ChatRequest], user: UserRef = USER) -> ChatSession:
    return ChatSession(session_id=session_id, user=user, requests=requests)


def make_commit(commit_id: str, ts_ms: int, diffs: list[FileDiff],
                kind: CommitKind = CommitKind.SAVE, user: UserRef = USER) -> ShadowCommit:
    return ShadowCommit(commit_id=commit_id, user=user, timestamp_ms=ts_ms, kind=kind, file_diffs=diffs)


def added_diff(path: str, lines: list[str]) -> FileDiff:
    return FileDiff(
        file_path=path,
        added_lines=list(lines),
        net_new_chars=sum(len(l) for l in lines),
    )


def random_corpus(rng: random.Random):
    """Small random (commits, sessions) pair for attribution fuzzing.

    Some commits copy proposal lines verbatim, some copy a subset, some are
    pure human noise; timing is random so candidates fall inside and outside
    the window.
    """
    sessions = []
    all_tegs: list[tuple[int, str, list[str]]] = []  # (ts_ms, path, lines)
    t = 0
    for s in range(rng.randint(1, 3)):
        requests = []
        for r in range(rng.randint(1, 4)):
            t += rng.randint(1, 400) * 1000
            rid = f"r{s}-{r}"
            path = rng.choice(("a.py", "b.py"))
            lines = [f"line_{s}_{r}_{k}" for k in range(rng.randint(1, 6))]
            requests.append(make_request(rid, t, tegs=[(path, lines)]))
            all_tegs.append((t, path, lines))
        sessions.append(make_session(f"s{s}", requests))

    commits = []
    ct = 0
    for c in range(rng.randint(1, 8)):
        ct += rng.randint(1, 300) * 1000
        path = rng.choice(("a.py", "b.py"))
        mode = rng.random()
        if mode < 0.4 and all_tegs:
            _, teg_path, lines = rng.choice(all_tegs)
            take = rng.randint(1, len(lines))
            added = rng.sample(lines, take) + [f"noise_{c}"] * rng.randint(0, 2)
            commits.append(make_commit(f"c{c:03d}", ct, [added_diff(teg_path, added)]))
        elif mode < 0.8:
            added = [f"human_{c}_{k}" for k in range(rng.randint(1, 5))]
            commits.append(make_commit(f"c{c:03d}", ct, [added_diff(path, added)]))
        else:
            commits.append(make_commit(f"c{c:03d}", ct, []))
    return commits, sessions
