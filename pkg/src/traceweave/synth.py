"""Deterministic synthetic corpora: chat files, a shadow repo, ground truth.

Every generated commit-file with added lines gets a labeled truth entry, so
the corpus doubles as an exact oracle for attribution. The same seed always
produces byte-identical chat/truth files and the same commit contents.
"""
from __future__ import annotations

import enum
import json
import random
import subprocess
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError
from .models import hash_user_id

TRUTH_SCHEMA = "recap-truth-v1"

_BASE_TS_S = 1_767_225_600  # 2026-01-01T00:00:00Z
_SESSION_GAP_S = 2400  # 40 min between sessions, above the 30-min segmentation gap

_SRC_PATHS = ("src/app.py", "src/views.py", "src/models.py")
_DOC_PATH = "docs/notes.md"
_ALL_PATHS = _SRC_PATHS + (_DOC_PATH,)
_PASTE_PATH = "src/pasted_snippets.py"


class Perturbation(str, enum.Enum):
    NONE = "none"
    WHITESPACE = "whitespace"
    PARTIAL_REWRITE = "partial_rewrite"
    EXTERNAL_PASTE = "external_paste"


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_users: int = 1
    sessions_per_user: int = 1
    prompts_per_session: int = 2
    p_accept: float = 1.0
    perturbation: Perturbation = Perturbation.NONE
    partial_rewrite_fraction: float = 0.4
    debounce_s: int = 5
    max_interval_s: int = 30

    def __post_init__(self):
        if min(self.n_users, self.sessions_per_user, self.prompts_per_session) < 1:
            raise ValueError("n_users, sessions_per_user, prompts_per_session must be >= 1")
        if not (0.0 <= self.p_accept <= 1.0):
            raise ValueError("p_accept must be in [0, 1]")


@dataclass(frozen=True)
class TruthEntry:
    user_hash: str
    commit_seq: int
    file_path: str
    origin: str  # human | copilot | external_suspected
    request_id: str | None = None

    def to_dict(self) -> dict:
        out: dict = {
            "user_hash": self.user_hash,
            "commit_seq": self.commit_seq,
            "file_path": self.file_path,
            "origin": self.origin,
        }
        if self.request_id is not None:
            out["request_id"] = self.request_id
        return out


@dataclass
class GroundTruth:
    entries: list[TruthEntry] = field(default_factory=list)

    def by_key(self) -> dict[tuple[str, int, str], TruthEntry]:
        return {(e.user_hash, e.commit_seq, e.file_path): e for e in self.entries}

    def dump(self) -> str:
        body = {
            "schema": TRUTH_SCHEMA,
            "entries": [e.to_dict() for e in sorted(
                self.entries, key=lambda e: (e.user_hash, e.commit_seq, e.file_path))],
        }
        return json.dumps(body, indent=2) + "\n"

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("schema") != TRUTH_SCHEMA:
            raise CorpusError(f"unrecognized truth schema {data.get('schema')!r} in {path}")
        return cls(entries=[
            TruthEntry(
                user_hash=e["user_hash"],
                commit_seq=int(e["commit_seq"]),
                file_path=e["file_path"],
                origin=e["origin"],
                request_id=e.get("request_id"),
            )
            for e in data["entries"]
        ])


# One fixture bank per behavior code; the classifier coverage test walks this
# table, so bank prompts and rule patterns stay consistent by construction.
PROMPT_BANK: dict[str, list[str]] = {
    "ai_explain_bug_or_error": [
        "TypeError: takes 1 positional argument but 2 were given -- why?",
        "I'm getting a KeyError when loading the config, can you explain?",
        "why does this test fail with an AssertionError?",
    ],
    "ai_explain_code_or_api": [
        "what does this decorator do?",
        "explain this function and its return value",
        "how does the session api work here?",
    ],
    "ai_explain_concepts": [
        "what is a generator in python?",
        "explain the difference between threads and processes",
        "explain the concept of idempotency",
    ],
    "ai_understand_codebase": [
        "where is the session upload handled in this repo?",
        "which file defines the retry policy?",
        "help me navigate the project structure",
    ],
    "ai_suggest_steps_or_plan": [
        "give me a step-by-step plan to add caching",
        "outline the steps to migrate the database",
        "what's the workflow for adding a new endpoint?",
    ],
    "ai_breakdown_intent": [
        "break down this feature into smaller tasks",
        "decompose the assignment into subtasks",
        "split this goal into pieces i can do one at a time",
    ],
    "ai_improve_prompt": [
        "rewrite my prompt so the model understands it better",
        "how should I reword this prompt?",
        "improve this prompt to get more specific answers",
    ],
    "ai_choose_approach": [
        "which library should I use for websockets?",
        "should I use sqlite or postgres here?",
        "recommend a framework for the admin frontend",
    ],
    "ai_generate_code": [
        "write a function that parses the access file",
        "implement the upload endpoint",
        "create a class for rate limiting",
    ],
    "ai_edit_partial_code": [
        "refactor this function to use a context manager",
        "rename the variable cnt to count in this snippet",
        "change this loop to a list comprehension",
    ],
    "ai_write_documentation": [
        "write a README for this module",
        "add docstrings to these functions",
        "draft a comment explaining this regex",
    ],
    "ai_critique_output": [
        "review this diff for bugs",
        "any issues with my locking strategy?",
        "evaluate whether this handles concurrent writes",
    ],
    "ai_setup_environment": [
        "install the dependencies for this project",
        "set up a virtualenv with python 3.11",
        "configure docker for local development",
    ],
    "ai_git_operations": [
        "how do I resolve this merge conflict?",
        "squash my last two commits",
        "create a branch and cherry-pick the fix",
    ],
    "ai_run_or_deploy": [
        "run the test suite and tell me what breaks",
        "start the dev server on port 8000",
        "deploy the app to staging",
    ],
    "ai_acknowledge": [
        "sounds good, let's go with that approach",
        "got it, that makes sense now",
        "perfect, exactly what I needed",
    ],
    "ai_provide_context": [
        "here is the log output from the server",
        "for context, we are using flask 2.3",
        "pasting the terminal output below",
    ],
}

_BANK_CODES = sorted(PROMPT_BANK)


def _teg_lines(uid: str) -> list[str]:
    # Three lines are unique per proposal, two are shared boilerplate; the
    # largest cross-proposal overlap is therefore 2/5 = 0.4, below the
    # partial threshold, which keeps the oracle exact.
    return [
        f"def gen_{uid}(ctx):",
        f"    val = ctx.get('{uid}')",
        "    if val is None:",
        "        return None",
        f"    return transform_{uid}(val)",
    ]


def _perturb(lines: list[str], mode: Perturbation, fraction: float, rng, uid: str) -> list[str]:
    if mode == Perturbation.WHITESPACE:
        indent = rng.choice(("  ", "    ", "\t"))
        return [indent + line for line in lines]
    if mode == Perturbation.PARTIAL_REWRITE:
        n_replace = round(len(lines) * fraction)
        out = list(lines)
        for k, position in enumerate(sorted(rng.sample(range(len(lines)), n_replace))):
            out[position] = f"    rewritten_{uid}_{k} = manual_fixup()"
        return out
    return list(lines)


def _join(lines: list[str]) -> str:
    return "\n".join(lines) + "\n" if lines else ""


@dataclass
class _Op:
    path: str
    content: str | None  # None deletes the path


@dataclass
class _CommitRecord:
    ts_s: int
    message: str
    ops: list[_Op]


class _UserBuilder:
    """Accumulates one user's chat sessions, commit plan, and truth entries."""

    def __init__(self, user_hash: str, rng, config: SynthConfig, request_counter):
        self.user_hash = user_hash
        self.rng = rng
        self.config = config
        self.files: dict[str, list[str]] = {}
        self.commits: list[_CommitRecord] = []
        self.truth: list[TruthEntry] = []
        self.chat_sessions: list[dict] = []
        self.last_commit_t: int | None = None
        self._next_request = request_counter

    def _commit(self, ts_s: int, message: str, ops: list[_Op], truth_rows: list[tuple[str, str, str | None]]):
        if self.last_commit_t is not None and ts_s <= self.last_commit_t:
            ts_s = self.last_commit_t + 1
        seq = len(self.commits)
        self.commits.append(_CommitRecord(ts_s=ts_s, message=message, ops=ops))
        self.last_commit_t = ts_s
        for path, origin, request_id in truth_rows:
            self.truth.append(TruthEntry(
                user_hash=self.user_hash,
                commit_seq=seq,
                file_path=path,
                origin=origin,
                request_id=request_id,
            ))
        return ts_s

    def _write_file_commit(self, ts_s: int, path: str, new_lines: list[str],
                           kind_word: str, origin: str, request_id: str | None = None) -> int:
        existed = path in self.files
        self.files[path] = new_lines
        message = f"{kind_word} {path}" if kind_word != "AUTO" else (
            f"{'SAVE' if existed else 'CREATE'} {path}")
        return self._commit(ts_s, message, [_Op(path, _join(new_lines))],
                            [(path, origin, request_id)])

    def _human_beat(self, t: int) -> int:
        rng = self.rng
        path = rng.choice(_ALL_PATHS)
        uid = f"h{len(self.commits):04d}"
        base = self.files.get(path, [])

        if len(base) >= 3 and rng.random() < 0.25:
            # Small in-place revision: one line removed, one added.
            revised = list(base)
            revised[len(base) // 2] = f"# revised {uid}"
            t_save = t + rng.randint(5, 20)
            self._write_file_commit(t_save, path, revised, "AUTO", "human")
            return self.last_commit_t + rng.randint(20, 60)

        new_lines = [f"# note {uid}", f"log('checkpoint {uid}')"]
        if rng.random() < 0.5:
            snap_t = t + rng.randint(3, 10)
            self._write_file_commit(snap_t, path, base + new_lines[:1], "DIRTY_SNAPSHOT", "human")
            save_t = snap_t + rng.randint(self.config.debounce_s, self.config.max_interval_s)
            self._write_file_commit(save_t, path, base + new_lines, "AUTO", "human")
        else:
            save_t = t + rng.randint(5, 20)
            self._write_file_commit(save_t, path, base + new_lines, "AUTO", "human")
        return self.last_commit_t + rng.randint(20, 60)

    def _paste_beat(self, t: int) -> int:
        rng = self.rng
        if self.last_commit_t is None:
            self._write_file_commit(t, _DOC_PATH, ["# scratch notes"], "AUTO", "human")
        uid = f"p{len(self.commits):04d}"
        lines = []
        for k in range(30):
            prefix = f"pasted_{uid}_{k:02d} = "
            lines.append(prefix + "x" * (100 - len(prefix)))  # exactly 100 chars per line
        base = self.files.get(_PASTE_PATH, [])
        paste_t = self.last_commit_t + 30  # 3000 chars in 30 s: implied 1200 WPM
        self._write_file_commit(paste_t, _PASTE_PATH, base + lines, "AUTO", "external_suspected")
        return self.last_commit_t + rng.randint(40, 80)

    def _maybe_rename_or_delete(self, t: int) -> None:
        rng = self.rng
        if rng.random() >= 0.3 or _DOC_PATH not in self.files:
            return
        content = self.files[_DOC_PATH]
        if rng.random() < 0.4:
            del self.files[_DOC_PATH]
            self._commit(t + 60, f"DELETE {_DOC_PATH}", [_Op(_DOC_PATH, None)], [])
            return
        if sum(len(l) for l in content) >= 500:
            return  # keep the moved blob well under the external-size threshold
        target = "docs/journal.md"
        if target in self.files:
            return
        del self.files[_DOC_PATH]
        self.files[target] = content
        # 60 s since the previous commit keeps the implied WPM low.
        self._commit(t + 60, f"RENAME {_DOC_PATH} -> {target}",
                     [_Op(_DOC_PATH, None), _Op(target, _join(content))],
                     [(target, "human", None)])

    def build_session(self, session_start: int) -> int:
        rng = self.rng
        cfg = self.config
        session_id = str(uuid.UUID(int=rng.getrandbits(128), version=4))
        requests: list[dict] = []
        t = session_start

        for _ in range(cfg.prompts_per_session):
            code = _BANK_CODES[rng.randrange(len(_BANK_CODES))]
            prompt = rng.choice(PROMPT_BANK[code])
            request_id = f"req{self._next_request():05d}"
            uid = request_id
            path = rng.choice(_SRC_PATHS)
            teg_lines = _teg_lines(uid)

            request: dict = {
                "request_id": request_id,
                "timestamp_ms": t * 1000,
                "prompt": prompt,
                "model": "copilot-default",
                "response": f"Proposed an update to {path}.",
                "is_agent_turn": False,
                "tool_calls": [],
                "text_edit_groups": [{"file_path": path, "lines": teg_lines}],
            }
            if rng.random() < 0.25:
                request["is_agent_turn"] = True
                request["tool_calls"] = [{
                    "tool": "terminal",
                    "args": rng.choice(("npm test", "pytest -q", "python manage.py check")),
                    "exit_code": rng.choice((0, 0, 1)),
                }]
            requests.append(request)

            if rng.random() < cfg.p_accept:
                committed = _perturb(teg_lines, cfg.perturbation, cfg.partial_rewrite_fraction, rng, uid)
                commit_t = t + rng.randint(10, 240)
                base = self.files.get(path, [])
                self._write_file_commit(commit_t, path, base + committed, "AUTO", "copilot", request_id)
                t = self.last_commit_t + rng.randint(20, 60)
            else:
                t += rng.randint(30, 90)

            if rng.random() < 0.7:
                t = self._human_beat(t)

        if cfg.perturbation == Perturbation.EXTERNAL_PASTE:
            t = self._paste_beat(t)

        self._maybe_rename_or_delete(t)
        if self.last_commit_t is not None:
            t = max(t, self.last_commit_t)

        self.chat_sessions.append({
            "schema": "recap-chat-v1",
            "session_id": session_id,
            "user_hash": self.user_hash,
            "requests": requests,
        })
        return t


def _fast_import_stream(commits: list[_CommitRecord]) -> bytes:
    chunks: list[bytes] = []
    for record in commits:
        message = record.message.encode("utf-8")
        chunks.append(b"commit refs/heads/main\n")
        ident = f"Shadow Archiver <archiver@localhost> {record.ts_s} +0000\n"
        chunks.append(b"author " + ident.encode())
        chunks.append(b"committer " + ident.encode())
        chunks.append(b"data %d\n" % len(message))
        chunks.append(message + b"\n")
        for op in record.ops:
            if op.content is None:
                chunks.append(f"D {op.path}\n".encode())
            else:
                blob = op.content.encode("utf-8")
                chunks.append(f"M 100644 inline {op.path}\n".encode())
                chunks.append(b"data %d\n" % len(blob))
                chunks.append(blob + b"\n")
        chunks.append(b"\n")
    return b"".join(chunks)


def _write_repo(repo_dir: Path, commits: list[_CommitRecord]) -> None:
    repo_dir.mkdir(parents=True)
    for cmd in (["git", "init", "--quiet", "-b", "main", str(repo_dir)],):
        proc = subprocess.run(cmd, capture_output=True)
        if proc.returncode != 0:
            raise CorpusError(f"git init failed: {proc.stderr.decode(errors='replace').strip()}")
    proc = subprocess.run(
        ["git", "-C", str(repo_dir), "fast-import", "--quiet"],
        input=_fast_import_stream(commits),
        capture_output=True,
    )
    if proc.returncode != 0:
        raise CorpusError(f"git fast-import failed: {proc.stderr.decode(errors='replace').strip()}")


def generate(config: SynthConfig, out_dir: str | Path) -> GroundTruth:
    """Write chats/, shadow/<user_hash>/, and truth.json under out_dir."""
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        raise CorpusError(f"output directory not empty: {out}")
    (out / "chats").mkdir(parents=True, exist_ok=True)
    (out / "shadow").mkdir(exist_ok=True)

    truth = GroundTruth()
    counter = [0]

    def next_request() -> int:
        counter[0] += 1
        return counter[0]

    for user_index in range(config.n_users):
        raw_id = f"user{user_index + 1:02d}"
        user_hash = hash_user_id(raw_id)
        rng = random.Random(config.seed * 1_000_003 + user_index)
        builder = _UserBuilder(user_hash, rng, config, next_request)

        t = _BASE_TS_S + user_index * 500_000
        for _ in range(config.sessions_per_user):
            t = builder.build_session(t)
            t += _SESSION_GAP_S

        if not builder.commits:
            # Every user must have a repository with at least one commit.
            builder._write_file_commit(t, _DOC_PATH, ["# scratch notes"], "AUTO", "human")

        _write_repo(out / "shadow" / user_hash, builder.commits)
        for session in builder.chat_sessions:
            chat_path = out / "chats" / f"{session['session_id']}.json"
            chat_path.write_text(json.dumps(session, indent=2) + "\n", encoding="utf-8")
        truth.entries.extend(builder.truth)

    (out / "truth.json").write_text(truth.dump(), encoding="utf-8")
    return truth
