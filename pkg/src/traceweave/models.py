"""Domain types, the on-disk timeline export schema, and its validator.

Everything here is an immutable value object. Wire format: one JSON document
per user, lower_snake_case field names, ``schema_version`` first. Unknown
fields found on read are kept in an ``extra`` dict and re-emitted verbatim
so newer exports survive a round-trip through older code.
"""
from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any

TIMELINE_SCHEMA_VERSION = 1

_USER_HASH_RE = re.compile(r"^[0-9a-f]{64}$")

# Event ordering at equal timestamps: a prompt logically precedes the edits
# it causes; agent actions sit between. Remaining ties break on payload id.
_KIND_TIE_RANK = {
    "chat_prompt": 0,
    "agent_action": 1,
    "human_edit": 2,
    "copilot_edit": 2,
    "external_edit": 2,
}


def hash_user_id(raw_identifier: str) -> str:
    """SHA-256 a raw user identifier; only the digest ever leaves this call."""
    return hashlib.sha256(raw_identifier.encode("utf-8")).hexdigest()


def _split_extra(data: dict, known: frozenset[str]) -> dict:
    return {k: v for k, v in data.items() if k not in known}


class CommitKind(str, enum.Enum):
    SAVE = "save"
    CREATE = "create"
    DELETE = "delete"
    RENAME = "rename"
    DIRTY_SNAPSHOT = "dirty_snapshot"
    UNKNOWN = "unknown"


class Origin(str, enum.Enum):
    HUMAN = "human"
    COPILOT = "copilot"
    EXTERNAL_SUSPECTED = "external_suspected"


class MatchClass(str, enum.Enum):
    FULL = "full"
    PARTIAL = "partial"
    UNMATCHED = "unmatched"


class EventKind(str, enum.Enum):
    HUMAN_EDIT = "human_edit"
    COPILOT_EDIT = "copilot_edit"
    EXTERNAL_EDIT = "external_edit"
    CHAT_PROMPT = "chat_prompt"
    AGENT_ACTION = "agent_action"


@dataclass(frozen=True)
class UserRef:
    """A privacy-preserving user handle: the SHA-256 hex digest, never the raw id."""
    user_hash: str

    @classmethod
    def from_raw(cls, raw_identifier: str) -> "UserRef":
        return cls(user_hash=hash_user_id(raw_identifier))

    def is_valid(self) -> bool:
        return bool(_USER_HASH_RE.match(self.user_hash))


@dataclass(frozen=True)
class ToolCall:
    tool_name: str
    arguments_text: str
    exit_code: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({"tool_name", "arguments_text", "exit_code"})

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"tool_name": self.tool_name, "arguments_text": self.arguments_text}
        if self.exit_code is not None:
            out["exit_code"] = self.exit_code
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ToolCall":
        return cls(
            tool_name=data["tool_name"],
            arguments_text=data["arguments_text"],
            exit_code=data.get("exit_code"),
            extra=_split_extra(data, cls._KNOWN),
        )


@dataclass(frozen=True)
class TextEditGroup:
    """File path plus the exact lines an AI response proposed to insert."""
    file_path: str
    proposed_lines: list[str]
    request_id: str
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({"file_path", "proposed_lines", "request_id"})

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "file_path": self.file_path,
            "proposed_lines": list(self.proposed_lines),
            "request_id": self.request_id,
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TextEditGroup":
        return cls(
            file_path=data["file_path"],
            proposed_lines=list(data["proposed_lines"]),
            request_id=data["request_id"],
            extra=_split_extra(data, cls._KNOWN),
        )


@dataclass(frozen=True)
class ChatRequest:
    request_id: str
    timestamp_ms: int
    prompt_text: str
    model_id: str = ""
    response_text: str = ""
    is_agent_turn: bool = False
    trivial: bool = False
    tool_calls: list[ToolCall] = field(default_factory=list)
    text_edit_groups: list[TextEditGroup] = field(default_factory=list)
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({
        "request_id", "timestamp_ms", "prompt_text", "model_id", "response_text",
        "is_agent_turn", "trivial", "tool_calls", "text_edit_groups",
    })

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "request_id": self.request_id,
            "timestamp_ms": self.timestamp_ms,
            "prompt_text": self.prompt_text,
            "model_id": self.model_id,
            "response_text": self.response_text,
            "is_agent_turn": self.is_agent_turn,
            "trivial": self.trivial,
            "tool_calls": [t.to_dict() for t in self.tool_calls],
            "text_edit_groups": [t.to_dict() for t in self.text_edit_groups],
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ChatRequest":
        return cls(
            request_id=data["request_id"],
            timestamp_ms=int(data["timestamp_ms"]),
            prompt_text=data["prompt_text"],
            model_id=data.get("model_id", ""),
            response_text=data.get("response_text", ""),
            is_agent_turn=bool(data.get("is_agent_turn", False)),
            trivial=bool(data.get("trivial", False)),
            tool_calls=[ToolCall.from_dict(t) for t in data.get("tool_calls", [])],
            text_edit_groups=[TextEditGroup.from_dict(t) for t in data.get("text_edit_groups", [])],
            extra=_split_extra(data, cls._KNOWN),
        )


@dataclass(frozen=True)
class ChatSession:
    session_id: str
    user: UserRef
    requests: list[ChatRequest] = field(default_factory=list)
    source_format: str = "RecapV1"
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({"session_id", "user_hash", "source_format", "requests"})

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "session_id": self.session_id,
            "user_hash": self.user.user_hash,
            "source_format": self.source_format,
            "requests": [r.to_dict() for r in self.requests],
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ChatSession":
        return cls(
            session_id=data["session_id"],
            user=UserRef(data["user_hash"]),
            requests=[ChatRequest.from_dict(r) for r in data.get("requests", [])],
            source_format=data.get("source_format", "Unknown"),
            extra=_split_extra(data, cls._KNOWN),
        )


@dataclass(frozen=True)
class DiffHunk:
    """One contiguous edit: lines removed at old_start, lines added at new_start.

    Starts are 0-based line indices into the pre/post content. Hunks carry the
    positional information the flat added/removed views drop, which is what
    makes diffs applicable (replay) and renderable as unified diffs.
    """
    old_start: int
    new_start: int
    removed: list[str] = field(default_factory=list)
    added: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "old_start": self.old_start,
            "new_start": self.new_start,
            "removed": list(self.removed),
            "added": list(self.added),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiffHunk":
        return cls(
            old_start=int(data["old_start"]),
            new_start=int(data["new_start"]),
            removed=list(data["removed"]),
            added=list(data["added"]),
        )


@dataclass(frozen=True)
class FileDiff:
    file_path: str
    added_lines: list[str] = field(default_factory=list)
    removed_lines: list[str] = field(default_factory=list)
    net_new_chars: int = 0
    hunks: list[DiffHunk] = field(default_factory=list)
    created: bool = False
    deleted: bool = False
    is_binary: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({
        "file_path", "added_lines", "removed_lines", "net_new_chars",
        "hunks", "created", "deleted", "is_binary",
    })

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "file_path": self.file_path,
            "added_lines": list(self.added_lines),
            "removed_lines": list(self.removed_lines),
            "net_new_chars": self.net_new_chars,
            "hunks": [h.to_dict() for h in self.hunks],
            "created": self.created,
            "deleted": self.deleted,
            "is_binary": self.is_binary,
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FileDiff":
        return cls(
            file_path=data["file_path"],
            added_lines=list(data.get("added_lines", [])),
            removed_lines=list(data.get("removed_lines", [])),
            net_new_chars=int(data.get("net_new_chars", 0)),
            hunks=[DiffHunk.from_dict(h) for h in data.get("hunks", [])],
            created=bool(data.get("created", False)),
            deleted=bool(data.get("deleted", False)),
            is_binary=bool(data.get("is_binary", False)),
            extra=_split_extra(data, cls._KNOWN),
        )


@dataclass(frozen=True)
class ShadowCommit:
    commit_id: str
    user: UserRef
    timestamp_ms: int
    kind: CommitKind
    file_diffs: list[FileDiff] = field(default_factory=list)
    rename_from: str | None = None
    rename_to: str | None = None
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({
        "commit_id", "user_hash", "timestamp_ms", "kind",
        "file_diffs", "rename_from", "rename_to",
    })

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "commit_id": self.commit_id,
            "user_hash": self.user.user_hash,
            "timestamp_ms": self.timestamp_ms,
            "kind": self.kind.value,
            "file_diffs": [d.to_dict() for d in self.file_diffs],
        }
        if self.rename_from is not None:
            out["rename_from"] = self.rename_from
        if self.rename_to is not None:
            out["rename_to"] = self.rename_to
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ShadowCommit":
        return cls(
            commit_id=data["commit_id"],
            user=UserRef(data["user_hash"]),
            timestamp_ms=int(data["timestamp_ms"]),
            kind=CommitKind(data.get("kind", "unknown")),
            file_diffs=[FileDiff.from_dict(d) for d in data.get("file_diffs", [])],
            rename_from=data.get("rename_from"),
            rename_to=data.get("rename_to"),
            extra=_split_extra(data, cls._KNOWN),
        )


@dataclass(frozen=True)
class Attribution:
    """Per (commit, file) verdict on who wrote the added lines."""
    commit_id: str
    file_path: str
    origin: Origin
    match_class: MatchClass
    match_score: float
    matched_request_id: str | None = None
    time_delta_s: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({
        "commit_id", "file_path", "origin", "match_class", "match_score",
        "matched_request_id", "time_delta_s",
    })

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "commit_id": self.commit_id,
            "file_path": self.file_path,
            "origin": self.origin.value,
            "match_class": self.match_class.value,
            "match_score": self.match_score,
        }
        if self.matched_request_id is not None:
            out["matched_request_id"] = self.matched_request_id
        if self.time_delta_s is not None:
            out["time_delta_s"] = self.time_delta_s
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Attribution":
        return cls(
            commit_id=data["commit_id"],
            file_path=data["file_path"],
            origin=Origin(data["origin"]),
            match_class=MatchClass(data["match_class"]),
            match_score=float(data["match_score"]),
            matched_request_id=data.get("matched_request_id"),
            time_delta_s=data.get("time_delta_s"),
            extra=_split_extra(data, cls._KNOWN),
        )


@dataclass(frozen=True)
class TimelineEvent:
    event_id: str
    user: UserRef
    timestamp_ms: int
    kind: EventKind
    payload_ref: str
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({"event_id", "user_hash", "timestamp_ms", "kind", "payload_ref"})

    def sort_key(self) -> tuple:
        return (self.timestamp_ms, _KIND_TIE_RANK.get(self.kind.value, 9), self.payload_ref, self.event_id)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "event_id": self.event_id,
            "user_hash": self.user.user_hash,
            "timestamp_ms": self.timestamp_ms,
            "kind": self.kind.value,
            "payload_ref": self.payload_ref,
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TimelineEvent":
        return cls(
            event_id=data["event_id"],
            user=UserRef(data["user_hash"]),
            timestamp_ms=int(data["timestamp_ms"]),
            kind=EventKind(data["kind"]),
            payload_ref=data["payload_ref"],
            extra=_split_extra(data, cls._KNOWN),
        )


@dataclass(frozen=True)
class Timeline:
    """Self-contained, replayable export: events plus everything they reference."""
    user: UserRef
    events: list[TimelineEvent] = field(default_factory=list)
    attributions: list[Attribution] = field(default_factory=list)
    sessions: list[ChatSession] = field(default_factory=list)
    commits: list[ShadowCommit] = field(default_factory=list)
    schema_version: int = TIMELINE_SCHEMA_VERSION
    attribution_window_s: float = 300.0
    extra: dict = field(default_factory=dict, compare=False)

    _KNOWN = frozenset({
        "schema_version", "user", "events", "attributions",
        "sessions", "commits", "attribution_window_s",
    })

    def to_dict(self) -> dict:
        # schema_version is mandatory and must come first.
        out: dict[str, Any] = {
            "schema_version": self.schema_version,
            "user": {"user_hash": self.user.user_hash},
            "attribution_window_s": self.attribution_window_s,
            "events": [e.to_dict() for e in self.events],
            "attributions": [a.to_dict() for a in self.attributions],
            "sessions": [s.to_dict() for s in self.sessions],
            "commits": [c.to_dict() for c in self.commits],
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Timeline":
        return cls(
            schema_version=int(data["schema_version"]),
            user=UserRef(data["user"]["user_hash"]),
            attribution_window_s=float(data.get("attribution_window_s", 300.0)),
            events=[TimelineEvent.from_dict(e) for e in data.get("events", [])],
            attributions=[Attribution.from_dict(a) for a in data.get("attributions", [])],
            sessions=[ChatSession.from_dict(s) for s in data.get("sessions", [])],
            commits=[ShadowCommit.from_dict(c) for c in data.get("commits", [])],
            extra=_split_extra(data, cls._KNOWN),
        )


def dump_timeline(timeline: Timeline) -> str:
    return json.dumps(timeline.to_dict(), ensure_ascii=False, indent=2) + "\n"


def load_timeline(text: str) -> Timeline:
    return Timeline.from_dict(json.loads(text))


def _is_relative_path(path: str) -> bool:
    if not path or path.startswith("/") or path.startswith("\\"):
        return False
    return ".." not in path.split("/")


def validate_timeline(timeline: Timeline) -> list[str]:
    """Check every type invariant; report violations, never raise.

    Each violation string names the type, the field, and the offending id.
    An empty list means the timeline is well-formed.
    """
    v: list[str] = []

    if not timeline.user.is_valid():
        v.append(f"UserRef.user_hash: not a 64-char lowercase hex digest: {timeline.user.user_hash!r}")

    # --- sessions and requests ---
    seen_sessions: set[str] = set()
    request_ids: set[str] = set()
    for session in timeline.sessions:
        sid = session.session_id
        if sid in seen_sessions:
            v.append(f"ChatSession.session_id: duplicate id {sid}")
        seen_sessions.add(sid)
        if not session.user.is_valid():
            v.append(f"ChatSession.user: invalid user_hash in session {sid}")
        prev_ts = None
        seen_requests: set[str] = set()
        for req in session.requests:
            if prev_ts is not None and req.timestamp_ms < prev_ts:
                v.append(f"ChatSession.requests: out of timestamp order at request {req.request_id} in session {sid}")
            prev_ts = req.timestamp_ms
            if req.request_id in seen_requests:
                v.append(f"ChatRequest.request_id: duplicate id {req.request_id} in session {sid}")
            seen_requests.add(req.request_id)
            request_ids.add(req.request_id)
            for teg in req.text_edit_groups:
                if teg.request_id != req.request_id:
                    v.append(f"TextEditGroup.request_id: back-reference {teg.request_id} != owner {req.request_id}")
                if not _is_relative_path(teg.file_path):
                    v.append(f"TextEditGroup.file_path: not workspace-relative: {teg.file_path!r} in request {req.request_id}")

    # --- commits and diffs ---
    commit_ids: set[str] = set()
    commit_files: set[tuple[str, str]] = set()
    prev_commit_ts = None
    for commit in timeline.commits:
        cid = commit.commit_id
        if cid in commit_ids:
            v.append(f"ShadowCommit.commit_id: duplicate id {cid}")
        commit_ids.add(cid)
        if prev_commit_ts is not None and commit.timestamp_ms < prev_commit_ts:
            v.append(f"ShadowCommit.timestamp_ms: out of order at commit {cid}")
        prev_commit_ts = commit.timestamp_ms
        if commit.kind == CommitKind.RENAME and (commit.rename_from is None or commit.rename_to is None):
            v.append(f"ShadowCommit.rename_from/rename_to: missing on rename commit {cid}")
        for diff in commit.file_diffs:
            commit_files.add((cid, diff.file_path))
            if not diff.is_binary:
                expected = max(
                    0,
                    sum(len(l) for l in diff.added_lines) - sum(len(l) for l in diff.removed_lines),
                )
                if diff.net_new_chars != expected:
                    v.append(
                        f"FileDiff.net_new_chars: {diff.net_new_chars} != {expected} "
                        f"for {diff.file_path} in commit {cid}"
                    )
            if diff.net_new_chars < 0:
                v.append(f"FileDiff.net_new_chars: negative for {diff.file_path} in commit {cid}")

    # --- attributions ---
    for a in timeline.attributions:
        ref = f"({a.commit_id}, {a.file_path})"
        if a.commit_id not in commit_ids:
            v.append(f"Attribution.commit_id: unknown commit {ref}")
        elif (a.commit_id, a.file_path) not in commit_files:
            v.append(f"Attribution.file_path: commit has no diff for {ref}")
        matched = a.match_class in (MatchClass.FULL, MatchClass.PARTIAL)
        if (a.origin == Origin.COPILOT) != matched:
            v.append(f"Attribution.origin: origin/match_class inconsistent at {ref}")
        if matched != (a.matched_request_id is not None):
            v.append(f"Attribution.matched_request_id: presence inconsistent with match_class at {ref}")
        if a.matched_request_id is not None and request_ids and a.matched_request_id not in request_ids:
            v.append(f"Attribution.matched_request_id: unknown request {a.matched_request_id} at {ref}")
        if not (0.0 <= a.match_score <= 1.0):
            v.append(f"Attribution.match_score: {a.match_score} outside [0,1] at {ref}")
        if a.match_class == MatchClass.FULL and a.match_score != 1.0:
            v.append(f"Attribution.match_score: full match with score {a.match_score} != 1.0 at {ref}")
        if a.match_class == MatchClass.PARTIAL and not (0.5 <= a.match_score < 1.0):
            v.append(f"Attribution.match_score: partial match with score {a.match_score} outside [0.5,1.0) at {ref}")
        if (a.time_delta_s is not None) != (a.matched_request_id is not None):
            v.append(f"Attribution.time_delta_s: presence inconsistent with matched_request_id at {ref}")
        if a.time_delta_s is not None:
            if a.time_delta_s < 0:
                v.append(f"Attribution.time_delta_s: negative at {ref}")
            elif a.time_delta_s > timeline.attribution_window_s:
                v.append(
                    f"Attribution.time_delta_s: {a.time_delta_s} exceeds window "
                    f"{timeline.attribution_window_s} at {ref}"
                )

    # --- events ---
    prev_key = None
    edit_refs: list[str] = []
    prompt_refs: list[str] = []
    agent_counts: dict[str, int] = {}
    seen_event_ids: set[str] = set()
    for ev in timeline.events:
        if ev.event_id in seen_event_ids:
            v.append(f"TimelineEvent.event_id: duplicate id {ev.event_id}")
        seen_event_ids.add(ev.event_id)
        key = ev.sort_key()
        if prev_key is not None and key < prev_key:
            v.append(f"Timeline.events: out of order at event {ev.event_id}")
        prev_key = key
        if ev.kind in (EventKind.HUMAN_EDIT, EventKind.COPILOT_EDIT, EventKind.EXTERNAL_EDIT):
            edit_refs.append(ev.payload_ref)
            if commit_ids and ev.payload_ref not in commit_ids:
                v.append(f"TimelineEvent.payload_ref: unknown commit {ev.payload_ref} at event {ev.event_id}")
        elif ev.kind == EventKind.CHAT_PROMPT:
            prompt_refs.append(ev.payload_ref)
            if request_ids and ev.payload_ref not in request_ids:
                v.append(f"TimelineEvent.payload_ref: unknown request {ev.payload_ref} at event {ev.event_id}")
        elif ev.kind == EventKind.AGENT_ACTION:
            agent_counts[ev.payload_ref] = agent_counts.get(ev.payload_ref, 0) + 1

    if sorted(edit_refs) != sorted(commit_ids):
        v.append("Timeline.events: edit events do not map one-to-one onto commits")
    if sorted(prompt_refs) != sorted(request_ids):
        v.append("Timeline.events: chat_prompt events do not map one-to-one onto requests")
    expected_agent: dict[str, int] = {}
    for session in timeline.sessions:
        for req in session.requests:
            if req.tool_calls:
                expected_agent[req.request_id] = len(req.tool_calls)
    if agent_counts != expected_agent:
        v.append("Timeline.events: agent_action events do not match tool calls")

    return v
