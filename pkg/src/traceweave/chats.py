"""Reads a directory of chat session files into ChatSession values.

Input is the normalized interchange format (schema string
``recap-chat-v1``): one JSON object per session file. Prompts judged
trivial are flagged, never dropped; analytics skip them, replay keeps them.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError
from .models import ChatRequest, ChatSession, TextEditGroup, ToolCall, UserRef

CHAT_SCHEMA = "recap-chat-v1"

# Conservative superset of plain acknowledgment words. Configurable; the
# filter only gates analytics, raw data keeps everything.
DEFAULT_TRIVIAL_LEXICON = frozenset({
    "yes", "no", "ok", "okay", "hi", "hello", "hey", "thanks", "thank",
    "sure", "yep", "yeah", "cool", "great", "nice", "done", "good",
})

_TOKEN_RE = re.compile(r"[a-z]+")


@dataclass
class ChatIngestConfig:
    trivial_lexicon: frozenset[str] = DEFAULT_TRIVIAL_LEXICON


@dataclass
class IngestReport:
    files_seen: int = 0
    sessions_parsed: int = 0
    requests_total: int = 0
    trivial_prompts_excluded: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "files_seen": self.files_seen,
            "sessions_parsed": self.sessions_parsed,
            "requests_total": self.requests_total,
            "trivial_prompts_excluded": self.trivial_prompts_excluded,
            "warnings": list(self.warnings),
        }


def is_trivial_prompt(prompt_text: str, lexicon: frozenset[str] = DEFAULT_TRIVIAL_LEXICON) -> bool:
    """True for content-free prompts such as bare acknowledgments.

    A prompt is trivial when, after trimming whitespace/punctuation and
    lowercasing, the whole string is in the lexicon, or it has at most two
    alphabetic tokens and every one of them is in the lexicon.
    """
    lowered = prompt_text.strip().lower()
    stripped = lowered.strip(" \t\r\n.,;:!?'\"()[]{}-_")
    if stripped in lexicon:
        return True
    tokens = _TOKEN_RE.findall(lowered)
    if len(tokens) > 2:
        return False
    return all(t in lexicon for t in tokens)


def _parse_session_file(path: Path, lexicon: frozenset[str]) -> ChatSession:
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("schema") != CHAT_SCHEMA:
        raise ValueError(f"unrecognized schema {data.get('schema')!r}")
    requests = []
    for raw in data["requests"]:
        request_id = raw["request_id"]
        prompt = raw["prompt"]
        requests.append(ChatRequest(
            request_id=request_id,
            timestamp_ms=int(raw["timestamp_ms"]),
            prompt_text=prompt,
            model_id=raw.get("model", "") or "",
            response_text=raw.get("response", "") or "",
            is_agent_turn=bool(raw.get("is_agent_turn", False)),
            trivial=is_trivial_prompt(prompt, lexicon),
            tool_calls=[
                ToolCall(tool_name=t["tool"], arguments_text=t.get("args", ""), exit_code=t.get("exit_code"))
                for t in raw.get("tool_calls", [])
            ],
            text_edit_groups=[
                TextEditGroup(file_path=g["file_path"], proposed_lines=list(g["lines"]), request_id=request_id)
                for g in raw.get("text_edit_groups", [])
            ],
        ))
    requests.sort(key=lambda r: r.timestamp_ms)
    return ChatSession(
        session_id=data["session_id"],
        user=UserRef(data["user_hash"]),
        requests=requests,
        source_format="RecapV1",
    )


def ingest_chats(dir_path: str | Path, config: ChatIngestConfig | None = None) -> tuple[list[ChatSession], IngestReport]:
    """Parse every *.json session file under dir_path.

    Malformed files produce a warning in the report, never abort the batch.
    A missing or unreadable directory is fatal.
    """
    cfg = config or ChatIngestConfig()
    root = Path(dir_path)
    if not root.is_dir():
        raise CorpusError(f"chat directory missing or unreadable: {root}")

    report = IngestReport()
    sessions: list[ChatSession] = []
    seen: set[tuple[str, str]] = set()
    for path in sorted(root.glob("*.json")):
        report.files_seen += 1
        try:
            session = _parse_session_file(path, cfg.trivial_lexicon)
        except Exception as exc:
            report.warnings.append(f"{path.name}: {exc}")
            continue
        key = (session.user.user_hash, session.session_id)
        if key in seen:
            report.warnings.append(f"{path.name}: duplicate session {session.session_id} for user, skipped")
            continue
        seen.add(key)
        sessions.append(session)
        report.sessions_parsed += 1
        report.requests_total += len(session.requests)
        report.trivial_prompts_excluded += sum(1 for r in session.requests if r.trivial)

    # Canonical order makes ingestion independent of directory listing order.
    sessions.sort(key=lambda s: (s.requests[0].timestamp_ms if s.requests else 1 << 62, s.session_id))
    return sessions, report
