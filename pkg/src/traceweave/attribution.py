"""Decides who wrote each committed change: the AI, the human, or outside.

Proposed edit groups are matched against the added lines of subsequent
commits inside a time window, on normalized line content. Whatever stays
unmatched goes through the external-source heuristic (size or implied
typing speed) before defaulting to a human edit.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .models import (
    Attribution,
    ChatSession,
    FileDiff,
    MatchClass,
    Origin,
    ShadowCommit,
    TextEditGroup,
)


@dataclass(frozen=True)
class AttributionConfig:
    window_s: float = 300.0
    full_threshold: float = 1.0
    partial_threshold: float = 0.5
    external_size_chars: int = 1000
    external_wpm: float = 100.0
    chars_per_word: float = 5.0

    def __post_init__(self):
        if not (0 < self.partial_threshold <= self.full_threshold <= 1):
            raise ValueError("thresholds must satisfy 0 < partial <= full <= 1")
        if self.window_s <= 0:
            raise ValueError("window_s must be positive")
        if self.external_wpm <= 0 or self.chars_per_word <= 0:
            raise ValueError("external_wpm and chars_per_word must be positive")


@dataclass(frozen=True)
class MatchCandidate:
    request_id: str
    file_path: str
    commit_id: str
    score: float
    time_delta_s: float
    teg_index: int


def normalize_lines(lines: list[str]) -> list[str]:
    """Trim each line, collapse internal whitespace runs, drop empty results."""
    out = []
    for line in lines:
        collapsed = " ".join(line.split())
        if collapsed:
            out.append(collapsed)
    return out


def match_score(teg: TextEditGroup, diff: FileDiff) -> Optional[float]:
    """Fraction of the proposal's normalized lines found among added lines.

    Multiset containment: each added line can absorb one proposed line.
    None (undefined) when the proposal is whitespace-only; that is a skip
    signal, not a failure.
    """
    if teg.file_path != diff.file_path:
        raise ValueError(f"path mismatch: {teg.file_path} vs {diff.file_path}")
    proposed = normalize_lines(teg.proposed_lines)
    if not proposed:
        return None
    overlap = Counter(proposed) & Counter(normalize_lines(diff.added_lines))
    return sum(overlap.values()) / len(proposed)


def implied_wpm(net_new_chars: int, delta_ms: int, config: AttributionConfig) -> float:
    """Typing speed this edit would have required, in words per minute."""
    minutes = delta_ms / 60000.0
    return (net_new_chars / config.chars_per_word) / minutes


def external_source_flag(
    commit: ShadowCommit,
    prev_commit_ts_ms: Optional[int],
    diff: FileDiff,
    config: AttributionConfig | None = None,
) -> bool:
    """True when an unmatched edit looks pasted from outside the editor."""
    cfg = config or AttributionConfig()
    net = diff.net_new_chars
    if net > cfg.external_size_chars:
        return True
    if net <= 0:
        return False
    if prev_commit_ts_ms is None:
        # First commit of a user: no typing-speed evidence exists.
        return False
    delta_ms = commit.timestamp_ms - prev_commit_ts_ms
    if delta_ms <= 0:
        return True
    return implied_wpm(net, delta_ms, cfg) > cfg.external_wpm


@dataclass
class _TegEntry:
    request_id: str
    request_ts_ms: int
    teg_index: int
    normalized: Counter
    n_lines: int


def _collect_tegs(sessions: list[ChatSession]) -> dict[str, list[_TegEntry]]:
    by_path: dict[str, list[_TegEntry]] = {}
    index = 0
    for session in sessions:
        for request in session.requests:
            for teg in request.text_edit_groups:
                normalized = normalize_lines(teg.proposed_lines)
                index += 1
                if not normalized:
                    continue  # whitespace-only proposal: undefined score, skip
                by_path.setdefault(teg.file_path, []).append(_TegEntry(
                    request_id=request.request_id,
                    request_ts_ms=request.timestamp_ms,
                    teg_index=index,
                    normalized=Counter(normalized),
                    n_lines=len(normalized),
                ))
    return by_path


def attribute_commits(
    commits: list[ShadowCommit],
    sessions: list[ChatSession],
    config: AttributionConfig | None = None,
) -> list[Attribution]:
    """One Attribution per (commit, file) diff that added lines.

    Commits are scanned in time order. For every diff, the best unconsumed
    proposal for the same path inside the window wins (highest score, then
    smallest time delta, then request id); a proposal attributes at most one
    commit-file, so the earliest winning commit consumes it.
    """
    cfg = config or AttributionConfig()
    window_ms = cfg.window_s * 1000.0
    tegs_by_path = _collect_tegs(sessions)
    consumed: set[int] = set()

    ordered = sorted(commits, key=lambda c: c.timestamp_ms)
    out: list[Attribution] = []
    prev_ts: Optional[int] = None
    for commit in ordered:
        for diff in commit.file_diffs:
            if not diff.added_lines:
                continue
            added = Counter(normalize_lines(diff.added_lines))

            best: Optional[MatchCandidate] = None
            best_key: Optional[tuple] = None
            for entry in tegs_by_path.get(diff.file_path, ()):
                if entry.teg_index in consumed:
                    continue
                delta_ms = commit.timestamp_ms - entry.request_ts_ms
                if delta_ms < 0 or delta_ms > window_ms:
                    continue
                score = sum((entry.normalized & added).values()) / entry.n_lines
                key = (-score, delta_ms, entry.request_id, entry.teg_index)
                if best_key is None or key < best_key:
                    best_key = key
                    best = MatchCandidate(
                        request_id=entry.request_id,
                        file_path=diff.file_path,
                        commit_id=commit.commit_id,
                        score=score,
                        time_delta_s=delta_ms / 1000.0,
                        teg_index=entry.teg_index,
                    )

            if best is not None and best.score >= cfg.partial_threshold:
                consumed.add(best.teg_index)
                full = best.score >= cfg.full_threshold
                out.append(Attribution(
                    commit_id=commit.commit_id,
                    file_path=diff.file_path,
                    origin=Origin.COPILOT,
                    match_class=MatchClass.FULL if full else MatchClass.PARTIAL,
                    match_score=best.score,
                    matched_request_id=best.request_id,
                    time_delta_s=best.time_delta_s,
                ))
            else:
                flagged = external_source_flag(commit, prev_ts, diff, cfg)
                out.append(Attribution(
                    commit_id=commit.commit_id,
                    file_path=diff.file_path,
                    origin=Origin.EXTERNAL_SUSPECTED if flagged else Origin.HUMAN,
                    match_class=MatchClass.UNMATCHED,
                    match_score=best.score if best is not None else 0.0,
                ))
        prev_ts = commit.timestamp_ms
    return out
