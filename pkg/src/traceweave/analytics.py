"""Merged timeline construction, work sessions, reliance metrics, aggregates.

Edits are counted only from shadow commits; agent tool calls become
agent_action events but never edits, so nothing is double counted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats as _scipy_stats

from .behavior import CATEGORIES, OTHER_CATEGORY, BehaviorLabel, classify_behavior
from .models import (
    Attribution,
    ChatSession,
    EventKind,
    MatchClass,
    Origin,
    ShadowCommit,
    Timeline,
    TimelineEvent,
    UserRef,
)

DEFAULT_SESSION_GAP_MS = 30 * 60 * 1000

_EDIT_KINDS = (EventKind.HUMAN_EDIT, EventKind.COPILOT_EDIT, EventKind.EXTERNAL_EDIT)


@dataclass(frozen=True)
class WorkSession:
    """A maximal run of one user's events with no gap above the threshold."""
    user: UserRef
    index: int
    start_ms: int
    end_ms: int
    n_human: int = 0
    n_copilot: int = 0
    n_external: int = 0
    n_prompts: int = 0

    @property
    def ai_edit_share(self) -> Optional[float]:
        edits = self.n_human + self.n_copilot + self.n_external
        if edits == 0:
            return None
        return self.n_copilot / edits

    def to_dict(self) -> dict:
        return {
            "user_hash": self.user.user_hash,
            "index": self.index,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "n_human": self.n_human,
            "n_copilot": self.n_copilot,
            "n_external": self.n_external,
            "n_prompts": self.n_prompts,
            "ai_edit_share": self.ai_edit_share,
        }


@dataclass(frozen=True)
class TrendResult:
    pearson_r: float
    p_value: float
    weighted_slope: float
    weighted_intercept: float
    n_points: int
    zero_variance: bool = False

    def to_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "p_value": self.p_value,
            "weighted_slope": self.weighted_slope,
            "weighted_intercept": self.weighted_intercept,
            "n_points": self.n_points,
            "zero_variance": self.zero_variance,
        }


@dataclass(frozen=True)
class OverviewAggregate:
    bins: int
    density: dict[str, list[int]]
    per_user: list[dict]

    def to_dict(self) -> dict:
        return {"bins": self.bins, "density": self.density, "per_user": self.per_user}


def build_timeline(
    user: UserRef,
    commits: list[ShadowCommit],
    attributions: list[Attribution],
    sessions: list[ChatSession],
    attribution_window_s: float = 300.0,
) -> Timeline:
    """Merge both streams into one chronological, self-contained timeline."""
    known_commits = {c.commit_id for c in commits}
    by_commit: dict[str, list[Attribution]] = {}
    for a in attributions:
        if a.commit_id not in known_commits:
            raise ValueError(f"attribution references unknown commit {a.commit_id}")
        by_commit.setdefault(a.commit_id, []).append(a)

    events: list[TimelineEvent] = []
    for commit in commits:
        origins = {a.origin for a in by_commit.get(commit.commit_id, ())}
        if Origin.COPILOT in origins:
            kind = EventKind.COPILOT_EDIT
        elif Origin.EXTERNAL_SUSPECTED in origins:
            kind = EventKind.EXTERNAL_EDIT
        else:
            kind = EventKind.HUMAN_EDIT
        events.append(TimelineEvent(
            event_id=f"edit-{commit.commit_id}",
            user=user,
            timestamp_ms=commit.timestamp_ms,
            kind=kind,
            payload_ref=commit.commit_id,
        ))

    for session in sessions:
        for request in session.requests:
            events.append(TimelineEvent(
                event_id=f"prompt-{request.request_id}",
                user=user,
                timestamp_ms=request.timestamp_ms,
                kind=EventKind.CHAT_PROMPT,
                payload_ref=request.request_id,
            ))
            for i, _tool in enumerate(request.tool_calls):
                events.append(TimelineEvent(
                    event_id=f"agent-{request.request_id}-{i}",
                    user=user,
                    timestamp_ms=request.timestamp_ms,
                    kind=EventKind.AGENT_ACTION,
                    payload_ref=request.request_id,
                ))

    events.sort(key=lambda e: e.sort_key())
    return Timeline(
        user=user,
        events=events,
        attributions=list(attributions),
        sessions=list(sessions),
        commits=list(commits),
        attribution_window_s=attribution_window_s,
    )


def _trivial_request_ids(timeline: Timeline) -> set[str]:
    return {
        request.request_id
        for session in timeline.sessions
        for request in session.requests
        if request.trivial
    }


def segment_sessions(timeline: Timeline, gap_ms: int = DEFAULT_SESSION_GAP_MS) -> list[WorkSession]:
    """Split the event stream wherever consecutive events are > gap_ms apart.

    Trivial prompts still count as activity but are excluded from n_prompts.
    """
    if not timeline.events:
        return []
    trivial = _trivial_request_ids(timeline)

    sessions: list[WorkSession] = []
    counts = {"human": 0, "copilot": 0, "external": 0, "prompts": 0}
    start_ms = prev_ms = timeline.events[0].timestamp_ms

    def flush(end_ms: int) -> None:
        sessions.append(WorkSession(
            user=timeline.user,
            index=len(sessions) + 1,
            start_ms=start_ms,
            end_ms=end_ms,
            n_human=counts["human"],
            n_copilot=counts["copilot"],
            n_external=counts["external"],
            n_prompts=counts["prompts"],
        ))

    for event in timeline.events:
        if event.timestamp_ms - prev_ms > gap_ms:
            flush(prev_ms)
            counts = {"human": 0, "copilot": 0, "external": 0, "prompts": 0}
            start_ms = event.timestamp_ms
        if event.kind == EventKind.HUMAN_EDIT:
            counts["human"] += 1
        elif event.kind == EventKind.COPILOT_EDIT:
            counts["copilot"] += 1
        elif event.kind == EventKind.EXTERNAL_EDIT:
            counts["external"] += 1
        elif event.kind == EventKind.CHAT_PROMPT and event.payload_ref not in trivial:
            counts["prompts"] += 1
        prev_ms = event.timestamp_ms
    flush(prev_ms)
    return sessions


def pearson(x, y) -> tuple[float, float, bool]:
    """(r, two-sided p, zero_variance) over paired samples.

    The p-value comes from the t transform of r with n-2 degrees of freedom.
    Zero variance on either axis yields r = 0 with the flag set, not an error.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    sxy = float(np.dot(dx, dy))
    if sxx == 0.0 or syy == 0.0:
        return 0.0, 1.0, True
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) >= 1.0:
        p_value = 0.0
    elif n <= 2:
        p_value = 1.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p_value = 2.0 * float(_scipy_stats.t.sf(abs(t), n - 2))
    return r, p_value, False


def ai_share_trend(all_sessions: list[WorkSession]) -> TrendResult:
    """Pearson r over (session index, ai share) points plus a weighted fit.

    The weighted fit runs over per-index mean shares, weighted by how many
    users contribute at that index.
    """
    points = [(s.index, s.ai_edit_share) for s in all_sessions if s.ai_edit_share is not None]
    if len(points) < 2:
        raise ValueError(f"need at least 2 sessions with defined ai_edit_share, got {len(points)}")

    n = len(points)
    r, p_value, zero_variance = pearson([p[0] for p in points], [p[1] for p in points])

    # Weighted fit over per-index means.
    by_index: dict[float, list[float]] = {}
    for xi, yi in points:
        by_index.setdefault(float(xi), []).append(float(yi))
    mx = np.asarray(sorted(by_index), dtype=np.float64)
    my = np.asarray([np.mean(by_index[i]) for i in sorted(by_index)], dtype=np.float64)
    w = np.asarray([len(by_index[i]) for i in sorted(by_index)], dtype=np.float64)
    wmean_x = float(np.average(mx, weights=w))
    wmean_y = float(np.average(my, weights=w))
    denom = float(np.sum(w * (mx - wmean_x) ** 2))
    if denom == 0.0:
        slope = 0.0
        intercept = wmean_y
    else:
        slope = float(np.sum(w * (mx - wmean_x) * (my - wmean_y)) / denom)
        intercept = wmean_y - slope * wmean_x

    return TrendResult(
        pearson_r=r,
        p_value=p_value,
        weighted_slope=slope,
        weighted_intercept=intercept,
        n_points=n,
        zero_variance=zero_variance,
    )


def _ai_share_overall(timeline: Timeline) -> Optional[float]:
    edits = sum(1 for e in timeline.events if e.kind in _EDIT_KINDS)
    if edits == 0:
        return None
    copilot = sum(1 for e in timeline.events if e.kind == EventKind.COPILOT_EDIT)
    return copilot / edits


def progress_bin(x: float, bins: int) -> int:
    """Bin index over normalized progress; every bin includes its right edge."""
    if x <= 0.0:
        return 0
    return min(bins - 1, math.ceil(x * bins) - 1)


def overview(timelines: list[Timeline], bins: int = 50) -> OverviewAggregate:
    """Cross-user rows sorted by AI edit share plus a merged event density."""
    if not timelines:
        raise ValueError("need at least one timeline")
    density = {kind.value: [0] * bins for kind in EventKind}
    per_user: list[dict] = []
    for timeline in timelines:
        events = timeline.events
        if events:
            t_min = events[0].timestamp_ms
            t_max = events[-1].timestamp_ms
            span = t_max - t_min
            for event in events:
                x = 0.0 if span == 0 else (event.timestamp_ms - t_min) / span
                density[event.kind.value][progress_bin(x, bins)] += 1
        counts = {kind.value: 0 for kind in EventKind}
        for event in events:
            counts[event.kind.value] += 1
        per_user.append({
            "user_hash": timeline.user.user_hash,
            "ai_edit_share_overall": _ai_share_overall(timeline),
            "n_events": len(events),
            "event_counts": counts,
        })

    def order(row: dict) -> tuple:
        share = row["ai_edit_share_overall"]
        if share is None:
            return (1, 0.0, row["user_hash"])  # undefined sorts last
        return (0, -share, row["user_hash"])

    per_user.sort(key=order)
    return OverviewAggregate(bins=bins, density=density, per_user=per_user)


@dataclass(frozen=True)
class BehaviorDistribution:
    fractions: dict[str, float]
    other_count: int

    def to_dict(self) -> dict:
        return {"fractions": self.fractions, "other_count": self.other_count}


def behavior_distribution(labels: list[BehaviorLabel]) -> BehaviorDistribution:
    """Category fractions over non-Other labels; Other reported separately."""
    if not labels:
        raise ValueError("no labels to aggregate")
    other = sum(1 for l in labels if l.category == OTHER_CATEGORY)
    counted = [l for l in labels if l.category != OTHER_CATEGORY]
    fractions: dict[str, float] = {}
    if counted:
        for category in CATEGORIES:
            fractions[category] = sum(1 for l in counted if l.category == category) / len(counted)
    return BehaviorDistribution(fractions=fractions, other_count=other)


def build_report(
    timelines: list[Timeline],
    gap_ms: int = DEFAULT_SESSION_GAP_MS,
    bins: int = 50,
    backend=None,
) -> dict:
    """The cross-user analytics document written next to the timeline exports."""
    timelines = sorted(timelines, key=lambda t: t.user.user_hash)
    all_sessions: list[WorkSession] = []
    users = []
    labels: list[BehaviorLabel] = []
    for timeline in timelines:
        work = segment_sessions(timeline, gap_ms=gap_ms)
        all_sessions.extend(work)
        n_requests = sum(len(s.requests) for s in timeline.sessions)
        users.append({
            "user_hash": timeline.user.user_hash,
            "n_events": len(timeline.events),
            "n_commits": len(timeline.commits),
            "n_requests": n_requests,
            "n_work_sessions": len(work),
            "ai_edit_share_overall": _ai_share_overall(timeline),
        })
        for session in timeline.sessions:
            for request in session.requests:
                if not request.trivial:
                    labels.append(classify_behavior(request.prompt_text, backend))

    try:
        trend = ai_share_trend(all_sessions).to_dict()
    except ValueError:
        trend = None
    distribution = behavior_distribution(labels).to_dict() if labels else None

    return {
        "schema_version": 1,
        "users": users,
        "sessions": [s.to_dict() for s in all_sessions],
        "behavior_distribution": distribution,
        "trend": trend,
        "overview": overview(timelines, bins=bins).to_dict(),
    }


def render_report_text(report: dict) -> str:
    """Small human-readable companion to the JSON report."""
    lines = [f"users: {len(report['users'])}", f"work sessions: {len(report['sessions'])}"]
    trend = report.get("trend")
    if trend:
        lines.append(
            f"ai share trend: r={trend['pearson_r']:+.3f} (p={trend['p_value']:.4g}, "
            f"n={trend['n_points']}), weighted slope {trend['weighted_slope']:+.4f}"
        )
    dist = report.get("behavior_distribution")
    if dist:
        parts = ", ".join(f"{cat} {frac:.0%}" for cat, frac in dist["fractions"].items())
        lines.append(f"behavior: {parts} (+{dist['other_count']} other)")
    for row in report["overview"]["per_user"]:
        share = row["ai_edit_share_overall"]
        share_text = "n/a" if share is None else f"{share:.2f}"
        lines.append(f"  {row['user_hash'][:12]}  share={share_text}  events={row['n_events']}")
    return "\n".join(lines) + "\n"
