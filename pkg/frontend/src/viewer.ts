// Pure replay logic: loading, validation, selection, filtering, workspace
// reconstruction, diff rows, badge details, overview aggregation. Everything
// here is side-effect free so it runs under vitest without a browser; the
// DOM layer in app.ts only renders what these functions return.

import type {
  Attribution,
  ChatRequest,
  ChatSession,
  DiffHunk,
  EventKind,
  FileDiff,
  ShadowCommit,
  Timeline,
  TimelineEvent,
} from "./types.js";

export const SUPPORTED_SCHEMA_VERSION = 1;

// Marker palette: green human edits, yellow assistant edits, orange suspected
// external sources, blue chat prompts, purple agent actions.
export const EVENT_COLORS: Record<EventKind, string> = {
  human_edit: "#21a356",
  copilot_edit: "#e3b321",
  external_edit: "#e87c1e",
  chat_prompt: "#2f6fe4",
  agent_action: "#8a4fd3",
};

export type TimelineMode = "event-spaced" | "time-proportional";

export interface LoadResult {
  timeline: Timeline;
  warnings: string[];
}

export interface ViewerState {
  timeline: Timeline;
  selected: number; // index into visibleEvents(state)
  fileFilter: string | null;
  mode: TimelineMode;
  warnings: string[];
}

export class TimelineLoadError extends Error {}

function asArray<T>(value: unknown): T[] {
  return Array.isArray(value) ? (value as T[]) : [];
}

/** Parse an exported timeline; throws TimelineLoadError when unusable. */
export function loadTimeline(text: string): LoadResult {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new TimelineLoadError(`not a JSON document: ${(err as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null) {
    throw new TimelineLoadError("timeline must be a JSON object");
  }
  const data = raw as Record<string, unknown>;
  if (typeof data.schema_version !== "number") {
    throw new TimelineLoadError("missing schema_version");
  }
  const warnings: string[] = [];
  if (data.schema_version > SUPPORTED_SCHEMA_VERSION) {
    warnings.push(
      `export has schema_version ${data.schema_version}, viewer supports ` +
        `${SUPPORTED_SCHEMA_VERSION}; rendering best-effort`,
    );
  }
  const user = (data.user as { user_hash?: string } | undefined) ?? {};
  if (typeof user.user_hash !== "string") {
    throw new TimelineLoadError("missing user.user_hash");
  }
  const timeline: Timeline = {
    schema_version: data.schema_version,
    user: { user_hash: user.user_hash },
    attribution_window_s:
      typeof data.attribution_window_s === "number" ? data.attribution_window_s : undefined,
    events: asArray<TimelineEvent>(data.events),
    attributions: asArray<Attribution>(data.attributions),
    sessions: asArray<ChatSession>(data.sessions),
    commits: asArray<ShadowCommit>(data.commits),
  };
  warnings.push(...checkTimeline(timeline));
  return { timeline, warnings };
}

/** Non-blocking consistency report, mirroring the exporter's validator. */
export function checkTimeline(t: Timeline): string[] {
  const problems: string[] = [];
  const commitIds = new Set(t.commits.map((c) => c.commit_id));
  const requestIds = new Set(
    t.sessions.flatMap((s) => s.requests.map((r) => r.request_id)),
  );
  let prev = -Infinity;
  for (const ev of t.events) {
    if (ev.timestamp_ms < prev) {
      problems.push(`events out of order at ${ev.event_id}`);
      break;
    }
    prev = ev.timestamp_ms;
  }
  for (const ev of t.events) {
    const isEdit = ev.kind.endsWith("_edit");
    if (isEdit && !commitIds.has(ev.payload_ref)) {
      problems.push(`event ${ev.event_id} references unknown commit ${ev.payload_ref}`);
    }
    if (!isEdit && !requestIds.has(ev.payload_ref)) {
      problems.push(`event ${ev.event_id} references unknown request ${ev.payload_ref}`);
    }
  }
  for (const a of t.attributions) {
    if (!commitIds.has(a.commit_id)) {
      problems.push(`attribution references unknown commit ${a.commit_id}`);
    }
    if (a.match_class === "full" && a.match_score !== 1.0) {
      problems.push(`full match with score ${a.match_score} at ${a.commit_id}`);
    }
  }
  return problems;
}

export function createState(loaded: LoadResult): ViewerState {
  return {
    timeline: loaded.timeline,
    selected: 0,
    fileFilter: null,
    mode: "event-spaced",
    warnings: loaded.warnings,
  };
}

function commitById(t: Timeline, id: string): ShadowCommit | undefined {
  return t.commits.find((c) => c.commit_id === id);
}

function requestById(t: Timeline, id: string): { session: ChatSession; request: ChatRequest } | undefined {
  for (const session of t.sessions) {
    for (const request of session.requests) {
      if (request.request_id === id) return { session, request };
    }
  }
  return undefined;
}

function commitTouches(commit: ShadowCommit | undefined, path: string): boolean {
  return !!commit && commit.file_diffs.some((d) => d.file_path === path);
}

/**
 * Events currently shown: a file filter hides edit events whose commit does
 * not touch the path; prompts and agent actions always stay visible.
 */
export function visibleEvents(state: ViewerState): TimelineEvent[] {
  const { timeline, fileFilter } = state;
  if (!fileFilter) return timeline.events;
  return timeline.events.filter((ev) => {
    if (!ev.kind.endsWith("_edit")) return true;
    return commitTouches(commitById(timeline, ev.payload_ref), fileFilter);
  });
}

export function selectedEvent(state: ViewerState): TimelineEvent | undefined {
  return visibleEvents(state)[state.selected];
}

export function selectIndex(state: ViewerState, index: number): ViewerState {
  const count = visibleEvents(state).length;
  const clamped = count === 0 ? 0 : Math.min(Math.max(index, 0), count - 1);
  return { ...state, selected: clamped };
}

export function selectNext(state: ViewerState): ViewerState {
  return selectIndex(state, state.selected + 1);
}

export function selectPrev(state: ViewerState): ViewerState {
  return selectIndex(state, state.selected - 1);
}

/** Toggle the double-click file filter; selection resets to the first event. */
export function toggleFileFilter(state: ViewerState, path: string): ViewerState {
  const fileFilter = state.fileFilter === path ? null : path;
  return { ...state, fileFilter, selected: 0 };
}

export function setMode(state: ViewerState, mode: TimelineMode): ViewerState {
  return { ...state, mode };
}

/** Horizontal marker positions in [0, 1] for the timeline bar. */
export function markerPositions(state: ViewerState): { event: TimelineEvent; x: number }[] {
  const events = visibleEvents(state);
  if (events.length === 0) return [];
  if (state.mode === "event-spaced" || events.length === 1) {
    const step = events.length === 1 ? 0 : 1 / (events.length - 1);
    return events.map((event, i) => ({ event, x: i * step }));
  }
  const t0 = events[0].timestamp_ms;
  const t1 = events[events.length - 1].timestamp_ms;
  const span = t1 - t0 || 1;
  return events.map((event) => ({ event, x: (event.timestamp_ms - t0) / span }));
}

function applyHunks(oldLines: string[], hunks: DiffHunk[]): string[] {
  const out: string[] = [];
  let cursor = 0;
  for (const hunk of hunks) {
    out.push(...oldLines.slice(cursor, hunk.old_start));
    cursor = hunk.old_start + hunk.removed.length;
    out.push(...hunk.added);
  }
  out.push(...oldLines.slice(cursor));
  return out;
}

export interface FileState {
  path: string;
  lines: string[];
  /** How the selected commit touched this file, if at all. */
  change?: "added" | "modified" | "deleted";
  /** Attribution badge for (selected commit, file), when one exists. */
  badge?: Attribution;
}

/**
 * Workspace content after the given commit (identified by commit_id),
 * reconstructed purely from the embedded diffs. Files deleted by the
 * selected commit are listed with change = "deleted" and no content.
 */
export function workspaceAt(t: Timeline, commitId: string): FileState[] {
  const files = new Map<string, string[]>();
  const index = t.commits.findIndex((c) => c.commit_id === commitId);
  if (index < 0) return [];
  for (let i = 0; i <= index; i++) {
    for (const diff of t.commits[i].file_diffs) {
      if (diff.is_binary) continue;
      if (diff.deleted) {
        files.delete(diff.file_path);
      } else {
        files.set(diff.file_path, applyHunks(files.get(diff.file_path) ?? [], diff.hunks));
      }
    }
  }
  const selected = t.commits[index];
  const byPath = new Map(selected.file_diffs.map((d) => [d.file_path, d]));
  const attributions = new Map(
    t.attributions
      .filter((a) => a.commit_id === commitId)
      .map((a) => [a.file_path, a]),
  );
  const out: FileState[] = [];
  for (const [path, lines] of files) {
    const diff = byPath.get(path);
    out.push({
      path,
      lines,
      change: diff ? (diff.created ? "added" : "modified") : undefined,
      badge: attributions.get(path),
    });
  }
  for (const diff of selected.file_diffs) {
    if (diff.deleted && !files.has(diff.file_path)) {
      out.push({ path: diff.file_path, lines: [], change: "deleted" });
    }
  }
  out.sort((a, b) => (a.path < b.path ? -1 : a.path > b.path ? 1 : 0));
  return out;
}

export interface DiffRow {
  type: "context" | "add" | "del" | "header";
  oldNo?: number;
  newNo?: number;
  text: string;
}

/** GitHub-style unified rows for one file diff, with a little context. */
export function unifiedDiffRows(t: Timeline, commitId: string, diff: FileDiff, context = 2): DiffRow[] {
  if (diff.is_binary) {
    return [{ type: "header", text: `binary file (${diff.net_new_chars} net new bytes)` }];
  }
  const index = t.commits.findIndex((c) => c.commit_id === commitId);
  const files = new Map<string, string[]>();
  for (let i = 0; i < index; i++) {
    for (const d of t.commits[i].file_diffs) {
      if (d.is_binary) continue;
      if (d.deleted) files.delete(d.file_path);
      else files.set(d.file_path, applyHunks(files.get(d.file_path) ?? [], d.hunks));
    }
  }
  const oldLines = files.get(diff.file_path) ?? [];

  const rows: DiffRow[] = [];
  for (const hunk of diff.hunks) {
    rows.push({
      type: "header",
      text: `@@ -${hunk.old_start + 1},${hunk.removed.length} +${hunk.new_start + 1},${hunk.added.length} @@`,
    });
    const ctxStart = Math.max(0, hunk.old_start - context);
    for (let i = ctxStart; i < hunk.old_start; i++) {
      rows.push({
        type: "context",
        oldNo: i + 1,
        newNo: hunk.new_start - (hunk.old_start - i) + 1,
        text: oldLines[i] ?? "",
      });
    }
    hunk.removed.forEach((text, i) => {
      rows.push({ type: "del", oldNo: hunk.old_start + i + 1, text });
    });
    hunk.added.forEach((text, i) => {
      rows.push({ type: "add", newNo: hunk.new_start + i + 1, text });
    });
  }
  return rows;
}

export interface BadgeDetail {
  origin: string;
  matchClass: string;
  matchScore: number;
  timeDeltaS?: number;
  requestId?: string;
  promptText?: string;
  tegLines?: string[];
}

/** What clicking an AI badge reveals: the matched TEG, its source prompt, score, delta. */
export function badgeDetail(t: Timeline, attribution: Attribution): BadgeDetail {
  const detail: BadgeDetail = {
    origin: attribution.origin,
    matchClass: attribution.match_class,
    matchScore: attribution.match_score,
    timeDeltaS: attribution.time_delta_s,
    requestId: attribution.matched_request_id,
  };
  if (attribution.matched_request_id) {
    const found = requestById(t, attribution.matched_request_id);
    if (found) {
      detail.promptText = found.request.prompt_text;
      const teg = found.request.text_edit_groups.find(
        (g) => g.file_path === attribution.file_path,
      );
      detail.tegLines = teg?.proposed_lines;
    }
  }
  return detail;
}

/** Request the chat panel should scroll to for the selected event. */
export function chatAnchor(state: ViewerState): string | undefined {
  const event = selectedEvent(state);
  if (!event) return undefined;
  if (!event.kind.endsWith("_edit")) return event.payload_ref;
  const copilot = state.timeline.attributions.find(
    (a) => a.commit_id === event.payload_ref && a.matched_request_id,
  );
  if (copilot) return copilot.matched_request_id;
  // Otherwise the latest prompt at or before the edit.
  let anchor: string | undefined;
  for (const ev of state.timeline.events) {
    if (ev.timestamp_ms > event.timestamp_ms) break;
    if (ev.kind === "chat_prompt") anchor = ev.payload_ref;
  }
  return anchor;
}

// ---- multi-user overview ----

export interface OverviewRow {
  userHash: string;
  aiEditShare: number | null;
  nEvents: number;
  eventCounts: Record<string, number>;
}

export interface Overview {
  rows: OverviewRow[];
  bins: number;
  density: Record<string, number[]>;
}

export function progressBin(x: number, bins: number): number {
  if (x <= 0) return 0;
  return Math.min(bins - 1, Math.ceil(x * bins) - 1);
}

/** Rows sorted by AI edit share (undefined last) plus a merged density strip. */
export function buildOverview(timelines: Timeline[], bins = 50): Overview {
  const kinds: EventKind[] = [
    "human_edit",
    "copilot_edit",
    "external_edit",
    "chat_prompt",
    "agent_action",
  ];
  const density: Record<string, number[]> = {};
  for (const kind of kinds) density[kind] = new Array(bins).fill(0);

  const rows: OverviewRow[] = timelines.map((t) => {
    const counts: Record<string, number> = {};
    for (const kind of kinds) counts[kind] = 0;
    for (const ev of t.events) counts[ev.kind] = (counts[ev.kind] ?? 0) + 1;
    const edits = counts.human_edit + counts.copilot_edit + counts.external_edit;
    if (t.events.length > 0) {
      const t0 = t.events[0].timestamp_ms;
      const t1 = t.events[t.events.length - 1].timestamp_ms;
      const span = t1 - t0;
      for (const ev of t.events) {
        const x = span === 0 ? 0 : (ev.timestamp_ms - t0) / span;
        density[ev.kind][progressBin(x, bins)] += 1;
      }
    }
    return {
      userHash: t.user.user_hash,
      aiEditShare: edits === 0 ? null : counts.copilot_edit / edits,
      nEvents: t.events.length,
      eventCounts: counts,
    };
  });

  rows.sort((a, b) => {
    if (a.aiEditShare === null && b.aiEditShare === null)
      return a.userHash < b.userHash ? -1 : 1;
    if (a.aiEditShare === null) return 1;
    if (b.aiEditShare === null) return -1;
    if (b.aiEditShare !== a.aiEditShare) return b.aiEditShare - a.aiEditShare;
    return a.userHash < b.userHash ? -1 : 1;
  });
  return { rows, bins, density };
}
