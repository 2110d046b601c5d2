// Viewer logic against real pipeline exports (fixtures generated by
// `traceweave run` on the seed-1 two-user synthetic corpus).
import { readdirSync, readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import type { Timeline } from "../src/types.js";
import {
  badgeDetail,
  buildOverview,
  chatAnchor,
  checkTimeline,
  createState,
  EVENT_COLORS,
  loadTimeline,
  markerPositions,
  progressBin,
  selectedEvent,
  selectNext,
  selectPrev,
  setMode,
  TimelineLoadError,
  toggleFileFilter,
  unifiedDiffRows,
  visibleEvents,
  workspaceAt,
} from "../src/viewer.js";

const FIXTURE_DIR = join(__dirname, "fixtures");

function fixturePaths(): string[] {
  return readdirSync(FIXTURE_DIR)
    .filter((name) => name.startsWith("timeline_"))
    .sort()
    .map((name) => join(FIXTURE_DIR, name));
}

function loadFixtures(): Timeline[] {
  return fixturePaths().map((p) => loadTimeline(readFileSync(p, "utf-8")).timeline);
}

function firstFullMatch(t: Timeline) {
  const a = t.attributions.find(
    (x) => x.origin === "copilot" && x.match_class === "full",
  );
  if (!a) throw new Error("fixture has no full match");
  return a;
}

describe("loading", () => {
  it("loads a pipeline export and exposes the correct event count", () => {
    for (const path of fixturePaths()) {
      const raw = JSON.parse(readFileSync(path, "utf-8"));
      const { timeline, warnings } = loadTimeline(readFileSync(path, "utf-8"));
      expect(timeline.events.length).toBe(raw.events.length);
      expect(warnings).toEqual([]); // clean exports validate silently
      const state = createState({ timeline, warnings });
      expect(visibleEvents(state).length).toBe(raw.events.length);
      expect(state.selected).toBe(0); // initial selection is the first event
    }
  });

  it("rejects an empty file with a visible error", () => {
    expect(() => loadTimeline("")).toThrow(TimelineLoadError);
  });

  it("rejects non-object json", () => {
    expect(() => loadTimeline("[1, 2]")).toThrow(TimelineLoadError);
  });

  it("future schema_version renders best-effort with a warning", () => {
    const [path] = fixturePaths();
    const raw = JSON.parse(readFileSync(path, "utf-8"));
    raw.schema_version = 99;
    const { timeline, warnings } = loadTimeline(JSON.stringify(raw));
    expect(warnings.some((w) => w.includes("schema_version 99"))).toBe(true);
    expect(timeline.events.length).toBeGreaterThan(0);
  });

  it("validation problems are reported, not thrown", () => {
    const [path] = fixturePaths();
    const raw = JSON.parse(readFileSync(path, "utf-8"));
    raw.attributions[0].match_class = "full";
    raw.attributions[0].match_score = 0.25;
    const { warnings } = loadTimeline(JSON.stringify(raw));
    expect(warnings.some((w) => w.includes("full match with score"))).toBe(true);
  });

  it("checkTimeline flags dangling references", () => {
    const [t] = loadFixtures();
    const broken: Timeline = { ...t, commits: t.commits.slice(1) };
    expect(checkTimeline(broken).length).toBeGreaterThan(0);
  });
});

describe("badge details", () => {
  it("reveals TEG, source prompt, score, and delta for a known full match", () => {
    const [t] = loadFixtures();
    const attribution = firstFullMatch(t);
    const detail = badgeDetail(t, attribution);
    expect(detail.matchScore).toBe(1.0);
    expect(detail.matchClass).toBe("full");
    expect(detail.timeDeltaS).toBeGreaterThanOrEqual(0);
    expect(detail.timeDeltaS!).toBeLessThanOrEqual(300);
    expect(detail.promptText).toBeTruthy();
    expect(detail.tegLines!.length).toBeGreaterThan(0);
    // The proposal must be the one the matched request made for that file.
    const request = t.sessions
      .flatMap((s) => s.requests)
      .find((r) => r.request_id === attribution.matched_request_id)!;
    expect(detail.promptText).toBe(request.prompt_text);
    const teg = request.text_edit_groups.find((g) => g.file_path === attribution.file_path)!;
    expect(detail.tegLines).toEqual(teg.proposed_lines);
  });

  it("badge appears on the workspace file for the matched commit", () => {
    const [t] = loadFixtures();
    const attribution = firstFullMatch(t);
    const files = workspaceAt(t, attribution.commit_id);
    const file = files.find((f) => f.path === attribution.file_path)!;
    expect(file.badge).toBeDefined();
    expect(file.badge!.origin).toBe("copilot");
    expect(file.change).toBeDefined(); // touched by the selected commit
  });
});

describe("file filter", () => {
  it("reduces edit events to commits touching the path, keeps prompts", () => {
    const [t] = loadFixtures();
    const state = createState({ timeline: t, warnings: [] });
    const path = firstFullMatch(t).file_path;

    const expectedEdits = t.events.filter((ev) => {
      if (!ev.kind.endsWith("_edit")) return false;
      const commit = t.commits.find((c) => c.commit_id === ev.payload_ref)!;
      return commit.file_diffs.some((d) => d.file_path === path);
    }).length;
    const nonEdit = t.events.filter((ev) => !ev.kind.endsWith("_edit")).length;
    const allEdits = t.events.length - nonEdit;
    expect(expectedEdits).toBeGreaterThan(0);
    expect(expectedEdits).toBeLessThan(allEdits); // the filter actually filters

    const filtered = toggleFileFilter(state, path);
    const visible = visibleEvents(filtered);
    expect(visible.filter((ev) => ev.kind.endsWith("_edit")).length).toBe(expectedEdits);
    expect(visible.filter((ev) => !ev.kind.endsWith("_edit")).length).toBe(nonEdit);
    expect(filtered.selected).toBe(0);

    // Double-clicking the same file again clears the filter.
    const cleared = toggleFileFilter(filtered, path);
    expect(cleared.fileFilter).toBeNull();
    expect(visibleEvents(cleared).length).toBe(t.events.length);
  });
});

describe("overview", () => {
  it("sorts the two-user fixture by AI edit share, descending", () => {
    const timelines = loadFixtures();
    expect(timelines.length).toBe(2);
    const overview = buildOverview(timelines);
    expect(overview.rows.length).toBe(2);
    const shares = overview.rows.map((r) => r.aiEditShare);
    expect(shares.every((s) => s !== null)).toBe(true);
    expect(shares[0]!).toBeGreaterThanOrEqual(shares[1]!);
    // Shares must match a direct count over edit events.
    for (const row of overview.rows) {
      const t = timelines.find((x) => x.user.user_hash === row.userHash)!;
      const edits = t.events.filter((e) => e.kind.endsWith("_edit"));
      const copilot = edits.filter((e) => e.kind === "copilot_edit");
      expect(row.aiEditShare).toBeCloseTo(copilot.length / edits.length, 12);
    }
  });

  it("density conserves the total event count", () => {
    const timelines = loadFixtures();
    const overview = buildOverview(timelines, 10);
    const total = Object.values(overview.density).reduce(
      (acc, bins) => acc + bins.reduce((a, b) => a + b, 0),
      0,
    );
    expect(total).toBe(timelines.reduce((acc, t) => acc + t.events.length, 0));
  });

  it("bins close the right edge", () => {
    expect(progressBin(0, 2)).toBe(0);
    expect(progressBin(0.5, 2)).toBe(0);
    expect(progressBin(1, 2)).toBe(1);
  });

  it("users without edits sort last", () => {
    const [a] = loadFixtures();
    const noEdits: Timeline = {
      ...a,
      user: { user_hash: "f".repeat(64) },
      events: a.events.filter((e) => e.kind === "chat_prompt"),
      commits: [],
      attributions: [],
    };
    const overview = buildOverview([noEdits, a]);
    expect(overview.rows[overview.rows.length - 1].aiEditShare).toBeNull();
  });
});

describe("navigation", () => {
  it("keyboard stepping visits every event exactly once, in order", () => {
    const [t] = loadFixtures();
    let state = createState({ timeline: t, warnings: [] });
    const seen: string[] = [];
    seen.push(selectedEvent(state)!.event_id);
    for (let i = 0; i < t.events.length - 1; i++) {
      state = selectNext(state);
      seen.push(selectedEvent(state)!.event_id);
    }
    expect(seen).toEqual(t.events.map((e) => e.event_id));
    expect(new Set(seen).size).toBe(t.events.length);
    // Clamped at both ends.
    state = selectNext(state);
    expect(state.selected).toBe(t.events.length - 1);
    state = createState({ timeline: t, warnings: [] });
    state = selectPrev(state);
    expect(state.selected).toBe(0);
  });

  it("chat anchor follows the selected event", () => {
    const [t] = loadFixtures();
    let state = createState({ timeline: t, warnings: [] });
    const promptIndex = t.events.findIndex((e) => e.kind === "chat_prompt");
    for (let i = 0; i < promptIndex; i++) state = selectNext(state);
    expect(chatAnchor(state)).toBe(t.events[promptIndex].payload_ref);
  });

  it("anchor for a matched edit is its source request", () => {
    const [t] = loadFixtures();
    const attribution = firstFullMatch(t);
    const index = t.events.findIndex(
      (e) => e.kind === "copilot_edit" && e.payload_ref === attribution.commit_id,
    );
    let state = createState({ timeline: t, warnings: [] });
    for (let i = 0; i < index; i++) state = selectNext(state);
    expect(chatAnchor(state)).toBe(attribution.matched_request_id);
  });
});

describe("timeline bar", () => {
  it("event-spaced positions are uniform, time-proportional follow timestamps", () => {
    const [t] = loadFixtures();
    let state = createState({ timeline: t, warnings: [] });
    const spaced = markerPositions(state);
    expect(spaced[0].x).toBe(0);
    expect(spaced[spaced.length - 1].x).toBe(1);
    const gaps = spaced.slice(1).map((m, i) => m.x - spaced[i].x);
    for (const gap of gaps) expect(gap).toBeCloseTo(gaps[0], 9);

    state = setMode(state, "time-proportional");
    const proportional = markerPositions(state);
    const t0 = t.events[0].timestamp_ms;
    const t1 = t.events[t.events.length - 1].timestamp_ms;
    proportional.forEach(({ event, x }) => {
      expect(x).toBeCloseTo((event.timestamp_ms - t0) / (t1 - t0), 9);
    });
  });

  it("all five marker colors are distinct", () => {
    expect(new Set(Object.values(EVENT_COLORS)).size).toBe(5);
  });
});

describe("diff rendering", () => {
  it("replays hunks into coherent unified rows", () => {
    const [t] = loadFixtures();
    const attribution = firstFullMatch(t);
    const commit = t.commits.find((c) => c.commit_id === attribution.commit_id)!;
    const diff = commit.file_diffs.find((d) => d.file_path === attribution.file_path)!;
    const rows = unifiedDiffRows(t, commit.commit_id, diff);
    const added = rows.filter((r) => r.type === "add").map((r) => r.text);
    expect(added).toEqual(diff.added_lines);
    const removed = rows.filter((r) => r.type === "del").map((r) => r.text);
    expect(removed).toEqual(diff.removed_lines);
    expect(rows.some((r) => r.type === "header")).toBe(true);
  });

  it("workspace reconstruction matches cumulative diff application", () => {
    const [t] = loadFixtures();
    const last = t.commits[t.commits.length - 1];
    const files = workspaceAt(t, last.commit_id);
    expect(files.length).toBeGreaterThan(0);
    for (const file of files) {
      expect(file.lines.length).toBeGreaterThanOrEqual(0);
    }
    // Selecting an earlier commit never shows later content.
    const first = t.commits[0];
    const initial = workspaceAt(t, first.commit_id);
    expect(initial.length).toBeLessThanOrEqual(files.length);
  });
});

describe("read-only guarantee", () => {
  it("no state operation mutates the loaded timeline", () => {
    const [path] = fixturePaths();
    const text = readFileSync(path, "utf-8");
    const { timeline, warnings } = loadTimeline(text);
    const snapshot = JSON.stringify(timeline);
    let state = createState({ timeline, warnings });
    state = selectNext(state);
    state = toggleFileFilter(state, firstFullMatch(timeline).file_path);
    state = setMode(state, "time-proportional");
    markerPositions(state);
    workspaceAt(timeline, timeline.commits[timeline.commits.length - 1].commit_id);
    buildOverview([timeline]);
    badgeDetail(timeline, firstFullMatch(timeline));
    expect(JSON.stringify(timeline)).toBe(snapshot);
  });
});
