// DOM wiring for the four-panel replay plus the multi-user overview.
// All state transitions go through the pure functions in viewer.ts; this
// module only reads state and paints. The loaded data is never mutated.

import type { Attribution, ChatSession, Timeline } from "./types.js";
import {
  badgeDetail,
  buildOverview,
  chatAnchor,
  createState,
  EVENT_COLORS,
  loadTimeline,
  markerPositions,
  selectedEvent,
  selectIndex,
  selectNext,
  selectPrev,
  setMode,
  TimelineLoadError,
  toggleFileFilter,
  unifiedDiffRows,
  ViewerState,
  visibleEvents,
  workspaceAt,
} from "./viewer.js";

let state: ViewerState | null = null;
const loadedTimelines: Timeline[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

function showError(message: string): void {
  const banner = el("error-banner");
  banner.textContent = message;
  banner.hidden = false;
}

function showWarnings(warnings: string[]): void {
  const banner = el("warning-banner");
  if (warnings.length === 0) {
    banner.hidden = true;
    return;
  }
  banner.textContent = warnings.join(" • ");
  banner.hidden = false;
}

function update(next: ViewerState): void {
  state = next;
  render();
}

function render(): void {
  if (!state) return;
  renderFileTree();
  renderDiff();
  renderChat();
  renderTimelineBar();
  renderStatus();
}

function renderStatus(): void {
  if (!state) return;
  const event = selectedEvent(state);
  const total = visibleEvents(state).length;
  const filter = state.fileFilter ? ` · filter: ${state.fileFilter}` : "";
  el("status").textContent = event
    ? `event ${state.selected + 1}/${total} · ${event.kind} @ ${new Date(event.timestamp_ms).toISOString()}${filter}`
    : "no events";
}

function selectedCommitId(): string | null {
  if (!state) return null;
  const event = selectedEvent(state);
  if (!event) return null;
  if (event.kind.endsWith("_edit")) return event.payload_ref;
  // For chat events keep the most recent prior edit in view.
  const events = state.timeline.events;
  let last: string | null = null;
  for (const ev of events) {
    if (ev.timestamp_ms > event.timestamp_ms) break;
    if (ev.kind.endsWith("_edit")) last = ev.payload_ref;
  }
  return last;
}

function renderFileTree(): void {
  if (!state) return;
  const tree = el("file-tree");
  clear(tree);
  const commitId = selectedCommitId();
  if (!commitId) {
    tree.textContent = "workspace empty at this point";
    return;
  }
  for (const file of workspaceAt(state.timeline, commitId)) {
    const row = document.createElement("div");
    row.className = "file-row" + (state.fileFilter === file.path ? " filtered" : "");
    const marker = file.change === "added" ? "A" : file.change === "modified" ? "M" : file.change === "deleted" ? "D" : " ";
    const label = document.createElement("span");
    label.className = `change change-${file.change ?? "none"}`;
    label.textContent = marker;
    row.appendChild(label);
    const name = document.createElement("span");
    name.textContent = file.path;
    row.appendChild(name);
    if (file.badge && file.badge.origin !== "human") {
      const badge = document.createElement("button");
      badge.className = `badge badge-${file.badge.origin}`;
      badge.textContent = file.badge.origin === "copilot" ? "AI" : "EXT";
      badge.title = "attribution details";
      badge.addEventListener("click", (e) => {
        e.stopPropagation();
        renderBadgeDetail(file.badge!);
      });
      row.appendChild(badge);
    }
    row.addEventListener("dblclick", () => {
      if (state) update(toggleFileFilter(state, file.path));
    });
    tree.appendChild(row);
  }
}

function renderBadgeDetail(attribution: Attribution): void {
  if (!state) return;
  const detail = badgeDetail(state.timeline, attribution);
  const panel = el("badge-detail");
  clear(panel);
  panel.hidden = false;
  const lines = [
    `origin: ${detail.origin} (${detail.matchClass}, score ${detail.matchScore.toFixed(3)})`,
    detail.timeDeltaS !== undefined ? `time delta: ${detail.timeDeltaS.toFixed(1)} s after request` : null,
    detail.promptText ? `prompt: ${detail.promptText}` : null,
  ].filter((line): line is string => line !== null);
  for (const text of lines) {
    const p = document.createElement("div");
    p.textContent = text;
    panel.appendChild(p);
  }
  if (detail.tegLines) {
    const pre = document.createElement("pre");
    pre.textContent = detail.tegLines.join("\n");
    panel.appendChild(pre);
  }
  const close = document.createElement("button");
  close.textContent = "close";
  close.addEventListener("click", () => {
    panel.hidden = true;
  });
  panel.appendChild(close);
}

function renderDiff(): void {
  if (!state) return;
  const container = el("diff-view");
  clear(container);
  const commitId = selectedCommitId();
  if (!commitId) {
    container.textContent = "select an edit event to see its diff";
    return;
  }
  const commit = state.timeline.commits.find((c) => c.commit_id === commitId);
  if (!commit) return;
  const heading = document.createElement("h3");
  heading.textContent = `${commit.kind} · ${commit.commit_id.slice(0, 12)}`;
  container.appendChild(heading);
  for (const diff of commit.file_diffs) {
    if (state.fileFilter && diff.file_path !== state.fileFilter) continue;
    const fileHead = document.createElement("div");
    fileHead.className = "diff-file";
    fileHead.textContent = diff.file_path;
    container.appendChild(fileHead);
    const table = document.createElement("table");
    table.className = "diff";
    for (const row of unifiedDiffRows(state.timeline, commitId, diff)) {
      const tr = document.createElement("tr");
      tr.className = `diff-${row.type}`;
      const oldNo = document.createElement("td");
      oldNo.textContent = row.oldNo?.toString() ?? "";
      const newNo = document.createElement("td");
      newNo.textContent = row.newNo?.toString() ?? "";
      const text = document.createElement("td");
      const sign = row.type === "add" ? "+" : row.type === "del" ? "-" : " ";
      text.textContent = row.type === "header" ? row.text : `${sign} ${row.text}`;
      tr.append(oldNo, newNo, text);
      table.appendChild(tr);
    }
    container.appendChild(table);
  }
}

function renderChat(): void {
  if (!state) return;
  const panel = el("chat-panel");
  clear(panel);
  const anchor = chatAnchor(state);
  const sessions: ChatSession[] = state.timeline.sessions;
  for (const session of sessions) {
    for (const request of session.requests) {
      const bubble = document.createElement("div");
      bubble.className = "chat-message" + (request.request_id === anchor ? " active" : "");
      bubble.dataset.requestId = request.request_id;
      const when = new Date(request.timestamp_ms).toISOString();
      const head = document.createElement("div");
      head.className = "chat-head";
      head.textContent = `${when}${request.is_agent_turn ? " · agent" : ""}${request.trivial ? " · trivial" : ""}`;
      bubble.appendChild(head);
      const prompt = document.createElement("div");
      prompt.textContent = request.prompt_text;
      bubble.appendChild(prompt);
      if (request.response_text) {
        const response = document.createElement("div");
        response.className = "chat-response";
        response.textContent = request.response_text;
        bubble.appendChild(response);
      }
      panel.appendChild(bubble);
      if (request.request_id === anchor && typeof bubble.scrollIntoView === "function") {
        queueMicrotask(() => bubble.scrollIntoView({ block: "nearest" }));
      }
    }
  }
}

function renderTimelineBar(): void {
  if (!state) return;
  const bar = el("timeline-bar");
  clear(bar);
  const markers = markerPositions(state);
  markers.forEach(({ event, x }, i) => {
    const dot = document.createElement("button");
    dot.className = "marker" + (i === state!.selected ? " selected" : "");
    dot.style.left = `${(x * 100).toFixed(3)}%`;
    dot.style.background = EVENT_COLORS[event.kind];
    dot.title = `${event.kind} @ ${new Date(event.timestamp_ms).toISOString()}`;
    dot.addEventListener("click", () => {
      if (state) update(selectIndex(state, i));
    });
    bar.appendChild(dot);
  });
}

function renderOverview(): void {
  const section = el("overview");
  clear(section);
  if (loadedTimelines.length < 2) {
    section.hidden = true;
    return;
  }
  section.hidden = false;
  const overview = buildOverview(loadedTimelines);
  const strip = document.createElement("div");
  strip.className = "density-strip";
  for (let b = 0; b < overview.bins; b++) {
    const total = Object.values(overview.density).reduce((acc, v) => acc + v[b], 0);
    const cell = document.createElement("span");
    cell.className = "density-cell";
    cell.style.opacity = total === 0 ? "0.08" : Math.min(1, 0.2 + total / 10).toFixed(2);
    strip.appendChild(cell);
  }
  section.appendChild(strip);
  for (const row of overview.rows) {
    const div = document.createElement("div");
    div.className = "overview-row";
    const share = row.aiEditShare === null ? "n/a" : row.aiEditShare.toFixed(2);
    div.textContent = `${row.userHash.slice(0, 12)} · share ${share} · ${row.nEvents} events`;
    div.addEventListener("click", () => {
      const timeline = loadedTimelines.find((t) => t.user.user_hash === row.userHash);
      if (timeline) {
        update(createState({ timeline, warnings: [] }));
      }
    });
    section.appendChild(div);
  }
}

function acceptFile(file: File): void {
  file.text().then((text) => {
    try {
      const loaded = loadTimeline(text);
      // Re-dropping a user's export replaces the earlier copy.
      const existing = loadedTimelines.findIndex(
        (t) => t.user.user_hash === loaded.timeline.user.user_hash,
      );
      if (existing >= 0) loadedTimelines.splice(existing, 1);
      loadedTimelines.push(loaded.timeline);
      showWarnings(loaded.warnings);
      el("error-banner").hidden = true;
      update(createState(loaded));
      renderOverview();
    } catch (err) {
      if (err instanceof TimelineLoadError) {
        showError(`cannot load ${file.name}: ${err.message}`);
      } else {
        throw err;
      }
    }
  });
}

export function init(): void {
  const drop = el("dropzone");
  for (const name of ["dragenter", "dragover"]) {
    drop.addEventListener(name, (e) => {
      e.preventDefault();
      drop.classList.add("active");
    });
  }
  drop.addEventListener("dragleave", () => drop.classList.remove("active"));
  drop.addEventListener("drop", (e) => {
    e.preventDefault();
    drop.classList.remove("active");
    const files = (e as DragEvent).dataTransfer?.files;
    if (files) for (const file of files) acceptFile(file);
  });
  const input = el<HTMLInputElement>("file-input");
  input.addEventListener("change", () => {
    if (input.files) for (const file of input.files) acceptFile(file);
  });

  el<HTMLSelectElement>("mode-select").addEventListener("change", (e) => {
    if (!state) return;
    const value = (e.target as HTMLSelectElement).value;
    update(setMode(state, value === "time" ? "time-proportional" : "event-spaced"));
  });

  document.addEventListener("keydown", (e) => {
    if (!state) return;
    if (e.key === "ArrowRight" || e.key === "j") update(selectNext(state));
    if (e.key === "ArrowLeft" || e.key === "k") update(selectPrev(state));
  });
}
