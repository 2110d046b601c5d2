// Shape of the timeline export (schema_version 1). Unknown extra fields may
// be present anywhere; readers must ignore them, never reject them.

export type EventKind =
  | "human_edit"
  | "copilot_edit"
  | "external_edit"
  | "chat_prompt"
  | "agent_action";

export type Origin = "human" | "copilot" | "external_suspected";
export type MatchClass = "full" | "partial" | "unmatched";

export interface ToolCall {
  tool_name: string;
  arguments_text: string;
  exit_code?: number;
}

export interface TextEditGroup {
  file_path: string;
  proposed_lines: string[];
  request_id: string;
}

export interface ChatRequest {
  request_id: string;
  timestamp_ms: number;
  prompt_text: string;
  model_id: string;
  response_text: string;
  is_agent_turn: boolean;
  trivial: boolean;
  tool_calls: ToolCall[];
  text_edit_groups: TextEditGroup[];
}

export interface ChatSession {
  session_id: string;
  user_hash: string;
  source_format: string;
  requests: ChatRequest[];
}

export interface DiffHunk {
  old_start: number;
  new_start: number;
  removed: string[];
  added: string[];
}

export interface FileDiff {
  file_path: string;
  added_lines: string[];
  removed_lines: string[];
  net_new_chars: number;
  hunks: DiffHunk[];
  created: boolean;
  deleted: boolean;
  is_binary: boolean;
}

export interface ShadowCommit {
  commit_id: string;
  user_hash: string;
  timestamp_ms: number;
  kind: string;
  file_diffs: FileDiff[];
  rename_from?: string;
  rename_to?: string;
}

export interface Attribution {
  commit_id: string;
  file_path: string;
  origin: Origin;
  match_class: MatchClass;
  match_score: number;
  matched_request_id?: string;
  time_delta_s?: number;
}

export interface TimelineEvent {
  event_id: string;
  user_hash: string;
  timestamp_ms: number;
  kind: EventKind;
  payload_ref: string;
}

export interface Timeline {
  schema_version: number;
  user: { user_hash: string };
  attribution_window_s?: number;
  events: TimelineEvent[];
  attributions: Attribution[];
  sessions: ChatSession[];
  commits: ShadowCommit[];
}
