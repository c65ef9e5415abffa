// Mirrors of the engine's /v1 JSON payloads. Field names match the wire.

export type RunStatus = "running" | "awaiting_feedback" | "success" | "failure" | "aborted";

export const TERMINAL_STATUSES: RunStatus[] = ["success", "failure", "aborted"];

export interface RunSummary {
  run_id: string;
  query: string;
  status: RunStatus;
  created_at: string;
}

export interface MacroVersion {
  version_index: number;
  dialect: string;
  text?: string;
}

export interface ExecutionView {
  outcome: "ok" | "error";
  error_message: string | null;
  error_class: string | null;
  duration: number;
}

export interface RenderView {
  kind: "png" | "descriptor";
  path_or_hash: string;
  view: string | null;
}

export interface CaptionView {
  text: string;
  source: "machine" | "human";
}

export interface ScoreView {
  value: number;
  backend: string;
}

export interface AttemptView {
  index: number;
  plan_text: string | null;
  macro_versions: MacroVersion[];
  execution: ExecutionView | null;
  render: RenderView | null;
  caption: CaptionView | null;
  score: ScoreView | null;
}

export interface VerdictView {
  auto_pass: boolean;
  human_success: boolean;
  decided_at: string | null;
}

export interface RunSnapshot {
  run_id: string;
  query: string;
  created_at: string;
  config: Record<string, unknown>;
  status: RunStatus;
  failure_kind: string | null;
  abort_cause: string | null;
  verdict: VerdictView | null;
  attempts: AttemptView[];
}

export interface RunEvent {
  v: number;
  run_id: string;
  seq: number;
  at: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface CaptionRequest {
  attempt: number;
  machine_caption: string;
  issued_at: string;
  deadline: string;
}

// One open run view: snapshot plus the live event cursor and any pending
// feedback request. The countdown is derived from the request's deadline.
export interface RunView {
  snapshot: RunSnapshot;
  cursor: number;
  pendingCaption: CaptionRequest | null;
}

// metrics.json written by the benchmark reporter. The display block carries
// pre-formatted strings; screens show those verbatim and never re-round.
export interface MetricsDisplayRow {
  k: number;
  exact: string;
  percent: string;
}

export interface MetricsDisplay {
  success_at: MetricsDisplayRow[];
  per_difficulty: { difficulty: string; exact: string; percent: string }[];
  failures: { kind: string; label: string; exact: string; percent: string }[];
  deltas: { step: string; points: string }[];
  summary: string;
}

export interface MetricsDoc {
  success_at: number[];
  per_difficulty: Record<string, number>;
  failure_breakdown: Record<string, number>;
  deltas: number[];
  totals: Record<string, unknown>;
  display: MetricsDisplay;
}
