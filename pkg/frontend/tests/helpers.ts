// Scripted fetch + payload builders shared by the screen tests.

import { ApiClient, ApiClientOptions } from "../src/api.js";
import {
  AttemptView,
  MetricsDoc,
  RunEvent,
  RunSnapshot,
  RunStatus,
  RunSummary,
} from "../src/types.js";

export interface RecordedCall {
  method: string;
  url: string;
  body: unknown;
  headers: Record<string, string>;
}

export type RouteResult = { status?: number; json?: unknown } | undefined;
export type Router = (method: string, url: string, body: unknown) => RouteResult;

export class FakeHttp {
  calls: RecordedCall[] = [];

  constructor(private router: Router) {}

  fetchFn: typeof fetch = async (input, init = {}) => {
    const url = String(input);
    const method = init.method ?? "GET";
    const body = typeof init.body === "string" ? JSON.parse(init.body) : null;
    this.calls.push({
      method,
      url,
      body,
      headers: (init.headers as Record<string, string>) ?? {},
    });
    const result = this.router(method, url, body);
    if (!result) throw new TypeError("fetch failed");
    return new Response(JSON.stringify(result.json ?? {}), {
      status: result.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };

  client(options: Partial<ApiClientOptions> = {}): ApiClient {
    return new ApiClient({ fetchFn: this.fetchFn, ...options });
  }
}

export function summary(overrides: Partial<RunSummary> = {}): RunSummary {
  return {
    run_id: "run-1",
    query: "a 10mm cube",
    status: "running" as RunStatus,
    created_at: "2026-08-25T12:00:00+00:00",
    ...overrides,
  };
}

export function attempt(overrides: Partial<AttemptView> = {}): AttemptView {
  return {
    index: 0,
    plan_text: "Here is the plan.",
    macro_versions: [{ version_index: 0, dialect: "mock", text: "box b 10 10 10" }],
    execution: { outcome: "ok", error_message: null, error_class: null, duration: 0.01 },
    render: { kind: "descriptor", path_or_hash: "/store/runs/run-1/attempt-0/scene.json", view: null },
    caption: null,
    score: null,
    ...overrides,
  };
}

export function snapshot(overrides: Partial<RunSnapshot> = {}): RunSnapshot {
  return {
    run_id: "run-1",
    query: "a 10mm cube",
    created_at: "2026-08-25T12:00:00+00:00",
    config: {},
    status: "running",
    failure_kind: null,
    abort_cause: null,
    verdict: null,
    attempts: [attempt()],
    ...overrides,
  };
}

export function event(seq: number, kind: string, payload: Record<string, unknown> = {}): RunEvent {
  return { v: 1, run_id: "run-1", seq, at: "2026-08-25T12:00:01+00:00", kind, payload };
}

// Shape of a published report for a 55-run fixture whose success@k row is
// the familiar 32.7 / 44.8 / 51.7 / 53.4 progression.
export function metricsDoc(overrides: Partial<MetricsDoc> = {}): MetricsDoc {
  return {
    success_at: [0.327, 0.448, 0.517, 0.534],
    per_difficulty: { easy: 0.8571, medium: 0.35, hard: 0.375 },
    failure_breakdown: { non_executable: 0.654, wrong_structure: 0.346 },
    deltas: [0.121, 0.069, 0.017],
    totals: { rows: 55 },
    display: {
      success_at: [
        { k: 0, exact: "18/55", percent: "32.7%" },
        { k: 1, exact: "25/55", percent: "44.8%" },
        { k: 2, exact: "28/55", percent: "51.7%" },
        { k: 3, exact: "29/55", percent: "53.4%" },
      ],
      per_difficulty: [
        { difficulty: "easy", exact: "18/21", percent: "85.71%" },
        { difficulty: "medium", exact: "7/20", percent: "35%" },
        { difficulty: "hard", exact: "6/16", percent: "37.5%" },
      ],
      failures: [
        { kind: "non_executable", label: "non-executable macro", exact: "17/26", percent: "65.4%" },
        { kind: "wrong_structure", label: "wrong structure", exact: "9/26", percent: "34.6%" },
      ],
      deltas: [
        { step: "0 to 1", points: "12.1" },
        { step: "1 to 2", points: "6.9" },
        { step: "2 to 3", points: "1.7" },
      ],
      summary: "Totals: 29/55 solved; overall improvement 20.7 points (from 32.7% to 53.4%).",
    },
    ...overrides,
  };
}

export function appRoot(): HTMLElement {
  const root = document.createElement("main");
  document.body.append(root);
  return root;
}
