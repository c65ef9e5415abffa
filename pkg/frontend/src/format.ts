import { RunStatus, TERMINAL_STATUSES } from "./types.js";

export function isTerminal(status: RunStatus): boolean {
  return TERMINAL_STATUSES.includes(status);
}

export const STATUS_LABELS: Record<RunStatus, string> = {
  running: "running",
  awaiting_feedback: "awaiting feedback",
  success: "success",
  failure: "failure",
  aborted: "aborted",
};

// "m:ss" until the deadline, clamped at 0:00 once it has passed.
export function countdown(deadlineIso: string, nowMs: number): string {
  const remaining = Math.max(0, Date.parse(deadlineIso) - nowMs);
  const totalSeconds = Math.floor(remaining / 1000);
  const minutes = Math.floor(totalSeconds / 60);
  const seconds = totalSeconds % 60;
  return `${minutes}:${String(seconds).padStart(2, "0")}`;
}

// The server reports absolute artifact paths; the artifact endpoint wants the
// run-relative name, which is the last two path segments (attempt-i/file).
export function artifactName(pathOrHash: string): string {
  const parts = pathOrHash.split("/").filter((p) => p.length > 0);
  return parts.slice(-2).join("/");
}

export function scoreText(value: number): string {
  return value.toFixed(3);
}
