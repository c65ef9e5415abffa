import { ApiClient, ApiError } from "./api.js";
import { STATUS_LABELS, isTerminal } from "./format.js";
import { RunSummary } from "./types.js";

// Run list screen: status badges, a new-run form, and live refresh. Updates
// ride the events endpoint of the newest active run (the server long-polls),
// falling back to plain list fetches when everything is terminal.
export class RunListScreen {
  private runs: RunSummary[] = [];
  private cursors = new Map<string, number>();
  private error: string | null = null;
  private needToken = false;
  private polling = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private onOpen: (runId: string) => void,
  ) {}

  async refresh(): Promise<void> {
    try {
      this.runs = await this.api.listRuns();
      this.error = null;
      this.needToken = false;
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.needToken = true;
      } else {
        this.error = err instanceof Error ? err.message : String(err);
      }
    }
    this.render();
  }

  // One wait-and-refresh step; the main loop calls this repeatedly.
  async pollOnce(): Promise<void> {
    const active = this.runs.find((r) => !isTerminal(r.status));
    if (active) {
      try {
        const since = this.cursors.get(active.run_id) ?? 0;
        const events = await this.api.getEvents(active.run_id, since);
        if (events.length > 0) {
          this.cursors.set(active.run_id, events[events.length - 1].seq);
        }
      } catch {
        // fall through to the list fetch, which reports the error
      }
    }
    await this.refresh();
  }

  startPolling(idleDelayMs = 2000): void {
    if (this.polling) return;
    this.polling = true;
    const loop = async () => {
      if (!this.polling) return;
      await this.pollOnce();
      const delay = this.runs.some((r) => !isTerminal(r.status)) ? 0 : idleDelayMs;
      setTimeout(loop, delay);
    };
    void this.refresh().then(() => setTimeout(loop, 0));
  }

  stopPolling(): void {
    this.polling = false;
  }

  private async startRun(query: string): Promise<void> {
    try {
      const runId = await this.api.startRun(query);
      await this.refresh();
      this.onOpen(runId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.needToken = true;
        this.render();
      } else {
        this.error = err instanceof Error ? err.message : String(err);
        this.render();
      }
    }
  }

  render(): void {
    this.root.textContent = "";

    if (this.needToken) {
      this.root.append(this.tokenPrompt());
      return;
    }
    if (this.error !== null) {
      this.root.append(this.errorBanner());
    }

    this.root.append(this.newRunForm());

    if (this.runs.length === 0) {
      const empty = document.createElement("p");
      empty.className = "placeholder";
      empty.textContent = "no runs yet";
      this.root.append(empty);
      return;
    }

    const table = document.createElement("table");
    table.className = "runs";
    const head = document.createElement("tr");
    for (const title of ["query", "status", "started", ""]) {
      const th = document.createElement("th");
      th.textContent = title;
      head.append(th);
    }
    table.append(head);
    for (const run of this.runs) {
      const row = document.createElement("tr");
      row.dataset.runId = run.run_id;

      const query = document.createElement("td");
      query.textContent = run.query;

      const status = document.createElement("td");
      const badge = document.createElement("span");
      badge.className = `badge badge-${run.status}`;
      badge.textContent = STATUS_LABELS[run.status];
      status.append(badge);

      const started = document.createElement("td");
      started.textContent = run.created_at.replace("T", " ").slice(0, 19);

      const actions = document.createElement("td");
      const open = document.createElement("button");
      open.textContent = "open";
      open.addEventListener("click", () => this.onOpen(run.run_id));
      actions.append(open);

      row.append(query, status, started, actions);
      table.append(row);
    }
    this.root.append(table);
  }

  private newRunForm(): HTMLFormElement {
    const form = document.createElement("form");
    form.className = "new-run";
    const input = document.createElement("input");
    input.name = "query";
    input.placeholder = "describe the part to generate";
    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "start run";
    form.append(input, submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (input.value.trim()) void this.startRun(input.value.trim());
    });
    return form;
  }

  private errorBanner(): HTMLDivElement {
    const banner = document.createElement("div");
    banner.className = "banner error";
    const text = document.createElement("span");
    text.textContent = `API unreachable: ${this.error}`;
    const retry = document.createElement("button");
    retry.textContent = "retry";
    retry.addEventListener("click", () => void this.refresh());
    banner.append(text, retry);
    return banner;
  }

  private tokenPrompt(): HTMLFormElement {
    const form = document.createElement("form");
    form.className = "token-prompt";
    const label = document.createElement("label");
    label.textContent = "API token required";
    const input = document.createElement("input");
    input.name = "token";
    input.type = "password";
    const save = document.createElement("button");
    save.type = "submit";
    save.textContent = "save";
    form.append(label, input, save);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.api.setToken(input.value);
      this.needToken = false;
      void this.refresh();
    });
    return form;
  }
}
