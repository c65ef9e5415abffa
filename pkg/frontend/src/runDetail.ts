import { ApiClient, ApiError } from "./api.js";
import { STATUS_LABELS, artifactName, countdown, isTerminal, scoreText } from "./format.js";
import { AttemptView, CaptionRequest, RunEvent, RunView } from "./types.js";

// Detail screen for one run: per-attempt artifacts, the caption override
// form while the run is awaiting feedback, and verdict buttons once it is
// terminal. One long-poll loop per open view; re-renders are idempotent.
export class RunDetailScreen {
  view: RunView | null = null;
  notice: string | null = null;
  private polling = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private runId: string,
  ) {}

  async load(): Promise<void> {
    const snapshot = await this.api.getRun(this.runId);
    this.view = { snapshot, cursor: 0, pendingCaption: null };
    await this.consumeEvents(await this.api.getEvents(this.runId, 0), false);
    this.render();
  }

  // One long-poll step; the server holds the request until there is news.
  async pollOnce(): Promise<void> {
    if (!this.view) return;
    const events = await this.api.getEvents(this.runId, this.view.cursor);
    if (events.length > 0) {
      await this.consumeEvents(events, true);
      this.render();
    }
  }

  private async consumeEvents(events: RunEvent[], refetch: boolean): Promise<void> {
    if (!this.view || events.length === 0) return;
    for (const event of events) {
      this.view.cursor = event.seq;
      if (event.kind === "caption_requested") {
        this.view.pendingCaption = event.payload as unknown as CaptionRequest;
      } else if (event.kind === "caption_decided" || event.kind === "run_finished") {
        this.view.pendingCaption = null;
      }
    }
    if (refetch) {
      this.view.snapshot = await this.api.getRun(this.runId);
    }
  }

  startPolling(): void {
    if (this.polling) return;
    this.polling = true;
    const loop = async () => {
      if (!this.polling) return;
      try {
        await this.pollOnce();
      } catch {
        // transient; next loop retries
      }
      const delay = this.view && isTerminal(this.view.snapshot.status) ? 3000 : 0;
      setTimeout(loop, delay);
    };
    setTimeout(loop, 0);
  }

  stopPolling(): void {
    this.polling = false;
    if (this.timer) clearInterval(this.timer);
  }

  updateCountdown(nowMs: number): void {
    const node = this.root.querySelector(".countdown");
    if (node && this.view?.pendingCaption) {
      node.textContent = countdown(this.view.pendingCaption.deadline, nowMs);
    }
  }

  async submitCaption(text: string): Promise<void> {
    try {
      await this.api.submitCaption(this.runId, text);
      this.notice = "caption submitted";
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.notice = "feedback window closed";
      } else {
        this.notice = err instanceof Error ? err.message : String(err);
      }
    }
    this.render();
  }

  async submitVerdict(success: boolean): Promise<void> {
    try {
      await this.api.submitVerdict(this.runId, success);
      if (this.view) this.view.snapshot = await this.api.getRun(this.runId);
      this.notice = "verdict recorded";
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.notice = "verdict not accepted: run still in progress";
      } else {
        this.notice = err instanceof Error ? err.message : String(err);
      }
    }
    this.render();
  }

  render(): void {
    this.root.textContent = "";
    if (!this.view) return;
    const { snapshot } = this.view;

    const header = document.createElement("header");
    header.className = "run-header";
    const title = document.createElement("h2");
    title.textContent = snapshot.query;
    const badge = document.createElement("span");
    badge.className = `badge badge-${snapshot.status}`;
    badge.textContent = STATUS_LABELS[snapshot.status];
    header.append(title, badge);
    if (snapshot.failure_kind) {
      const kind = document.createElement("span");
      kind.className = "failure-kind";
      kind.textContent = snapshot.failure_kind.replace("_", " ");
      header.append(kind);
    }
    if (snapshot.abort_cause) {
      const cause = document.createElement("p");
      cause.className = "abort-cause";
      cause.textContent = `aborted: ${snapshot.abort_cause}`;
      header.append(cause);
    }
    this.root.append(header);

    if (this.notice) {
      const note = document.createElement("p");
      note.className = "notice";
      note.textContent = this.notice;
      this.root.append(note);
    }

    for (const attempt of snapshot.attempts) {
      this.root.append(this.attemptCard(attempt));
    }

    const feedback = this.feedbackSection();
    if (feedback) this.root.append(feedback);

    if (isTerminal(snapshot.status) && snapshot.status !== "aborted") {
      this.root.append(this.verdictSection());
    }
  }

  private attemptCard(attempt: AttemptView): HTMLElement {
    const card = document.createElement("section");
    card.className = "attempt";
    card.dataset.index = String(attempt.index);

    const heading = document.createElement("h3");
    heading.textContent = `attempt ${attempt.index}`;
    card.append(heading);

    if (attempt.plan_text) {
      const plan = document.createElement("p");
      plan.className = "plan";
      plan.textContent = attempt.plan_text;
      card.append(plan);
    }

    for (const macro of attempt.macro_versions) {
      const label = document.createElement("h4");
      label.textContent = `macro v${macro.version_index}`;
      // read-only by design: operators steer with captions, not code edits
      const pre = document.createElement("pre");
      pre.className = "macro";
      pre.textContent = macro.text ?? "";
      card.append(label, pre);
    }

    if (attempt.execution && attempt.execution.outcome === "error") {
      const error = document.createElement("pre");
      error.className = "execution-error";
      error.textContent = attempt.execution.error_message ?? "execution failed";
      card.append(error);
    }

    if (attempt.render) {
      if (attempt.render.kind === "png") {
        const img = document.createElement("img");
        img.className = "render";
        img.src = this.api.artifactUrl(this.runId, artifactName(attempt.render.path_or_hash));
        img.alt = `render of attempt ${attempt.index}`;
        card.append(img);
      } else {
        const link = document.createElement("a");
        link.className = "render-link";
        link.href = this.api.artifactUrl(this.runId, artifactName(attempt.render.path_or_hash));
        link.textContent = "scene descriptor";
        card.append(link);
      }
    }

    if (attempt.caption) {
      const caption = document.createElement("p");
      caption.className = `caption caption-${attempt.caption.source}`;
      caption.textContent = `"${attempt.caption.text}" (${attempt.caption.source})`;
      card.append(caption);
    }

    if (attempt.score) {
      const score = document.createElement("p");
      score.className = "score";
      score.textContent = `score ${scoreText(attempt.score.value)}`;
      card.append(score);
    }

    return card;
  }

  private feedbackSection(): HTMLElement | null {
    if (!this.view) return null;
    const { snapshot, pendingCaption } = this.view;
    if (isTerminal(snapshot.status) || !pendingCaption) return null;

    const active = snapshot.status === "awaiting_feedback";
    const section = document.createElement("section");
    section.className = "feedback";

    const heading = document.createElement("h3");
    heading.textContent = "caption override";
    const timerLabel = document.createElement("span");
    timerLabel.className = "countdown";
    timerLabel.textContent = countdown(pendingCaption.deadline, Date.now());
    heading.append(" ", timerLabel);

    const textarea = document.createElement("textarea");
    textarea.name = "caption";
    textarea.value = pendingCaption.machine_caption;
    textarea.disabled = !active;

    const submit = document.createElement("button");
    submit.textContent = "send caption";
    submit.disabled = !active;
    submit.addEventListener("click", () => {
      if (textarea.value.trim()) void this.submitCaption(textarea.value.trim());
    });

    section.append(heading, textarea, submit);

    if (this.timer) clearInterval(this.timer);
    this.timer = setInterval(() => this.updateCountdown(Date.now()), 500);
    return section;
  }

  private verdictSection(): HTMLElement {
    const section = document.createElement("section");
    section.className = "verdict";
    const heading = document.createElement("h3");
    heading.textContent = "operator verdict";
    section.append(heading);

    const recorded = this.view?.snapshot.verdict;
    if (recorded) {
      const note = document.createElement("p");
      note.className = "verdict-recorded";
      note.textContent = recorded.human_success ? "marked correct" : "marked wrong";
      section.append(note);
    }

    const accept = document.createElement("button");
    accept.className = "verdict-accept";
    accept.textContent = "mark correct";
    accept.addEventListener("click", () => void this.submitVerdict(true));
    const reject = document.createElement("button");
    reject.className = "verdict-reject";
    reject.textContent = "mark wrong";
    reject.addEventListener("click", () => void this.submitVerdict(false));
    section.append(accept, reject);
    return section;
  }
}
