import { ApiClient } from "./api.js";
import { ChartItem, barChart, chartLegend, pieChart } from "./charts.js";
import { MetricsDoc } from "./types.js";

// Benchmark report screen. All numbers on screen come verbatim from the
// report's display block; raw fractions are used only for chart geometry.
export class MetricsScreen {
  doc: MetricsDoc | null = null;
  private error: string | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private reportPath = "/reports/metrics.json",
  ) {}

  async load(): Promise<void> {
    try {
      this.doc = await this.api.getMetrics(this.reportPath);
      this.error = null;
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }

  render(): void {
    this.root.textContent = "";

    if (this.error !== null) {
      const banner = document.createElement("div");
      banner.className = "banner error";
      banner.textContent = `cannot load report: ${this.error}`;
      this.root.append(banner);
      return;
    }
    if (!this.doc) {
      const empty = document.createElement("p");
      empty.className = "placeholder";
      empty.textContent = "no benchmark report yet";
      this.root.append(empty);
      return;
    }

    const { display } = this.doc;

    this.root.append(this.heading("success rate by refinement iteration"));
    const table = document.createElement("table");
    table.className = "success-at";
    const head = document.createElement("tr");
    for (const label of ["k", "solved", "success rate"]) {
      const th = document.createElement("th");
      th.textContent = label;
      head.append(th);
    }
    table.append(head);
    for (const row of display.success_at) {
      const tr = document.createElement("tr");
      for (const cell of [String(row.k), row.exact, row.percent]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.append(td);
      }
      table.append(tr);
    }
    this.root.append(table);

    this.root.append(this.heading("accuracy by difficulty"));
    const difficultyItems: ChartItem[] = display.per_difficulty.map((entry) => ({
      label: entry.difficulty,
      fraction: this.doc!.per_difficulty[entry.difficulty] ?? 0,
      display: entry.percent,
    }));
    this.root.append(barChart(difficultyItems, "bar-chart difficulty"));

    this.root.append(this.heading("gains per iteration"));
    if (display.deltas.length > 0) {
      const deltaItems: ChartItem[] = display.deltas.map((entry, i) => ({
        label: entry.step,
        fraction: this.doc!.deltas[i] ?? 0,
        display: entry.points,
      }));
      this.root.append(barChart(deltaItems, "bar-chart deltas"));
    }

    this.root.append(this.heading("failure breakdown"));
    if (display.failures.length === 0) {
      const none = document.createElement("p");
      none.className = "placeholder no-failures";
      none.textContent = "no failures";
      this.root.append(none);
    } else {
      const failureItems: ChartItem[] = display.failures.map((entry) => ({
        label: entry.label,
        fraction: this.doc!.failure_breakdown[entry.kind] ?? 0,
        display: `${entry.exact} (${entry.percent})`,
      }));
      this.root.append(pieChart(failureItems), chartLegend(failureItems));
    }

    const summary = document.createElement("p");
    summary.className = "summary";
    summary.textContent = display.summary;
    this.root.append(summary);
  }

  private heading(text: string): HTMLHeadingElement {
    const h = document.createElement("h3");
    h.textContent = text;
    return h;
  }
}
