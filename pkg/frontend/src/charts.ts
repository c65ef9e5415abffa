// Small SVG chart builders. Fractions drive geometry only; every visible
// number comes in as a pre-formatted display string.

export interface ChartItem {
  label: string;
  fraction: number;
  display: string;
}

const SVG_NS = "http://www.w3.org/2000/svg";

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

export function barChart(items: ChartItem[], cssClass = "bar-chart"): SVGSVGElement {
  const barWidth = 64;
  const gap = 18;
  const plotHeight = 120;
  const labelBand = 34;
  const width = items.length * (barWidth + gap) + gap;
  const svg = svgElement("svg", {
    class: cssClass,
    width: String(width),
    height: String(plotHeight + labelBand),
    role: "img",
  });
  items.forEach((item, i) => {
    const clamped = Math.max(0, Math.min(1, item.fraction));
    const barHeight = Math.round(clamped * plotHeight);
    const x = gap + i * (barWidth + gap);
    const bar = svgElement("rect", {
      class: `bar bar-${i}`,
      x: String(x),
      y: String(plotHeight - barHeight),
      width: String(barWidth),
      height: String(barHeight),
      "data-fraction": String(item.fraction),
    });
    const value = svgElement("text", {
      class: "bar-value",
      x: String(x + barWidth / 2),
      y: String(Math.max(12, plotHeight - barHeight - 4)),
      "text-anchor": "middle",
    });
    value.textContent = item.display;
    const label = svgElement("text", {
      class: "bar-label",
      x: String(x + barWidth / 2),
      y: String(plotHeight + 16),
      "text-anchor": "middle",
    });
    label.textContent = item.label;
    svg.append(bar, value, label);
  });
  return svg;
}

function arcPath(cx: number, cy: number, r: number, start: number, end: number): string {
  const sx = cx + r * Math.cos(start);
  const sy = cy + r * Math.sin(start);
  const ex = cx + r * Math.cos(end);
  const ey = cy + r * Math.sin(end);
  const largeArc = end - start > Math.PI ? 1 : 0;
  return `M ${cx} ${cy} L ${sx} ${sy} A ${r} ${r} 0 ${largeArc} 1 ${ex} ${ey} Z`;
}

export function pieChart(items: ChartItem[]): SVGSVGElement {
  const size = 160;
  const cx = size / 2;
  const cy = size / 2;
  const r = size / 2 - 4;
  const svg = svgElement("svg", {
    class: "pie-chart",
    width: String(size),
    height: String(size),
    role: "img",
  });
  let angle = -Math.PI / 2;
  items.forEach((item, i) => {
    const sweep = Math.max(0, Math.min(1, item.fraction)) * 2 * Math.PI;
    const attrs = {
      class: `slice slice-${i}`,
      "data-fraction": String(item.fraction),
    };
    if (sweep >= 2 * Math.PI - 1e-9) {
      svg.append(svgElement("circle", { ...attrs, cx: String(cx), cy: String(cy), r: String(r) }));
    } else if (sweep > 0) {
      svg.append(svgElement("path", { ...attrs, d: arcPath(cx, cy, r, angle, angle + sweep) }));
    }
    angle += sweep;
  });
  return svg;
}

export function chartLegend(items: ChartItem[]): HTMLUListElement {
  const list = document.createElement("ul");
  list.className = "legend";
  items.forEach((item, i) => {
    const entry = document.createElement("li");
    entry.className = `legend-${i}`;
    entry.textContent = `${item.label}: ${item.display}`;
    list.append(entry);
  });
  return list;
}
