import type { RatioResponse, ViolationsResponse } from "../types";

const SVG_NS = "http://www.w3.org/2000/svg";

const CHART_W = 480;
const CHART_H = 160;
const BAR_W = CHART_W / 24;

/** 24 hourly bars plus a threshold line; bars carry the server's values
 * verbatim and are flagged exactly where the API says the threshold was
 * exceeded. */
export function renderRatioChart(ratio: RatioResponse): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "ratio-chart");
  svg.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);

  // scale so both the tallest bar and the threshold line stay inside view
  const top = Math.max(...ratio.ratios, ratio.threshold, 1e-9) * 1.15;
  const scaleY = (value: number) => CHART_H - (value / top) * (CHART_H - 12);

  ratio.ratios.forEach((value, hour) => {
    const bar = document.createElementNS(SVG_NS, "rect");
    bar.setAttribute("class", ratio.exceeded[hour] ? "ratio-bar exceeded" : "ratio-bar");
    bar.setAttribute("x", String(hour * BAR_W + 1));
    bar.setAttribute("y", String(scaleY(value)));
    bar.setAttribute("width", String(BAR_W - 2));
    bar.setAttribute("height", String(CHART_H - scaleY(value)));
    bar.dataset.hour = String(hour);
    bar.dataset.ratio = String(value);
    const label = document.createElementNS(SVG_NS, "title");
    label.textContent = `${String(hour).padStart(2, "0")}:00  ratio ${value}`;
    bar.appendChild(label);
    svg.appendChild(bar);
  });

  const line = document.createElementNS(SVG_NS, "line");
  line.setAttribute("class", "threshold-line");
  line.setAttribute("x1", "0");
  line.setAttribute("x2", String(CHART_W));
  line.setAttribute("y1", String(scaleY(ratio.threshold)));
  line.setAttribute("y2", String(scaleY(ratio.threshold)));
  line.dataset.threshold = String(ratio.threshold);
  svg.appendChild(line);
  return svg;
}

export function renderViolations(found: ViolationsResponse): HTMLElement {
  const box = document.createElement("div");
  box.className = "violations";

  const totals = document.createElement("p");
  totals.className = "violation-totals";
  const parts = Object.entries(found.totals).map(([sev, n]) => `${sev}: ${n}`);
  totals.textContent = parts.length ? parts.join(", ") : "no violations in range";
  box.appendChild(totals);

  if (found.violations.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No rule fired over the selected range.";
    box.appendChild(empty);
    return box;
  }

  const table = document.createElement("table");
  table.className = "violation-table";
  for (const v of found.violations) {
    const row = document.createElement("tr");
    row.className = `violation-row severity-${v.severity}`;
    for (const cell of [v.window_start, v.post_id, v.rule_id, v.severity]) {
      const td = document.createElement("td");
      td.textContent = cell;
      row.appendChild(td);
    }
    table.appendChild(row);
  }
  box.appendChild(table);
  return box;
}
