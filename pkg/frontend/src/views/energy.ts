import { ApiClient } from "../api";
import type {
  ActivityBlock,
  ForecastResponse,
  Post,
  Recommendation,
} from "../types";

const SVG_NS = "http://www.w3.org/2000/svg";

const CHART_W = 480;
const CHART_H = 160;
const BAR_W = CHART_W / 24;

/** Hourly forecast bars with the API's zero-activity blocks overlaid as
 * translucent spans. Overlay positions come from matching each block's start
 * timestamp to a forecast point; spans mirror the block fields verbatim. */
export function renderActivityChart(
  forecast: ForecastResponse,
  blocks: ActivityBlock[],
): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "activity-chart");
  svg.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);

  const top = Math.max(...forecast.points.map((p) => p.predicted), 1e-9) * 1.15;
  const scaleY = (value: number) => CHART_H - (value / top) * (CHART_H - 12);

  for (const block of blocks) {
    const at = forecast.points.findIndex((p) => p.ts === block.start);
    if (at < 0) continue;   // block outside the charted day
    const span = document.createElementNS(SVG_NS, "rect");
    span.setAttribute("class", "block-overlay");
    span.setAttribute("x", String(at * BAR_W));
    span.setAttribute("y", "0");
    span.setAttribute("width", String(Math.min(block.length_hours, forecast.points.length - at) * BAR_W));
    span.setAttribute("height", String(CHART_H));
    span.dataset.start = block.start;
    span.dataset.length = String(block.length_hours);
    svg.appendChild(span);
  }

  forecast.points.forEach((point, i) => {
    const bar = document.createElementNS(SVG_NS, "rect");
    bar.setAttribute("class", "activity-bar");
    bar.setAttribute("x", String(i * BAR_W + 1));
    bar.setAttribute("y", String(scaleY(point.predicted)));
    bar.setAttribute("width", String(BAR_W - 2));
    bar.setAttribute("height", String(CHART_H - scaleY(point.predicted)));
    bar.dataset.ts = point.ts;
    bar.dataset.predicted = String(point.predicted);
    const label = document.createElementNS(SVG_NS, "title");
    label.textContent = `${point.ts}  predicted ${point.predicted}`;
    bar.appendChild(label);
    svg.appendChild(bar);
  });
  return svg;
}

function actionLabel(rec: Recommendation): string {
  return rec.action === "dim_to" ? `dim to ${rec.dim_level}` : "switch off half";
}

/** One row per recommendation; the kWh figure is the server's number printed
 * as-is — the UI does no energy arithmetic. */
export function renderRecommendations(recs: Recommendation[]): HTMLElement {
  const list = document.createElement("ul");
  list.className = "recommendation-list";
  if (recs.length === 0) {
    const empty = document.createElement("li");
    empty.className = "empty-state";
    empty.textContent = "No zero-activity blocks for this selection.";
    list.appendChild(empty);
    return list;
  }
  for (const rec of recs) {
    const row = document.createElement("li");
    row.className = "recommendation-row";
    row.dataset.action = rec.action;

    const span = document.createElement("span");
    span.className = "recommendation-block";
    span.textContent = `${rec.block.start} for ${rec.block.length_hours} h`;
    row.appendChild(span);

    const action = document.createElement("span");
    action.className = "recommendation-action";
    action.textContent = actionLabel(rec);
    row.appendChild(action);

    const savings = document.createElement("span");
    savings.className = "savings-value";
    savings.dataset.kwh = String(rec.estimated_savings_kwh);
    savings.textContent = `${rec.estimated_savings_kwh} kWh`;
    row.appendChild(savings);

    list.appendChild(row);
  }
  return list;
}

export interface WhatIfDeps {
  api: ApiClient;
  streetId: string;
  streetPosts: Post[];
  basis: string;
  date?: string;
  getDim: () => number;
  setDim: (level: number) => void;
}

/** Dim-level slider driving GET /energy/recommendations. Disabled when any
 * post on the street cannot dim (the server then recommends half_off). On a
 * failed refresh the last figures stay visible but greyed out. */
export function mountWhatIf(root: HTMLElement, deps: WhatIfDeps): Promise<void> {
  root.textContent = "";
  const dimmable = deps.streetPosts.length > 0 && deps.streetPosts.every((p) => p.dimmable);

  const controls = document.createElement("div");
  controls.className = "whatif-controls";

  const slider = document.createElement("input");
  slider.type = "range";
  slider.className = "dim-slider";
  slider.min = "0.05";
  slider.max = "0.95";
  slider.step = "0.05";
  slider.value = String(deps.getDim());
  slider.disabled = !dimmable;
  controls.appendChild(slider);

  const readout = document.createElement("span");
  readout.className = "dim-readout";
  readout.textContent = dimmable ? `dim to ${slider.value}` : "street cannot dim";
  controls.appendChild(readout);
  root.appendChild(controls);

  const results = document.createElement("div");
  results.className = "whatif-results";
  root.appendChild(results);

  async function refresh(): Promise<void> {
    const query: Parameters<ApiClient["recommendations"]>[0] = {
      street_id: deps.streetId,
      basis: deps.basis,
    };
    if (deps.date) query.date = deps.date;
    if (dimmable) query.dim_level = deps.getDim();
    try {
      const body = await deps.api.recommendations(query);
      results.textContent = "";
      results.appendChild(renderRecommendations(body.recommendations));
    } catch {
      results.classList.add("stale");   // keep last values visible, greyed
    }
  }

  slider.addEventListener("change", () => {
    deps.setDim(Number(slider.value));
    readout.textContent = `dim to ${slider.value}`;
    void refresh();
  });

  return refresh();
}
