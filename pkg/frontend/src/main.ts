import { ApiClient } from "./api";
import { readState, writeState, Tab, ViewState } from "./state";
import type { Post } from "./types";
import { mountWhatIf, renderActivityChart, renderRecommendations } from "./views/energy";
import { mountMapView } from "./views/map";
import { mountRulesView } from "./views/rules";
import { renderRatioChart, renderViolations } from "./views/safety";

const api = new ApiClient("");

let state: ViewState = readState(location.hash);
let posts: Post[] = [];

function pushState(): void {
  history.replaceState(null, "", writeState(state) || "#");
}

function streetsOf(all: Post[]): string[] {
  return [...new Set(all.map((p) => p.street_id))].sort();
}

function isoDay(offsetDays: number): string {
  const at = new Date(Date.now() + offsetDays * 86_400_000);
  return at.toISOString().slice(0, 10);
}

function panelError(panel: HTMLElement, message: string): void {
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.textContent = message;
  panel.appendChild(banner);
}

async function renderSafety(panel: HTMLElement): Promise<void> {
  const from = (state.from || isoDay(-7)) + "T00:00:00Z";
  const to = (state.to || isoDay(1)) + "T00:00:00Z";
  try {
    const [ratio, violations, rules] = await Promise.all([
      api.ratio({ street_id: state.street, from, to }),
      api.violations({ from, to }),
      api.rules(),
    ]);
    const chartTitle = document.createElement("h3");
    chartTitle.textContent = `Speeding-to-pedestrian ratio by hour — ${state.street}`;
    panel.appendChild(chartTitle);
    panel.appendChild(renderRatioChart(ratio));
    panel.appendChild(renderViolations(violations));

    const rulesTitle = document.createElement("h3");
    rulesTitle.textContent = "Rules";
    panel.appendChild(rulesTitle);
    const rulesBox = document.createElement("div");
    panel.appendChild(rulesBox);
    mountRulesView(rulesBox, rules.rules, {
      api,
      onRulesChanged: () => void render(),
      getDraft: () => state.draft,
      setDraft: (text) => {
        state.draft = text;
        pushState();
      },
    });
  } catch (error) {
    panelError(panel, `safety data unavailable: ${(error as Error).message}`);
  }
}

async function renderEnergy(panel: HTMLElement): Promise<void> {
  try {
    const [forecast, blocks] = await Promise.all([
      api.forecast(state.street),
      api.blocks({ street_id: state.street, basis: "forecast" }),
    ]);
    const title = document.createElement("h3");
    title.textContent = `Forecast activity with dimmable blocks — ${state.street}`;
    panel.appendChild(title);
    panel.appendChild(renderActivityChart(forecast, blocks.blocks));
  } catch (error) {
    panelError(panel, `no forecast yet: ${(error as Error).message}`);
  }

  const whatifTitle = document.createElement("h3");
  whatifTitle.textContent = "What-if dimming";
  panel.appendChild(whatifTitle);
  const whatifBox = document.createElement("div");
  panel.appendChild(whatifBox);
  await mountWhatIf(whatifBox, {
    api,
    streetId: state.street,
    streetPosts: posts.filter((p) => p.street_id === state.street),
    basis: "forecast",
    date: state.date || undefined,
    getDim: () => state.dim,
    setDim: (level) => {
      state.dim = level;
      pushState();
    },
  });
}

async function renderMaintenance(panel: HTMLElement): Promise<void> {
  try {
    const [geojson, issues] = await Promise.all([api.issuesGeojson(), api.issues()]);
    mountMapView(panel, posts, geojson, issues.issues, {
      api,
      onIssuesChanged: () => void render(),
    });
  } catch (error) {
    panelError(panel, `maintenance data unavailable: ${(error as Error).message}`);
  }
}

async function render(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  root.textContent = "";

  const header = document.createElement("header");
  const heading = document.createElement("h1");
  heading.textContent = "City operations";
  header.appendChild(heading);

  const tabs = document.createElement("nav");
  tabs.className = "tab-bar";
  for (const tab of ["safety", "energy", "maintenance"] as Tab[]) {
    const button = document.createElement("button");
    button.className = state.tab === tab ? "tab active" : "tab";
    button.textContent = tab;
    button.addEventListener("click", () => {
      state.tab = tab;
      pushState();
      void render();
    });
    tabs.appendChild(button);
  }
  header.appendChild(tabs);

  const streetPick = document.createElement("select");
  streetPick.className = "street-picker";
  for (const street of streetsOf(posts)) {
    const option = document.createElement("option");
    option.value = street;
    option.textContent = street;
    option.selected = street === state.street;
    streetPick.appendChild(option);
  }
  streetPick.addEventListener("change", () => {
    state.street = streetPick.value;
    pushState();
    void render();
  });
  header.appendChild(streetPick);
  root.appendChild(header);

  const panel = document.createElement("main");
  panel.className = `panel panel-${state.tab}`;
  root.appendChild(panel);

  if (state.tab === "safety") await renderSafety(panel);
  else if (state.tab === "energy") await renderEnergy(panel);
  else await renderMaintenance(panel);
}

async function boot(): Promise<void> {
  try {
    posts = (await api.posts()).posts;
  } catch {
    const root = document.getElementById("app");
    if (root) panelError(root as HTMLElement, "service unreachable");
    return;
  }
  if (!state.street) state.street = streetsOf(posts)[0] ?? "";
  window.addEventListener("hashchange", () => {
    state = readState(location.hash);
    void render();
  });
  await render();
}

void boot();
