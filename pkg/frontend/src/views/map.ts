import { ApiClient } from "../api";
import type { GeoFeatureCollection, Issue, Post } from "../types";

const SVG_NS = "http://www.w3.org/2000/svg";

const MAP_W = 480;
const MAP_H = 360;
const PAD = 24;

interface Projection {
  x: (lon: number) => number;
  y: (lat: number) => number;
}

/** Linear lon/lat projection over the bounding box of everything drawn.
 * Fine at street scale; this is layout, not geodesy. */
function fitProjection(points: Array<{ lat: number; lon: number }>): Projection {
  let minLat = Infinity, maxLat = -Infinity, minLon = Infinity, maxLon = -Infinity;
  for (const p of points) {
    minLat = Math.min(minLat, p.lat);
    maxLat = Math.max(maxLat, p.lat);
    minLon = Math.min(minLon, p.lon);
    maxLon = Math.max(maxLon, p.lon);
  }
  const lonSpan = Math.max(maxLon - minLon, 1e-9);
  const latSpan = Math.max(maxLat - minLat, 1e-9);
  return {
    x: (lon) => PAD + ((lon - minLon) / lonSpan) * (MAP_W - 2 * PAD),
    y: (lat) => MAP_H - PAD - ((lat - minLat) / latSpan) * (MAP_H - 2 * PAD),
  };
}

export interface MapDeps {
  api: ApiClient;
  onIssuesChanged: () => void;
}

function issueDetail(issue: Issue, deps: MapDeps): HTMLElement {
  const panel = document.createElement("div");
  panel.className = "issue-detail";
  panel.dataset.issueId = issue.issue_id;

  const title = document.createElement("h3");
  title.textContent = `${issue.issue_id} — ${issue.class}`;
  panel.appendChild(title);

  const facts = document.createElement("dl");
  const rows: Array<[string, string]> = [
    ["status", issue.status],
    ["urgency", issue.urgency],
    ["confidence", String(issue.max_confidence)],
    ["detections", String(issue.detection_count)],
    ["first seen", issue.first_seen],
    ["last seen", issue.last_seen],
  ];
  for (const [term, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = term;
    const dd = document.createElement("dd");
    dd.textContent = value;
    facts.appendChild(dt);
    facts.appendChild(dd);
  }
  panel.appendChild(facts);

  const actions: Array<"acknowledge" | "resolve"> =
    issue.status === "open" ? ["acknowledge", "resolve"]
    : issue.status === "acknowledged" ? ["resolve"]
    : [];
  for (const action of actions) {
    const button = document.createElement("button");
    button.className = `issue-${action}`;
    button.textContent = action;
    button.addEventListener("click", () => {
      void deps.api
        .transitionIssue(issue.issue_id, action)
        .then(() => deps.onIssuesChanged())
        .catch(() => panel.classList.add("stale"));
    });
    panel.appendChild(button);
  }
  return panel;
}

/** Posts layer plus one marker per GeoJSON feature, colored by urgency.
 * Clicking a marker opens the triage panel for that issue. */
export function mountMapView(
  root: HTMLElement,
  posts: Post[],
  geojson: GeoFeatureCollection,
  issues: Issue[],
  deps: MapDeps,
): void {
  root.textContent = "";

  if (posts.length === 0 && geojson.features.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "Nothing to map: no posts configured and no issues reported.";
    root.appendChild(empty);
    return;
  }

  const everything = [
    ...posts.map((p) => ({ lat: p.lat, lon: p.lon })),
    ...geojson.features.map((f) => ({
      lat: f.geometry.coordinates[1],
      lon: f.geometry.coordinates[0],
    })),
  ];
  const proj = fitProjection(everything);

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "issue-map");
  svg.setAttribute("viewBox", `0 0 ${MAP_W} ${MAP_H}`);

  const detail = document.createElement("div");
  detail.className = "issue-detail-slot";
  const byId = new Map(issues.map((issue) => [issue.issue_id, issue]));

  for (const post of posts) {
    const square = document.createElementNS(SVG_NS, "rect");
    square.setAttribute("class", "post-marker");
    square.setAttribute("x", String(proj.x(post.lon) - 3));
    square.setAttribute("y", String(proj.y(post.lat) - 3));
    square.setAttribute("width", "6");
    square.setAttribute("height", "6");
    square.dataset.postId = post.post_id;
    const label = document.createElementNS(SVG_NS, "title");
    label.textContent = `${post.post_id} (${post.street_id})`;
    square.appendChild(label);
    svg.appendChild(square);
  }

  for (const feature of geojson.features) {
    const { coordinates } = feature.geometry;
    const marker = document.createElementNS(SVG_NS, "circle");
    marker.setAttribute(
      "class",
      `issue-marker urgency-${feature.properties.urgency}`,
    );
    marker.setAttribute("cx", String(proj.x(coordinates[0])));
    marker.setAttribute("cy", String(proj.y(coordinates[1])));
    marker.setAttribute("r", "8");
    marker.dataset.issueId = feature.properties.issue_id;
    marker.dataset.urgency = feature.properties.urgency;
    const label = document.createElementNS(SVG_NS, "title");
    label.textContent = `${feature.properties.issue_id}: ${feature.properties.class} (${feature.properties.urgency})`;
    marker.appendChild(label);
    marker.addEventListener("click", () => {
      detail.textContent = "";
      const issue = byId.get(feature.properties.issue_id);
      if (issue) detail.appendChild(issueDetail(issue, deps));
    });
    svg.appendChild(marker);
  }

  root.appendChild(svg);
  root.appendChild(detail);

  if (geojson.features.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No maintenance issues on record.";
    root.appendChild(empty);
  }
}
