// Every view is reconstructable from the URL fragment: tab, street, date
// range, dim slider, and the rule draft all round-trip through it, so any
// screen can be deep-linked or reloaded without losing context.

export type Tab = "safety" | "energy" | "maintenance";

export interface ViewState {
  tab: Tab;
  street: string;
  from: string;
  to: string;
  date: string;
  dim: number;
  draft: string;
}

const TABS: readonly Tab[] = ["safety", "energy", "maintenance"];

export const DEFAULT_STATE: ViewState = {
  tab: "safety",
  street: "",
  from: "",
  to: "",
  date: "",
  dim: 0.3,
  draft: "",
};

/** Parse a location hash ("#tab=energy&dim=0.5") into a full ViewState.
 * Unknown keys are ignored; invalid values fall back to defaults. */
export function readState(hash: string): ViewState {
  const params = new URLSearchParams(hash.replace(/^#/, ""));
  const state = { ...DEFAULT_STATE };
  const tab = params.get("tab");
  if (tab && (TABS as readonly string[]).includes(tab)) state.tab = tab as Tab;
  state.street = params.get("street") ?? state.street;
  state.from = params.get("from") ?? state.from;
  state.to = params.get("to") ?? state.to;
  state.date = params.get("date") ?? state.date;
  state.draft = params.get("draft") ?? state.draft;
  const dim = Number(params.get("dim"));
  // mirror the server's contract: dim_level is strictly between 0 and 1
  if (Number.isFinite(dim) && dim > 0 && dim < 1) state.dim = dim;
  return state;
}

/** Serialize back to a hash string, omitting values equal to the default. */
export function writeState(state: ViewState): string {
  const params = new URLSearchParams();
  for (const key of ["tab", "street", "from", "to", "date", "draft"] as const) {
    if (state[key] !== DEFAULT_STATE[key]) params.set(key, state[key]);
  }
  if (state.dim !== DEFAULT_STATE.dim) params.set("dim", String(state.dim));
  const encoded = params.toString();
  return encoded ? `#${encoded}` : "";
}
