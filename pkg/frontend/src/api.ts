import type {
  ApiErrorBody,
  BlocksResponse,
  ErrorLocation,
  ForecastResponse,
  GeoFeatureCollection,
  Issue,
  IssuesResponse,
  PostsResponse,
  RatioResponse,
  RecommendationsResponse,
  Rule,
  RulesResponse,
  TrainResponse,
  ViolationsResponse,
} from "./types";

/** A non-2xx response, carrying the server's machine-readable envelope. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly location?: ErrorLocation,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchFn = typeof fetch;

type Query = Record<string, string | number | undefined>;

function withQuery(path: string, query?: Query): string {
  if (!query) return path;
  const params = new URLSearchParams();
  for (const [key, value] of Object.entries(query)) {
    if (value !== undefined) params.set(key, String(value));
  }
  const encoded = params.toString();
  return encoded ? `${path}?${encoded}` : path;
}

/** Thin typed wrapper over fetch; one method per route, no client-side math. */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchFn = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.base + path, init);
    if (resp.status === 204) return undefined as T;
    if (!resp.ok) {
      let envelope: ApiErrorBody | undefined;
      try {
        envelope = (await resp.json()) as ApiErrorBody;
      } catch {
        envelope = undefined;
      }
      const err = envelope?.error;
      throw new ApiError(
        resp.status,
        err?.code ?? "INTERNAL",
        err?.message ?? `HTTP ${resp.status}`,
        err?.location,
      );
    }
    return (await resp.json()) as T;
  }

  posts(): Promise<PostsResponse> {
    return this.request("GET", "/posts");
  }

  config(): Promise<Record<string, unknown>> {
    return this.request("GET", "/config");
  }

  rules(): Promise<RulesResponse> {
    return this.request("GET", "/rules");
  }

  createRule(body: { name: string; text: string; enabled?: boolean }): Promise<Rule> {
    return this.request("POST", "/rules", body);
  }

  updateRule(
    ruleId: string,
    body: Partial<{ name: string; text: string; enabled: boolean }>,
  ): Promise<Rule> {
    return this.request("PUT", `/rules/${ruleId}`, body);
  }

  deleteRule(ruleId: string): Promise<void> {
    return this.request("DELETE", `/rules/${ruleId}`);
  }

  violations(query: { post_id?: string; from?: string; to?: string }): Promise<ViolationsResponse> {
    return this.request("GET", withQuery("/violations", query));
  }

  ratio(query: {
    street_id: string;
    from: string;
    to: string;
    threshold?: number;
  }): Promise<RatioResponse> {
    return this.request("GET", withQuery("/safety/ratio", query));
  }

  forecast(streetId: string): Promise<ForecastResponse> {
    return this.request("GET", withQuery("/energy/forecast", { street_id: streetId }));
  }

  blocks(query: {
    street_id: string;
    basis?: string;
    date?: string;
  }): Promise<BlocksResponse> {
    return this.request("GET", withQuery("/energy/blocks", query));
  }

  recommendations(query: {
    street_id: string;
    basis?: string;
    dim_level?: number;
    date?: string;
  }): Promise<RecommendationsResponse> {
    return this.request("GET", withQuery("/energy/recommendations", query));
  }

  train(body: { from: string; to: string }): Promise<TrainResponse> {
    return this.request("POST", "/energy/train", body);
  }

  issues(query: {
    status?: string;
    class?: string;
    min_urgency?: string;
  } = {}): Promise<IssuesResponse> {
    return this.request("GET", withQuery("/issues", query));
  }

  transitionIssue(issueId: string, action: "acknowledge" | "resolve"): Promise<Issue> {
    return this.request("POST", `/issues/${issueId}/${action}`);
  }

  issuesGeojson(): Promise<GeoFeatureCollection> {
    return this.request("GET", "/issues.geojson");
  }
}
