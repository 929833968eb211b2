// Wire types for the icms HTTP API. Field names mirror the JSON exactly;
// the UI never derives domain numbers from these, it only displays them.

export interface ErrorLocation {
  line: number;
  column: number;
}

export interface ApiErrorBody {
  error: {
    code: string;
    message: string;
    location?: ErrorLocation;
  };
}

export interface Post {
  post_id: string;
  street_id: string;
  lat: number;
  lon: number;
  speed_limit_kmh: number;
  lamp_count: number;
  lamp_wattage_w: number;
  dimmable: boolean;
}

export interface PostsResponse {
  posts: Post[];
}

export interface Rule {
  rule_id: string;
  name: string;
  text: string;
  pretty: string;
  severity: string;
  enabled: boolean;
}

export interface RulesResponse {
  rules: Rule[];
}

export interface WindowFeatures {
  post_id: string;
  window_start: string;
  avg_speed: number | null;
  vehicle_count: number;
  speeding_count: number;
  pedestrian_count: number;
  hour_of_day: number;
}

export interface Violation {
  rule_id: string;
  post_id: string;
  window_start: string;
  severity: string;
  features: WindowFeatures;
}

export interface ViolationsResponse {
  violations: Violation[];
  totals: Record<string, number>;
}

export interface RatioResponse {
  street_id: string;
  speeding: number[];
  pedestrians: number[];
  ratios: number[];
  exceeded: boolean[];
  threshold: number;
}

export interface ForecastPoint {
  ts: string;
  predicted: number;
}

export interface ForecastResponse {
  street_id: string;
  generated_at: string;
  used_zero_fallback: boolean;
  points: ForecastPoint[];
}

export type BlockBasis = "observed" | "forecast";

export interface ActivityBlock {
  street_id: string;
  start: string;
  length_hours: number;
  basis: BlockBasis;
}

export interface BlocksResponse {
  blocks: ActivityBlock[];
}

export interface Recommendation {
  street_id: string;
  block: ActivityBlock;
  action: "dim_to" | "half_off";
  dim_level: number | null;
  estimated_savings_kwh: number;
}

export interface RecommendationsResponse {
  recommendations: Recommendation[];
}

export interface Issue {
  issue_id: string;
  class: string;
  lat: number;
  lon: number;
  max_confidence: number;
  detection_count: number;
  first_seen: string;
  last_seen: string;
  status: "open" | "acknowledged" | "resolved";
  urgency: "routine" | "elevated" | "urgent";
  image_refs: string[];
}

export interface IssuesResponse {
  issues: Issue[];
}

export interface GeoFeature {
  type: "Feature";
  geometry: { type: "Point"; coordinates: [number, number] };  // [lon, lat]
  properties: {
    issue_id: string;
    class: string;
    status: string;
    urgency: string;
    max_confidence: number;
  };
}

export interface GeoFeatureCollection {
  type: "FeatureCollection";
  features: GeoFeature[];
}

export interface TrainResponse {
  from: string;
  to: string;
  models: unknown[];
  skipped: string[];
}
