/**
 * HTTP client for the publishing service. The panel talks to exactly the
 * documented public routes and nothing else; the fetch function is
 * injectable so the suite can run against recorded fixtures and so the
 * route-whitelist proxy test can observe every request the panel makes.
 */

import { FilterSet, toQueryString } from "./filterset.js";

export interface RecordSummary {
  id: string;
  locus_id: string;
  locus_name: string;
  tomb_type: string;
  context: string;
  affiliation: string;
  lat: number;
  lon: number;
  uri: string;
}

export interface SearchResponse {
  total: number;
  page: number;
  per_page: number;
  matches: RecordSummary[];
  facet_counts: Record<string, Record<string, number>>;
}

export interface RecordDetail extends RecordSummary {
  elevation_m: number;
  has_inscription: boolean;
  photo_urls: string[];
  gazetteer_uri: string | null;
  affiliation_override: string | null;
}

export interface GeoJsonFeature {
  type: "Feature";
  id: string;
  geometry: { type: "Point"; coordinates: [number, number] };
  properties: Record<string, unknown>;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: GeoJsonFeature[];
}

export interface ZoneMetadata {
  grid: {
    origin_lat: number;
    origin_lon: number;
    n_cols: number;
    n_rows: number;
    x_size_deg: number;
    y_size_deg: number;
  };
  png: string;
  [key: string]: unknown;
}

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class HttpError extends Error {
  readonly status: number;

  constructor(status: number, url: string) {
    super(`HTTP ${status} for ${url}`);
    this.status = status;
  }
}

export class PanelClient {
  readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url) => fetch(url));
  }

  private async getJson<T>(pathAndQuery: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + pathAndQuery);
    if (!response.ok) throw new HttpError(response.status, pathAndQuery);
    return (await response.json()) as T;
  }

  search(filters: FilterSet, page = 1, perPage = 50): Promise<SearchResponse> {
    const query = toQueryString(filters);
    const paging = `page=${page}&per_page=${perPage}`;
    const qs = query ? `${query}&${paging}` : paging;
    return this.getJson<SearchResponse>(`/api/search?${qs}`);
  }

  record(id: string): Promise<RecordDetail> {
    return this.getJson<RecordDetail>(`/api/records/${encodeURIComponent(id)}`);
  }

  /** Marker geometry comes from the GeoJSON feed: the panel is just
   * another feed consumer, which is the loose-coupling point. */
  markers(filters: FilterSet): Promise<FeatureCollection> {
    const query = toQueryString(filters);
    const paging = "per_page=500";
    const qs = query ? `${query}&${paging}` : paging;
    return this.getJson<FeatureCollection>(`/feeds/geojson?${qs}`);
  }

  zones(): Promise<ZoneMetadata> {
    return this.getJson<ZoneMetadata>("/api/zones");
  }

  zonePngUrl(): string {
    return `${this.baseUrl}/api/zones.png`;
  }

  codePngUrl(id: string): string {
    return `${this.baseUrl}/codes/${encodeURIComponent(id)}.png`;
  }
}
