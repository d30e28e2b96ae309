/**
 * Panel state and transitions. Single-user interactive session: at most
 * one search is considered current; responses from superseded searches
 * are discarded by sequence number. Network failures raise a
 * non-destructive error banner and leave the previous results intact.
 */

import { FeatureCollection, PanelClient, RecordDetail, SearchResponse } from "./api.js";
import { BBox, FilterSet, embedDirective, filtersEqual, normalize,
         toQueryString } from "./filterset.js";

export interface PanelState {
  filters: FilterSet;
  results: SearchResponse | null;
  markers: FeatureCollection | null;
  selected: RecordDetail | null;
  viewportBBox: BBox | null;
  searchThisArea: boolean;
  zoneOverlay: boolean;
  error: string | null;
  notice: string | null;
}

export function initialState(): PanelState {
  return {
    filters: {},
    results: null,
    markers: null,
    selected: null,
    viewportBBox: null,
    searchThisArea: false,
    zoneOverlay: false,
    error: null,
    notice: null,
  };
}

type Listener = (state: PanelState) => void;

export class Panel {
  readonly client: PanelClient;
  state: PanelState;
  private seq = 0;
  private applied = 0;
  private listeners: Listener[] = [];

  constructor(client: PanelClient, state: PanelState = initialState()) {
    this.client = client;
    this.state = state;
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private publish(next: Partial<PanelState>): PanelState {
    this.state = { ...this.state, ...next };
    for (const listener of this.listeners) listener(this.state);
    return this.state;
  }

  /** The query the panel would send right now (filters incl. viewport bbox). */
  effectiveFilters(): FilterSet {
    const filters = { ...this.state.filters };
    if (this.state.searchThisArea && this.state.viewportBBox) {
      filters.bbox = this.state.viewportBBox;
    }
    return normalize(filters);
  }

  /** Run a search with the given filters (or the current effective ones). */
  async search(filters?: FilterSet): Promise<PanelState> {
    const next = normalize(filters ?? this.effectiveFilters());
    const ticket = ++this.seq;
    try {
      const [results, markers] = await Promise.all([
        this.client.search(next),
        this.client.markers(next),
      ]);
      if (ticket < this.applied) return this.state;   // superseded: discard
      this.applied = ticket;
      return this.publish({
        filters: next, results, markers, error: null, notice: null,
      });
    } catch (err) {
      if (ticket < this.applied) return this.state;
      return this.publish({ error: `search failed: ${String(err)}` });
    }
  }

  /** Toggle one value inside a set-valued facet and re-search. */
  async toggleFacetValue(
    facet: "tomb_type" | "context" | "affiliation" | "locus_id",
    value: string,
  ): Promise<PanelState> {
    const current = new Set<string>((this.state.filters[facet] as string[]) ?? []);
    if (current.has(value)) {
      current.delete(value);
    } else {
      current.add(value);
    }
    const filters: FilterSet = { ...this.state.filters };
    if (current.size === 0) {
      delete filters[facet];
    } else {
      (filters as Record<string, unknown>)[facet] = [...current].sort();
    }
    return this.search(filters);
  }

  /** Map pan/zoom: updates the viewport and re-searches when the
   * "search this area" toggle is on. */
  async panTo(bbox: BBox): Promise<PanelState> {
    this.publish({ viewportBBox: bbox });
    if (this.state.searchThisArea) return this.search();
    return this.state;
  }

  async setSearchThisArea(on: boolean): Promise<PanelState> {
    this.publish({ searchThisArea: on });
    if (!on) {
      const filters = { ...this.state.filters };
      delete filters.bbox;
      return this.search(filters);
    }
    return this.search();
  }

  /** Inspect one record from the current matches. A 404 means the result
   * set is stale: show a notice and refresh the search. */
  async inspect(id: string): Promise<PanelState> {
    try {
      const detail = await this.client.record(id);
      return this.publish({ selected: detail, error: null });
    } catch (err) {
      const status = (err as { status?: number }).status;
      if (status === 404) {
        this.publish({ selected: null });
        await this.search();
        return this.publish({
          notice: `record ${id} vanished from the dataset; refreshing results`,
        });
      }
      return this.publish({ error: `inspect failed: ${String(err)}` });
    }
  }

  /** Zone overlay toggle. Never touches the FilterSet. */
  toggleZoneOverlay(): PanelState {
    return this.publish({ zoneOverlay: !this.state.zoneOverlay });
  }

  /** The narrative embed directive for the active query. */
  embed(caption = "", master = false): string {
    return embedDirective(this.effectiveFilters(), caption, master);
  }

  /** True when a given filter state equals the active one (UI highlight). */
  isActive(filters: FilterSet): boolean {
    return filtersEqual(normalize(filters), this.effectiveFilters());
  }

  /** The live query string (shown in the address/share box). */
  queryString(): string {
    return toQueryString(this.effectiveFilters());
  }
}
