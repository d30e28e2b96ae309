/**
 * Viewport math for the mini map: lon/lat to pixel projection, marker
 * colors by affiliation, and georegistration of the zone-raster overlay
 * from the service's world-file metadata (cell sizes in degrees plus the
 * grid origin).
 */

import { Affiliation } from "./filterset.js";
import { ZoneMetadata } from "./api.js";

export type BBox = [number, number, number, number];   // min_lon, min_lat, max_lon, max_lat

export const MARKER_COLORS: Record<Affiliation, string> = {
  Polis: "#1f4fff",
  Mesogeia: "#ff9f1f",
  Hinterland: "#e02020",
};

export interface Viewport {
  bbox: BBox;
  widthPx: number;
  heightPx: number;
}

export function project(viewport: Viewport, lon: number, lat: number): { x: number; y: number } {
  const [minLon, minLat, maxLon, maxLat] = viewport.bbox;
  const x = ((lon - minLon) / (maxLon - minLon)) * viewport.widthPx;
  const y = ((maxLat - lat) / (maxLat - minLat)) * viewport.heightPx;
  return { x, y };
}

export function markerColor(affiliation: string): string {
  return MARKER_COLORS[affiliation as Affiliation] ?? "#808080";
}

export interface OverlayPlacement {
  x: number;
  y: number;
  width: number;
  height: number;
}

/**
 * Where the zone PNG sits inside the viewport, in pixels. The raster's
 * geographic extent comes from the grid origin (SW corner) and the
 * per-cell degree sizes; the image's top edge is the northernmost row.
 */
export function overlayPlacement(viewport: Viewport, meta: ZoneMetadata): OverlayPlacement {
  const { origin_lat, origin_lon, n_cols, n_rows, x_size_deg, y_size_deg } = meta.grid;
  const west = origin_lon;
  const south = origin_lat;
  const east = origin_lon + n_cols * x_size_deg;
  const north = origin_lat + n_rows * y_size_deg;
  const topLeft = project(viewport, west, north);
  const bottomRight = project(viewport, east, south);
  return {
    x: topLeft.x,
    y: topLeft.y,
    width: bottomRight.x - topLeft.x,
    height: bottomRight.y - topLeft.y,
  };
}

/** Grow/shrink a bbox around its center (zoom factor > 1 zooms out). */
export function scaleBBox(bbox: BBox, factor: number): BBox {
  const [minLon, minLat, maxLon, maxLat] = bbox;
  const cLon = (minLon + maxLon) / 2;
  const cLat = (minLat + maxLat) / 2;
  const halfW = ((maxLon - minLon) / 2) * factor;
  const halfH = ((maxLat - minLat) / 2) * factor;
  return [cLon - halfW, cLat - halfH, cLon + halfW, cLat + halfH];
}
