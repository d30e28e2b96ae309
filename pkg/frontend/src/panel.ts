/**
 * DOM wiring: renders the instrument panel into a host element. All data
 * flows through the Panel state object in state.ts; this file only paints
 * and forwards events, so the logic stays testable without a browser.
 */

import { PanelClient } from "./api.js";
import { AFFILIATIONS, SITE_CONTEXTS, TOMB_TYPES } from "./filterset.js";
import { Viewport, markerColor, overlayPlacement, project } from "./map.js";
import { Panel } from "./state.js";

const FACETS: Array<{ name: "tomb_type" | "context" | "affiliation"; values: readonly string[] }> = [
  { name: "tomb_type", values: TOMB_TYPES },
  { name: "context", values: SITE_CONTEXTS },
  { name: "affiliation", values: AFFILIATIONS },
];

export function mountPanel(host: HTMLElement, serviceUrl: string): Panel {
  const client = new PanelClient(serviceUrl);
  const panel = new Panel(client);

  host.innerHTML = `
    <div class="sp-panel">
      <div class="sp-facets"></div>
      <div class="sp-map"><canvas width="640" height="480"></canvas></div>
      <div class="sp-detail"></div>
      <div class="sp-embed">
        <label><input type="checkbox" class="sp-area"> search this area</label>
        <label><input type="checkbox" class="sp-overlay"> zone overlay</label>
        <button class="sp-copy">copy embed directive</button>
        <pre class="sp-directive"></pre>
      </div>
      <div class="sp-banner"></div>
    </div>`;

  const facetsBox = host.querySelector(".sp-facets") as HTMLElement;
  const canvas = host.querySelector("canvas") as HTMLCanvasElement;
  const detailBox = host.querySelector(".sp-detail") as HTMLElement;
  const directiveBox = host.querySelector(".sp-directive") as HTMLElement;
  const banner = host.querySelector(".sp-banner") as HTMLElement;

  function renderFacets(): void {
    const counts = panel.state.results?.facet_counts ?? {};
    facetsBox.innerHTML = "";
    for (const { name, values } of FACETS) {
      const group = document.createElement("fieldset");
      group.innerHTML = `<legend>${name}</legend>`;
      for (const value of values) {
        const count = counts[name]?.[value] ?? 0;
        const active = ((panel.state.filters[name] as string[]) ?? []).includes(value);
        const button = document.createElement("button");
        button.textContent = `${value} (${count})`;
        button.className = active ? "on" : "";
        button.addEventListener("click", () => void panel.toggleFacetValue(name, value));
        group.appendChild(button);
      }
      facetsBox.appendChild(group);
    }
  }

  async function renderMap(): Promise<void> {
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const markers = panel.state.markers;
    if (!markers || markers.features.length === 0) return;
    const lons = markers.features.map((f) => f.geometry.coordinates[0]);
    const lats = markers.features.map((f) => f.geometry.coordinates[1]);
    const viewport: Viewport = {
      bbox: panel.state.viewportBBox ?? [
        Math.min(...lons), Math.min(...lats), Math.max(...lons), Math.max(...lats)],
      widthPx: canvas.width,
      heightPx: canvas.height,
    };
    if (panel.state.zoneOverlay) {
      try {
        const meta = await client.zones();
        const image = new Image();
        image.src = client.zonePngUrl();
        await image.decode();
        const place = overlayPlacement(viewport, meta);
        ctx.drawImage(image, place.x, place.y, place.width, place.height);
      } catch {
        /* no zones computed: overlay silently unavailable */
      }
    }
    for (const feature of markers.features) {
      const [lon, lat] = feature.geometry.coordinates;
      const { x, y } = project(viewport, lon, lat);
      ctx.fillStyle = markerColor(String(feature.properties.affiliation));
      ctx.fillRect(x - 2, y - 2, 5, 5);
    }
  }

  function renderDetail(): void {
    const detail = panel.state.selected;
    if (!detail) {
      detailBox.innerHTML = "";
      return;
    }
    const photos = detail.photo_urls
      .map((u) => `<li><a href="${u}">${u}</a></li>`).join("");
    detailBox.innerHTML = `
      <h3>${detail.id}</h3>
      <p>${detail.locus_name} &middot; ${detail.tomb_type} &middot; ${detail.context}
         &middot; ${detail.affiliation}</p>
      <ul class="photos">${photos}</ul>
      <p class="backlink"><a href="${detail.uri}">${detail.uri}</a></p>`;
  }

  panel.onChange(() => {
    renderFacets();
    void renderMap();
    renderDetail();
    directiveBox.textContent = panel.embed();
    banner.textContent = panel.state.error ?? panel.state.notice ?? "";
  });

  (host.querySelector(".sp-area") as HTMLInputElement).addEventListener(
    "change", (ev) => void panel.setSearchThisArea((ev.target as HTMLInputElement).checked));
  (host.querySelector(".sp-overlay") as HTMLInputElement).addEventListener(
    "change", () => panel.toggleZoneOverlay());
  (host.querySelector(".sp-copy") as HTMLButtonElement).addEventListener(
    "click", () => void navigator.clipboard.writeText(panel.embed()));
  canvas.addEventListener("click", (ev) => {
    const markers = panel.state.markers;
    if (!markers) return;
    // nearest marker within 6px wins
    const rect = canvas.getBoundingClientRect();
    const px = ev.clientX - rect.left;
    const py = ev.clientY - rect.top;
    const lons = markers.features.map((f) => f.geometry.coordinates[0]);
    const lats = markers.features.map((f) => f.geometry.coordinates[1]);
    const viewport: Viewport = {
      bbox: panel.state.viewportBBox ?? [
        Math.min(...lons), Math.min(...lats), Math.max(...lons), Math.max(...lats)],
      widthPx: canvas.width,
      heightPx: canvas.height,
    };
    let bestId: string | null = null;
    let bestDist = 36;
    for (const feature of markers.features) {
      const [lon, lat] = feature.geometry.coordinates;
      const { x, y } = project(viewport, lon, lat);
      const d = (x - px) ** 2 + (y - py) ** 2;
      if (d < bestDist) {
        bestDist = d;
        bestId = String(feature.properties.id);
      }
    }
    if (bestId) void panel.inspect(bestId);
  });

  void panel.search({});
  return panel;
}
