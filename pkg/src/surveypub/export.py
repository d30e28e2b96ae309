"""Assemble resolved narratives into web, print-ready, and epub artifacts.

Every emitted hyperlink is one of three shapes: a persistent record URI,
a live feed URL, or the article's canonical URL. Print output carries QR
codes bridging the paper page back to those URLs. All exports are
deterministic for a fixed injected build time.
"""

import html
import io
import json
import zipfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ExportError, QueryError
from .facets import FacetIndex, ResultPage, filterset_to_query, query_all
from .model import DatasetManifest, classify, persistent_uri
from .narrative import Figure, Heading, MasterMap, MiniMap, NarrativeDoc, Paragraph
from .qr import encode_qr, render_qr_png
from .zones import ZONE_COLORS, ZoneRaster, render_zone_png

DEFAULT_BUILD_TIME = datetime(2000, 1, 1, tzinfo=timezone.utc)

MAP_CANVAS_W = 400
MAP_CANVAS_H = 300
QR_MODULE_PX = 4


@dataclass(frozen=True)
class ZoneOverlay:
    """Zone raster image plus the georeferencing needed to draw on it."""

    rgba: np.ndarray          # (rows, cols, 4), row 0 = north
    origin_lon: float
    origin_lat: float
    x_size_deg: float
    y_size_deg: float

    @classmethod
    def from_raster(cls, zones: ZoneRaster) -> "ZoneOverlay":
        png = render_zone_png(zones)
        rgba = np.asarray(Image.open(io.BytesIO(png)).convert("RGBA"))
        grid = zones.grid
        return cls(
            rgba=rgba,
            origin_lon=grid.origin.lon,
            origin_lat=grid.origin.lat,
            x_size_deg=grid.cell_size_m / grid.m_per_deg_lon,
            y_size_deg=grid.cell_size_m / grid.m_per_deg_lat,
        )

    @classmethod
    def from_files(cls, png_bytes: bytes, meta: dict) -> "ZoneOverlay":
        rgba = np.asarray(Image.open(io.BytesIO(png_bytes)).convert("RGBA"))
        grid = meta["grid"]
        return cls(
            rgba=rgba,
            origin_lon=grid["origin_lon"],
            origin_lat=grid["origin_lat"],
            x_size_deg=grid["x_size_deg"],
            y_size_deg=grid["y_size_deg"],
        )


@dataclass(frozen=True)
class ResolvedMap:
    """A map block joined with its live data."""

    block: object                 # MiniMap or MasterMap
    page: ResultPage              # full, unpaginated
    feed_url: str
    map_png: bytes


@dataclass(frozen=True)
class ResolvedDoc:
    doc: NarrativeDoc
    blocks: tuple                 # body order; map blocks replaced by ResolvedMap
    errors: tuple                 # (block position, message)


@dataclass(frozen=True)
class EpubPackage:
    data: bytes


def feed_url_for(manifest: DatasetManifest, filters) -> str:
    base = manifest.base_uri.rstrip("/")
    query = filterset_to_query(filters)
    return f"{base}/feeds/geojson?{query}" if query else f"{base}/feeds/geojson"


def _marker_color(affiliation):
    return ZONE_COLORS[affiliation]


def render_map_png(index: FacetIndex, match_ids, zones: ZoneOverlay | None) -> bytes:
    """Static map: zone underlay when available, else a plain frame around
    the whole corpus; matched features drawn as 3x3 squares colored by
    affiliation."""
    if zones is not None:
        canvas = zones.rgba.copy()
        h, w = canvas.shape[:2]

        def to_pixel(lon, lat):
            col = int((lon - zones.origin_lon) / zones.x_size_deg)
            row_south = int((lat - zones.origin_lat) / zones.y_size_deg)
            return h - 1 - row_south, col
    else:
        canvas = np.full((MAP_CANVAS_H, MAP_CANVAS_W, 4), 255, dtype=np.uint8)
        h, w = MAP_CANVAS_H, MAP_CANVAS_W
        all_feats = index.features
        if all_feats:
            lons = [f.location.lon for f in all_feats]
            lats = [f.location.lat for f in all_feats]
            min_lon, max_lon = min(lons), max(lons)
            min_lat, max_lat = min(lats), max(lats)
        else:
            min_lon, max_lon, min_lat, max_lat = -1.0, 1.0, -1.0, 1.0
        pad_lon = (max_lon - min_lon) * 0.05 or 0.01
        pad_lat = (max_lat - min_lat) * 0.05 or 0.01
        min_lon, max_lon = min_lon - pad_lon, max_lon + pad_lon
        min_lat, max_lat = min_lat - pad_lat, max_lat + pad_lat

        def to_pixel(lon, lat):
            col = int((lon - min_lon) / (max_lon - min_lon) * (w - 1))
            row = int((max_lat - lat) / (max_lat - min_lat) * (h - 1))
            return row, col

    for fid in match_ids:
        f = index.get(fid)
        r, g, b = _marker_color(classify(f))
        row, col = to_pixel(f.location.lon, f.location.lat)
        r0, r1 = max(0, row - 1), min(h, row + 2)
        c0, c1 = max(0, col - 1), min(w, col + 2)
        canvas[r0:r1, c0:c1] = (r, g, b, 255)

    image = Image.fromarray(canvas, mode="RGBA")
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def resolve_embeds(doc: NarrativeDoc, index: FacetIndex, manifest: DatasetManifest,
                   zones: ZoneOverlay | ZoneRaster | None = None) -> ResolvedDoc:
    """Join each map block with its query result, rendered map, and live
    feed URL. Block failures are collected, not fatal."""
    overlay = None
    if isinstance(zones, ZoneRaster):
        overlay = ZoneOverlay.from_raster(zones)
    elif zones is not None:
        overlay = zones

    blocks = []
    errors = []
    for position, block in enumerate(doc.body):
        if not isinstance(block, (MiniMap, MasterMap)):
            blocks.append(block)
            continue
        try:
            page = query_all(index, block.filters)
            blocks.append(ResolvedMap(
                block=block,
                page=page,
                feed_url=feed_url_for(manifest, block.filters),
                map_png=render_map_png(index, page.matches, overlay),
            ))
        except QueryError as exc:
            errors.append((position, str(exc)))
            blocks.append(block)
    return ResolvedDoc(doc=doc, blocks=tuple(blocks), errors=tuple(errors))


def _require_resolved(resolved: ResolvedDoc):
    if resolved.errors:
        detail = "; ".join(f"block {pos}: {msg}" for pos, msg in resolved.errors)
        raise ExportError(f"unresolved blocks: {detail}")


_PAGE_CSS = (
    "body{font-family:Georgia,serif;margin:2em auto;max-width:42em;line-height:1.5}"
    "figure.map{border:1px solid #999;padding:0.6em;margin:1.2em 0}"
    "figure.map img.mapimg{max-width:100%}"
    "ul.records{columns:3;font-size:smaller;list-style:none;padding:0}"
    ".authors{color:#444;font-style:italic}"
)

_PRINT_CSS = _PAGE_CSS + (
    "body{width:48em;margin:1em}img.qr{float:right;margin:0 0 0.5em 0.5em}"
    "a{color:#000;text-decoration:none}"
)


def _map_block_html(resolved_map: ResolvedMap, n: int, manifest: DatasetManifest,
                    index: FacetIndex, with_qr: bool) -> str:
    block = resolved_map.block
    caption = block.caption if isinstance(block, MiniMap) else "All records in this article"
    kind = "minimap" if isinstance(block, MiniMap) else "mastermap"
    parts = [f'<figure class="map {kind}" id="map-{n}">']
    if with_qr:
        parts.append(f'<img class="qr" src="qr/{n}.png" alt="code for map {n} data feed">')
    parts.append(f'<img class="mapimg" src="maps/{n}.png" alt="map {n}">')
    parts.append(
        f'<figcaption>{html.escape(caption)} &mdash; '
        f'<a href="{html.escape(resolved_map.feed_url, quote=True)}">live data feed</a> '
        f'({resolved_map.page.total} records)</figcaption>')
    parts.append('<ul class="records">')
    for fid in resolved_map.page.matches:
        uri = persistent_uri(manifest, index.get(fid))
        parts.append(f'<li><a href="{html.escape(uri, quote=True)}">{html.escape(fid)}</a></li>')
    parts.append("</ul></figure>")
    return "\n".join(parts)


def _article_html(resolved: ResolvedDoc, manifest: DatasetManifest, index: FacetIndex,
                  css: str, with_qr: bool) -> str:
    doc = resolved.doc
    out = ["<!DOCTYPE html>", '<html lang="en">', "<head>", '<meta charset="utf-8">',
           f"<title>{html.escape(doc.title)}</title>",
           f"<style>{css}</style>", "</head>", "<body>", "<header>"]
    if with_qr:
        out.append('<img class="qr" src="qr/header.png" alt="code for this article">')
    out.append(f"<h1>{html.escape(doc.title)}</h1>")
    if doc.authors:
        out.append(f'<p class="authors">{html.escape("; ".join(doc.authors))}</p>')
    if doc.canonical_url:
        out.append(f'<p class="canonical"><a href="{html.escape(doc.canonical_url, quote=True)}">'
                   f"{html.escape(doc.canonical_url)}</a></p>")
    out.append("</header>")
    n = 0
    for block in resolved.blocks:
        if isinstance(block, Paragraph):
            out.append(f"<p>{html.escape(block.text)}</p>")
        elif isinstance(block, Heading):
            out.append(f"<h{block.level + 1}>{html.escape(block.text)}</h{block.level + 1}>")
        elif isinstance(block, Figure):
            out.append(f'<figure><img src="{html.escape(block.image_ref, quote=True)}" '
                       f'alt="{html.escape(block.caption, quote=True)}">'
                       f"<figcaption>{html.escape(block.caption)}</figcaption></figure>")
        elif isinstance(block, ResolvedMap):
            n += 1
            out.append(_map_block_html(block, n, manifest, index, with_qr))
    out.append("</body></html>")
    return "\n".join(out) + "\n"


def _write_tree(outdir: Path, files: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for relpath, data in files.items():
        target = outdir / relpath
        target.parent.mkdir(parents=True, exist_ok=True)
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(target, mode) as fh:
            fh.write(data)
        written.append(str(target))
    return written


def export_html(resolved: ResolvedDoc, manifest: DatasetManifest, index: FacetIndex,
                outdir) -> list:
    """Web form of the article: index.html plus maps/<n>.png."""
    _require_resolved(resolved)
    files = {"index.html": _article_html(resolved, manifest, index, _PAGE_CSS, with_qr=False)}
    n = 0
    for block in resolved.blocks:
        if isinstance(block, ResolvedMap):
            n += 1
            files[f"maps/{n}.png"] = block.map_png
    return _write_tree(Path(outdir), files)


def export_print(resolved: ResolvedDoc, manifest: DatasetManifest, index: FacetIndex,
                 outdir) -> list:
    """Print-ready form: no scripts, fixed width, QR codes bridging the
    page to the article URL and each map's live feed."""
    _require_resolved(resolved)
    doc = resolved.doc
    if not doc.canonical_url:
        raise ExportError("print export requires canonical_url")
    files = {}
    try:
        files["qr/header.png"] = render_qr_png(encode_qr(doc.canonical_url), QR_MODULE_PX)
        n = 0
        for block in resolved.blocks:
            if isinstance(block, ResolvedMap):
                n += 1
                files[f"maps/{n}.png"] = block.map_png
                files[f"qr/{n}.png"] = render_qr_png(encode_qr(block.feed_url), QR_MODULE_PX)
    except Exception as exc:
        raise ExportError(f"QR generation failed: {exc}")
    files["index.html"] = _article_html(resolved, manifest, index, _PRINT_CSS, with_qr=True)
    return _write_tree(Path(outdir), files)


def _xhtml_escape_article(resolved: ResolvedDoc, manifest, index) -> str:
    """Single-spine XHTML content document for the epub."""
    doc = resolved.doc
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<!DOCTYPE html>',
           '<html xmlns="http://www.w3.org/1999/xhtml">',
           "<head>", f"<title>{html.escape(doc.title)}</title>",
           '<link rel="stylesheet" type="text/css" href="styles.css"/>',
           "</head>", "<body>",
           f"<h1>{html.escape(doc.title)}</h1>"]
    if doc.authors:
        out.append(f'<p class="authors">{html.escape("; ".join(doc.authors))}</p>')
    n = 0
    for block in resolved.blocks:
        if isinstance(block, Paragraph):
            out.append(f"<p>{html.escape(block.text)}</p>")
        elif isinstance(block, Heading):
            out.append(f"<h{block.level + 1}>{html.escape(block.text)}</h{block.level + 1}>")
        elif isinstance(block, Figure):
            out.append(f'<p class="figure">{html.escape(block.caption)}</p>')
        elif isinstance(block, ResolvedMap):
            n += 1
            caption = (block.block.caption if isinstance(block.block, MiniMap)
                       else "All records in this article")
            out.append('<div class="map">')
            out.append(f'<img src="maps/{n}.png" alt="map {n}"/>')
            out.append(f'<p>{html.escape(caption)} &#8212; '
                       f'<a href="{html.escape(block.feed_url, quote=True)}">live data feed</a> '
                       f"({block.page.total} records)</p>")
            out.append("<ul>")
            for fid in block.page.matches:
                uri = persistent_uri(manifest, index.get(fid))
                out.append(f'<li><a href="{html.escape(uri, quote=True)}">{html.escape(fid)}</a></li>')
            out.append("</ul></div>")
    out.append("</body></html>")
    return "\n".join(out) + "\n"


_CONTAINER_XML = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    '<container version="1.0" xmlns="urn:oasis:names:tc:opendocument:xmlns:container">\n'
    '  <rootfiles>\n'
    '    <rootfile full-path="OEBPS/content.opf" media-type="application/oebps-package+xml"/>\n'
    '  </rootfiles>\n'
    '</container>\n'
)


def _opf(doc: NarrativeDoc, map_count: int) -> str:
    items = ['<item id="article" href="article.xhtml" media-type="application/xhtml+xml"/>',
             '<item id="css" href="styles.css" media-type="text/css"/>']
    for n in range(1, map_count + 1):
        items.append(f'<item id="map{n}" href="maps/{n}.png" media-type="image/png"/>')
    authors = "".join(f"<dc:creator>{html.escape(a)}</dc:creator>" for a in doc.authors)
    identifier = doc.canonical_url or f"urn:article:{doc.article_id}"
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<package xmlns="http://www.idpf.org/2007/opf" '
        'xmlns:dc="http://purl.org/dc/elements/1.1/" '
        'unique-identifier="bookid" version="2.0">\n'
        "<metadata>"
        f"<dc:title>{html.escape(doc.title)}</dc:title>"
        f"{authors}"
        f'<dc:identifier id="bookid">{html.escape(identifier)}</dc:identifier>'
        "<dc:language>en</dc:language>"
        "</metadata>\n"
        f"<manifest>{''.join(items)}</manifest>\n"
        '<spine><itemref idref="article"/></spine>\n'
        "</package>\n"
    )


def export_epub(resolved: ResolvedDoc, manifest: DatasetManifest, index: FacetIndex,
                build_time: datetime = DEFAULT_BUILD_TIME) -> EpubPackage:
    """Open Container Format package: `mimetype` first and stored, then the
    container pointer and the single-spine package."""
    _require_resolved(resolved)
    doc = resolved.doc
    map_blocks = [b for b in resolved.blocks if isinstance(b, ResolvedMap)]
    date_time = (build_time.year, build_time.month, build_time.day,
                 build_time.hour, build_time.minute, build_time.second)

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        info = zipfile.ZipInfo("mimetype", date_time=date_time)
        info.compress_type = zipfile.ZIP_STORED
        zf.writestr(info, b"application/epub+zip")

        def add(name, data):
            entry = zipfile.ZipInfo(name, date_time=date_time)
            entry.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(entry, data)

        add("META-INF/container.xml", _CONTAINER_XML)
        add("OEBPS/content.opf", _opf(doc, len(map_blocks)))
        add("OEBPS/article.xhtml", _xhtml_escape_article(resolved, manifest, index))
        add("OEBPS/styles.css", _PAGE_CSS)
        for n, block in enumerate(map_blocks, start=1):
            add(f"OEBPS/maps/{n}.png", block.map_png)
    return EpubPackage(data=buf.getvalue())


def write_zone_metadata(zones: ZoneRaster, params, path_png="zones.png",
                        path_world="zones.pgw") -> dict:
    """Sidecar metadata describing a zone raster for the workspace/API."""
    grid = zones.grid
    from .zones import ZONE_NODATA, ZONE_ORDER
    legend = {str(i): aff.value for i, aff in enumerate(ZONE_ORDER)}
    legend[str(ZONE_NODATA)] = "NoData"
    zone_counts = {}
    for i, aff in enumerate(ZONE_ORDER):
        zone_counts[aff.value] = int((zones.zone == i).sum())
    zone_counts["NoData"] = int((zones.zone == ZONE_NODATA).sum())
    return {
        "grid": {
            "origin_lat": grid.origin.lat,
            "origin_lon": grid.origin.lon,
            "cell_size_m": grid.cell_size_m,
            "n_cols": grid.n_cols,
            "n_rows": grid.n_rows,
            "mean_lat": grid.mean_lat,
            "x_size_deg": grid.cell_size_m / grid.m_per_deg_lon,
            "y_size_deg": grid.cell_size_m / grid.m_per_deg_lat,
        },
        "params": {
            "alpha": params.alpha,
            "steps": params.effective_steps(grid.cell_size_m),
            "bandwidth_m": params.bandwidth_m,
            "epsilon": params.epsilon,
        },
        "cell_count": grid.n_cols * grid.n_rows,
        "active_cells": int(zones.active.sum()),
        "zone_counts": zone_counts,
        "legend": legend,
        "png": path_png,
        "world_file": path_world,
    }


def epub_inventory(package: EpubPackage):
    """Zip entry names in central-directory order (structural checks)."""
    with zipfile.ZipFile(io.BytesIO(package.data)) as zf:
        return [i.filename for i in zf.infolist()]


def save_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
