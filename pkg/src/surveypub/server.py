"""Read-only HTTP face of a published dataset.

Every request is answered from one immutable ServiceSnapshot; reloads
build a fresh snapshot from the workspace files and publish it with a
single attribute swap, so concurrent readers never observe a mixed
dataset. The `X-Dataset-Build` header names the snapshot that produced a
response; `X-Schema-Version` names the wire contract.

Routes:
  GET  /api/manifest
  GET  /api/search?<filter grammar>&page=&per_page=
  GET  /api/records/{id}
  GET  /feeds/{atom|kml|geojson}?<filter grammar>
  GET  /api/zones            GET /api/zones.png
  GET  /codes/{id}.png
  POST /admin/reload         (loopback only)
"""

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote, urlsplit

from . import SCHEMA_VERSION
from .errors import IngestError, QueryError, SurveyPubError
from .facets import FacetIndex, build_index, parse_query, query
from .feeds import to_atom, to_geojson, to_kml
from .ingest import parse_dataset
from .model import DatasetManifest, classify, persistent_uri
from .narrative import parse_narrative
from .qr import encode_qr, render_qr_png

QR_MODULE_PX = 4


@dataclass(frozen=True)
class ServiceSnapshot:
    manifest: DatasetManifest
    index: FacetIndex
    zones_meta: dict | None
    zones_png: bytes | None
    build_time: datetime
    build_id: str
    articles: dict          # article_id -> canonical_url


def load_snapshot(workspace) -> ServiceSnapshot:
    """Build an immutable snapshot from the workspace files."""
    ws = Path(workspace)
    manifest_path = ws / "manifest.json"
    dataset_path = ws / "dataset.csv"
    if not manifest_path.exists() or not dataset_path.exists():
        raise IngestError(f"workspace {ws} lacks manifest.json/dataset.csv (run ingest first)")

    manifest_raw = manifest_path.read_bytes()
    dataset_raw = dataset_path.read_bytes()
    meta = json.loads(manifest_raw)
    manifest = DatasetManifest(
        dataset_id=meta["dataset_id"],
        title=meta["title"],
        license_uri=meta["license_uri"],
        schema_version=meta["schema_version"],
        record_count=meta["record_count"],
        base_uri=meta["base_uri"],
    )
    build_time = datetime.fromisoformat(meta["build_time"])
    if build_time.tzinfo is None:
        build_time = build_time.replace(tzinfo=timezone.utc)

    features, report = parse_dataset(dataset_raw.decode("utf-8"))
    if report.rejected:
        line, reason = report.rejected[0]
        raise IngestError(f"normalized dataset has invalid rows (line {line}: {reason})")
    index = build_index(features)

    zones_meta = None
    zones_png = None
    if (ws / "zones.json").exists() and (ws / "zones.png").exists():
        zones_meta = json.loads((ws / "zones.json").read_text())
        zones_png = (ws / "zones.png").read_bytes()

    articles = {}
    articles_dir = ws / "articles"
    if articles_dir.is_dir():
        for path in sorted(articles_dir.glob("*.txt")):
            doc = parse_narrative(path.read_text(encoding="utf-8"))
            if doc.canonical_url:
                articles[doc.article_id] = doc.canonical_url

    build_id = hashlib.sha256(manifest_raw + dataset_raw).hexdigest()[:16]
    return ServiceSnapshot(manifest=manifest, index=index, zones_meta=zones_meta,
                           zones_png=zones_png, build_time=build_time,
                           build_id=build_id, articles=articles)


class ServiceApp:
    """Holds the published snapshot; swap is atomic (one attribute store)."""

    def __init__(self, workspace):
        self.workspace = Path(workspace)
        self.snapshot = load_snapshot(workspace)
        self._reload_lock = threading.Lock()

    def reload(self) -> ServiceSnapshot:
        with self._reload_lock:
            fresh = load_snapshot(self.workspace)
            self.snapshot = fresh
            return fresh


def _record_summary(snapshot, feature):
    return {
        "id": feature.id,
        "locus_id": feature.locus_id,
        "locus_name": feature.locus_name,
        "tomb_type": feature.tomb_type.value,
        "context": feature.context.value,
        "affiliation": classify(feature).value,
        "lat": feature.location.lat,
        "lon": feature.location.lon,
        "uri": persistent_uri(snapshot.manifest, feature),
    }


def _record_full(snapshot, feature):
    body = _record_summary(snapshot, feature)
    body.update({
        "elevation_m": feature.elevation_m,
        "has_inscription": feature.has_inscription,
        "photo_urls": list(feature.photo_urls),
        "gazetteer_uri": feature.gazetteer_uri,
        "affiliation_override": feature.affiliation.value if feature.affiliation else None,
    })
    return body


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):   # noqa: A002 - stdlib signature
        pass

    # -- low-level senders -------------------------------------------------

    def _send(self, status, body: bytes, content_type: str, snapshot, extra=None):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("X-Schema-Version", SCHEMA_VERSION)
        if snapshot is not None:
            self.send_header("X-Dataset-Build", snapshot.build_id)
        self.send_header("Access-Control-Allow-Origin", "*")
        for key, value in (extra or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status, obj, snapshot):
        body = json.dumps(obj, sort_keys=True).encode("utf-8")
        self._send(status, body, "application/json", snapshot)

    def _problem(self, status, message, snapshot=None, param=None):
        body = {"error": message}
        if param:
            body["param"] = param
        self._send_json(status, body, snapshot)

    # -- routing -----------------------------------------------------------

    def do_GET(self):
        snapshot = self.server.app.snapshot
        parts = urlsplit(self.path)
        path = unquote(parts.path)
        try:
            if path == "/api/manifest":
                return self._manifest(snapshot)
            if path == "/api/search":
                return self._search(snapshot, parts.query)
            if path.startswith("/api/records/"):
                return self._record(snapshot, path[len("/api/records/"):])
            if path.startswith("/feeds/"):
                return self._feed(snapshot, path[len("/feeds/"):], parts.query)
            if path == "/api/zones":
                return self._zones_meta(snapshot)
            if path == "/api/zones.png":
                return self._zones_png(snapshot)
            if path.startswith("/codes/") and path.endswith(".png"):
                return self._code(snapshot, path[len("/codes/"):-len(".png")])
            return self._problem(404, f"unknown route: {path}", snapshot)
        except QueryError as exc:
            return self._problem(400, str(exc), snapshot, param=exc.param)
        except BrokenPipeError:
            raise
        except SurveyPubError as exc:
            return self._problem(500, str(exc), snapshot)

    def do_POST(self):
        parts = urlsplit(self.path)
        if parts.path != "/admin/reload":
            return self._problem(404, f"unknown route: {parts.path}")
        if self.client_address[0] not in ("127.0.0.1", "::1"):
            return self._problem(403, "reload is loopback-only")
        try:
            fresh = self.server.app.reload()
        except SurveyPubError as exc:
            return self._problem(500, f"reload failed: {exc}")
        return self._send_json(200, {
            "build": fresh.build_id,
            "record_count": fresh.manifest.record_count,
        }, fresh)

    # -- endpoints -----------------------------------------------------------

    def _manifest(self, snapshot):
        m = snapshot.manifest
        return self._send_json(200, {
            "dataset_id": m.dataset_id,
            "title": m.title,
            "license_uri": m.license_uri,
            "schema_version": m.schema_version,
            "record_count": m.record_count,
            "base_uri": m.base_uri,
            "build_time": snapshot.build_time.isoformat(),
            "build": snapshot.build_id,
        }, snapshot)

    def _search(self, snapshot, query_string):
        filters, page_num, per_page = parse_query(query_string)
        page = query(snapshot.index, filters, page=page_num, per_page=per_page)
        matches = [_record_summary(snapshot, snapshot.index.get(fid))
                   for fid in page.matches]
        return self._send_json(200, {
            "total": page.total,
            "page": page.page,
            "per_page": page.per_page,
            "matches": matches,
            "facet_counts": page.facet_counts,
        }, snapshot)

    def _record(self, snapshot, record_id):
        feature = snapshot.index.get(record_id)
        if feature is None:
            return self._problem(404, f"no such record: {record_id}", snapshot)
        return self._send_json(200, _record_full(snapshot, feature), snapshot)

    def _feed(self, snapshot, fmt, query_string):
        if fmt not in ("atom", "kml", "geojson"):
            return self._problem(400, f"unknown feed format: {fmt}", snapshot, param="format")
        filters, page_num, per_page = parse_query(query_string)
        page = query(snapshot.index, filters, page=page_num, per_page=per_page)
        if fmt == "geojson":
            doc = to_geojson(page, snapshot.manifest, snapshot.index)
        elif fmt == "kml":
            doc = to_kml(page, snapshot.manifest, snapshot.index)
        else:
            host = self.headers.get("Host", "localhost")
            self_url = f"http://{host}/feeds/atom"
            if query_string:
                self_url += f"?{query_string}"
            doc = to_atom(page, snapshot.manifest, snapshot.index, self_url,
                          updated=snapshot.build_time)
        return self._send(200, doc.body, doc.media_type, snapshot)

    def _zones_meta(self, snapshot):
        if snapshot.zones_meta is None:
            return self._problem(404, "no zones computed for this dataset", snapshot)
        meta = dict(snapshot.zones_meta)
        meta["png"] = "/api/zones.png"
        return self._send_json(200, meta, snapshot)

    def _zones_png(self, snapshot):
        if snapshot.zones_png is None:
            return self._problem(404, "no zones computed for this dataset", snapshot)
        return self._send(200, snapshot.zones_png, "image/png", snapshot)

    def _code(self, snapshot, entity_id):
        feature = snapshot.index.get(entity_id)
        if feature is not None:
            target = persistent_uri(snapshot.manifest, feature)
        elif entity_id in snapshot.articles:
            target = snapshot.articles[entity_id]
        else:
            return self._problem(404, f"no record or article named {entity_id}", snapshot)
        png = render_qr_png(encode_qr(target), QR_MODULE_PX)
        return self._send(200, png, "image/png", snapshot)


def make_server(workspace, port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Bind a threading HTTP server over the workspace. port=0 picks a free
    port (server.server_address reports it)."""
    app = ServiceApp(workspace)
    httpd = ThreadingHTTPServer((host, port), _Handler)
    httpd.daemon_threads = True
    httpd.app = app
    return httpd


def serve_forever(workspace, port: int, host: str = "127.0.0.1"):
    httpd = make_server(workspace, port, host)
    try:
        httpd.serve_forever()
    finally:
        httpd.server_close()
