"""Operator entry points: ingest, zones, serve, export.

Exit codes are the only success signal. stdout is a human-readable
summary; stderr carries one machine-parseable line per problem
(`REJECT line=<n> reason=<...>`, `AMBIGUOUS locus=<name> ...`,
`ERROR <message>`).

The workspace is a plain directory of open files (dataset.csv,
manifest.json, ingest_report.json, zones.*, articles/, exports/); every
intermediate is a file another tool can consume.
"""

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import SCHEMA_VERSION
from .errors import (BarrierError, ConfigError, ExportError, GridCapError,
                     IngestError, SurveyPubError)
from .export import (ZoneOverlay, export_epub, export_html, export_print,
                     resolve_embeds, save_json, write_zone_metadata)
from .ingest import features_to_csv, load_gazetteer, parse_dataset, reconcile_places
from .model import DatasetManifest, GeoPoint
from .narrative import parse_narrative
from .server import load_snapshot, make_server
from .zones import (BarrierPolygon, DiffusionParams, interpolate_zones,
                    render_zone_png, world_file)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_FILE = 2
EXIT_CAP = 3


def _err(message: str):
    print(f"ERROR {message}", file=sys.stderr)


def _parse_build_time(raw: str | None) -> datetime:
    if raw is None:
        return datetime.now(timezone.utc).replace(microsecond=0)
    ts = datetime.fromisoformat(raw)
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


def cmd_ingest(args) -> int:
    features_path = Path(args.features)
    gazetteer_path = Path(args.gazetteer)
    for path in (features_path, gazetteer_path):
        if not path.is_file():
            _err(f"no such file: {path}")
            return EXIT_FILE
    try:
        with open(features_path, encoding="utf-8", newline="") as fh:
            features, report = parse_dataset(fh)
        with open(gazetteer_path, encoding="utf-8", newline="") as fh:
            gazetteer = load_gazetteer(fh)
    except IngestError as exc:
        _err(str(exc))
        return EXIT_FILE

    features, deltas = reconcile_places(features, gazetteer)
    report.reconciled = deltas.reconciled
    report.ambiguous = deltas.ambiguous

    ws = Path(args.workspace)
    ws.mkdir(parents=True, exist_ok=True)
    build_time = _parse_build_time(args.build_time)
    manifest = DatasetManifest(
        dataset_id=args.dataset_id,
        title=args.title,
        license_uri=args.license_uri,
        schema_version=SCHEMA_VERSION,
        record_count=len(features),
        base_uri=args.base_uri,
    )
    (ws / "dataset.csv").write_text(features_to_csv(features), encoding="utf-8")
    save_json(ws / "manifest.json", {
        "dataset_id": manifest.dataset_id,
        "title": manifest.title,
        "license_uri": manifest.license_uri,
        "schema_version": manifest.schema_version,
        "record_count": manifest.record_count,
        "base_uri": manifest.base_uri,
        "build_time": build_time.isoformat(),
    })
    save_json(ws / "ingest_report.json", report.to_dict())

    for line, reason in report.rejected:
        print(f"REJECT line={line} reason={reason}", file=sys.stderr)
    for name, uris in report.ambiguous:
        print(f"AMBIGUOUS locus={name} candidates={','.join(uris)}", file=sys.stderr)
    print(f"ingest: accepted={report.accepted} rejected={len(report.rejected)} "
          f"reconciled={report.reconciled} ambiguous={len(report.ambiguous)} -> {ws}")
    return EXIT_OK if not report.rejected else EXIT_DATA


def _load_barrier(path: Path) -> BarrierPolygon:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BarrierError(f"cannot read barrier file: {exc}")
    geometry = doc
    if doc.get("type") == "FeatureCollection":
        features = doc.get("features") or []
        if not features:
            raise BarrierError("barrier FeatureCollection is empty")
        geometry = features[0].get("geometry") or {}
    elif doc.get("type") == "Feature":
        geometry = doc.get("geometry") or {}
    if geometry.get("type") != "Polygon":
        raise BarrierError(f"barrier must be a Polygon, got {geometry.get('type')!r}")
    rings = geometry.get("coordinates") or []
    if not rings:
        raise BarrierError("barrier Polygon has no rings")
    ring = tuple(GeoPoint(lat=p[1], lon=p[0]) for p in rings[0])
    return BarrierPolygon(ring=ring)


def cmd_zones(args) -> int:
    ws = Path(args.workspace)
    dataset = ws / "dataset.csv"
    if not dataset.is_file():
        _err(f"workspace has no dataset.csv: {ws}")
        return EXIT_FILE
    barrier_path = Path(args.barrier)
    if not barrier_path.is_file():
        _err(f"no such file: {barrier_path}")
        return EXIT_FILE
    try:
        barrier = _load_barrier(barrier_path)
        params = DiffusionParams(
            alpha=args.alpha,
            steps=args.steps,
            bandwidth_m=args.bandwidth_m,
            epsilon=args.epsilon,
        )
    except (BarrierError, ConfigError) as exc:
        _err(str(exc))
        return EXIT_FILE

    with open(dataset, encoding="utf-8", newline="") as fh:
        features, report = parse_dataset(fh)
    if report.rejected:
        _err("workspace dataset.csv is not clean; re-run ingest")
        return EXIT_FILE

    lons = [p.lon for p in barrier.ring]
    lats = [p.lat for p in barrier.ring]
    bbox = (min(lons), min(lats), max(lons), max(lats))
    try:
        zones = interpolate_zones(features, barrier, bbox,
                                  cell_size_m=args.cell_m, params=params)
    except GridCapError as exc:
        _err(str(exc))
        return EXIT_CAP
    except (BarrierError, ConfigError) as exc:
        _err(str(exc))
        return EXIT_FILE

    png = render_zone_png(zones)
    (ws / "zones.png").write_bytes(png)
    (ws / "zones.pgw").write_text(world_file(zones.grid), encoding="utf-8")
    meta = write_zone_metadata(zones, params)
    save_json(ws / "zones.json", meta)
    print(f"zones: {meta['grid']['n_cols']}x{meta['grid']['n_rows']} cells, "
          f"{meta['active_cells']} active, steps={meta['params']['steps']} -> {ws}")
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        httpd = make_server(args.workspace, port=args.port, host=args.host)
    except OSError as exc:
        _err(f"cannot bind port {args.port}: {exc}")
        return EXIT_FILE
    except (IngestError, SurveyPubError) as exc:
        _err(str(exc))
        return EXIT_FILE
    host, port = httpd.server_address[:2]
    print(f"serving workspace {args.workspace} on http://{host}:{port}")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return EXIT_OK


def cmd_export(args) -> int:
    ws = Path(args.workspace)
    article_path = Path(args.article)
    if not article_path.is_file():
        _err(f"no such file: {article_path}")
        return EXIT_FILE
    try:
        snapshot = load_snapshot(ws)
    except (IngestError, SurveyPubError) as exc:
        _err(str(exc))
        return EXIT_FILE
    try:
        doc = parse_narrative(article_path.read_text(encoding="utf-8"))
    except ExportError as exc:
        _err(str(exc))
        return EXIT_DATA

    overlay = None
    if snapshot.zones_meta is not None and snapshot.zones_png is not None:
        overlay = ZoneOverlay.from_files(snapshot.zones_png, snapshot.zones_meta)

    resolved = resolve_embeds(doc, snapshot.index, snapshot.manifest, overlay)
    if resolved.errors:
        for position, message in resolved.errors:
            print(f"ERROR block={position} reason={message}", file=sys.stderr)
        return EXIT_DATA

    if args.format == "print" and not doc.canonical_url:
        _err("print export requires field canonical_url")
        return EXIT_DATA

    outdir = Path(args.out) if args.out else ws / "exports" / doc.article_id / args.format
    build_time = _parse_build_time(args.build_time)
    try:
        if args.format == "html":
            written = export_html(resolved, snapshot.manifest, snapshot.index, outdir)
        elif args.format == "print":
            written = export_print(resolved, snapshot.manifest, snapshot.index, outdir)
        else:
            package = export_epub(resolved, snapshot.manifest, snapshot.index,
                                  build_time=build_time)
            outdir.mkdir(parents=True, exist_ok=True)
            target = outdir / f"{doc.article_id}.epub"
            target.write_bytes(package.data)
            written = [str(target)]
    except ExportError as exc:
        _err(str(exc))
        return EXIT_DATA

    articles_dir = ws / "articles"
    articles_dir.mkdir(parents=True, exist_ok=True)
    (articles_dir / f"{doc.article_id}.txt").write_text(
        article_path.read_text(encoding="utf-8"), encoding="utf-8")

    print(f"export: {args.format} of {doc.article_id}: {len(written)} file(s) -> {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surveypub",
        description="Publish georeferenced survey features: ingest, zone rasters, feeds, exports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a feature CSV and build a workspace")
    p.add_argument("features", help="feature CSV file")
    p.add_argument("gazetteer", help="gazetteer CSV file")
    p.add_argument("--workspace", required=True)
    p.add_argument("--base-uri", default="https://data.example.org/survey")
    p.add_argument("--dataset-id", default="survey-features")
    p.add_argument("--title", default="Survey features")
    p.add_argument("--license-uri", default="https://creativecommons.org/licenses/by/4.0/")
    p.add_argument("--build-time", default=None, help="ISO timestamp for reproducible output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("zones", help="compute the cultural-zone raster")
    p.add_argument("--workspace", required=True)
    p.add_argument("--barrier", required=True, help="GeoJSON polygon delimiting the survey sector")
    p.add_argument("--cell-m", type=float, default=250.0)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--steps", type=int, default=160)
    p.add_argument("--bandwidth-m", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=1e-12)
    p.set_defaults(func=cmd_zones)

    p = sub.add_parser("serve", help="serve the workspace over HTTP")
    p.add_argument("--workspace", required=True)
    p.add_argument("--port", type=int, default=8571)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="export an article to html/print/epub")
    p.add_argument("--workspace", required=True)
    p.add_argument("--article", required=True, help="narrative source file")
    p.add_argument("--format", choices=("html", "print", "epub"), required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--build-time", default=None)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SurveyPubError as exc:
        _err(str(exc))
        return EXIT_FILE


if __name__ == "__main__":
    sys.exit(main())
