"""Serialize result pages into Atom, KML, and GeoJSON feeds.

Axis-order discipline, per format convention:
  GeoJSON coordinates  -> [lon, lat]
  KML <coordinates>    -> lon,lat,elevation
  georss:point         -> lat lon

Every record in a feed carries its persistent URI (the backlink into the
data-publishing service), so any consumer can walk from a feed item to the
canonical record. Serialization is deterministic: identical inputs produce
byte-identical bodies (timestamps are injected, never read from the clock).
"""

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime, timezone
from urllib.parse import parse_qsl, quote, urlsplit, urlunsplit

from .errors import FeedError
from .facets import FacetIndex, ResultPage
from .model import CulturalAffiliation, DatasetManifest, classify, persistent_uri
from .numfmt import fnum

MEDIA_TYPE_ATOM = "application/atom+xml"
MEDIA_TYPE_KML = "application/vnd.google-earth.kml+xml"
MEDIA_TYPE_GEOJSON = "application/geo+json"

ATOM_NS = "http://www.w3.org/2005/Atom"
GEORSS_NS = "http://www.georss.org/georss"
KML_NS = "http://www.opengis.net/kml/2.2"

# KML colors are aabbggrr. Blue coast, orange midlands, red hinterland,
# mirroring the zone-map legend.
KML_AFFILIATION_COLORS = {
    CulturalAffiliation.Polis: "ffff0000",
    CulturalAffiliation.Mesogeia: "ff00a5ff",
    CulturalAffiliation.Hinterland: "ff0000ff",
}


@dataclass(frozen=True)
class FeedDocument:
    media_type: str
    body: bytes
    record_uris: tuple


def _resolve(page: ResultPage, index: FacetIndex):
    features = []
    for fid in page.matches:
        feature = index.get(fid)
        if feature is None:
            raise FeedError(f"id not resolvable in index: {fid}")
        features.append(feature)
    return features


def _rfc3339(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def to_geojson(page: ResultPage, manifest: DatasetManifest,
               index: FacetIndex) -> FeedDocument:
    """RFC 7946 FeatureCollection with one Point feature per record."""
    features = _resolve(page, index)
    out_features = []
    uris = []
    for f in features:
        uri = persistent_uri(manifest, f)
        uris.append(uri)
        out_features.append({
            "type": "Feature",
            "id": uri,
            "geometry": {"type": "Point",
                         "coordinates": [f.location.lon, f.location.lat]},
            "properties": {
                "id": f.id,
                "locus_id": f.locus_id,
                "locus_name": f.locus_name,
                "tomb_type": f.tomb_type.value,
                "context": f.context.value,
                "elevation_m": f.elevation_m,
                "has_inscription": f.has_inscription,
                "photo_urls": list(f.photo_urls),
                "gazetteer_uri": f.gazetteer_uri,
                "affiliation": classify(f).value,
                "source_uri": uri,
            },
        })
    body = json.dumps({"type": "FeatureCollection", "features": out_features},
                      separators=(",", ":"))
    return FeedDocument(MEDIA_TYPE_GEOJSON, body.encode("utf-8"), tuple(uris))


def to_kml(page: ResultPage, manifest: DatasetManifest,
           index: FacetIndex) -> FeedDocument:
    """KML 2.2 Document: shared per-affiliation styles + one Placemark each."""
    features = _resolve(page, index)
    root = ET.Element("kml", {"xmlns": KML_NS})
    doc = ET.SubElement(root, "Document")
    ET.SubElement(doc, "name").text = manifest.title
    for aff, color in KML_AFFILIATION_COLORS.items():
        style = ET.SubElement(doc, "Style", {"id": aff.value.lower()})
        icon = ET.SubElement(style, "IconStyle")
        ET.SubElement(icon, "color").text = color
    uris = []
    for f in features:
        uri = persistent_uri(manifest, f)
        uris.append(uri)
        aff = classify(f)
        pm = ET.SubElement(doc, "Placemark")
        ET.SubElement(pm, "name").text = f.id
        ET.SubElement(pm, "description").text = f'<a href="{uri}">{uri}</a>'
        ET.SubElement(pm, "styleUrl").text = f"#{aff.value.lower()}"
        ext = ET.SubElement(pm, "ExtendedData")
        for key, value in (
            ("locus_name", f.locus_name),
            ("tomb_type", f.tomb_type.value),
            ("context", f.context.value),
            ("affiliation", aff.value),
            ("has_inscription", "true" if f.has_inscription else "false"),
            ("photo_urls", ";".join(f.photo_urls)),
        ):
            data = ET.SubElement(ext, "Data", {"name": key})
            ET.SubElement(data, "value").text = value
        point = ET.SubElement(pm, "Point")
        ET.SubElement(point, "coordinates").text = (
            f"{fnum(f.location.lon)},{fnum(f.location.lat)},{fnum(f.elevation_m)}")
    body = ET.tostring(root, encoding="UTF-8")
    return FeedDocument(MEDIA_TYPE_KML, body, tuple(uris))


def _page_url(self_url: str, page_number: int) -> str:
    """self_url with its page parameter replaced (appended if absent)."""
    parts = urlsplit(self_url)
    kept = [(k, v) for k, v in parse_qsl(parts.query, keep_blank_values=True)
            if k != "page"]
    kept.append(("page", str(page_number)))
    query = "&".join(f"{k}={quote(v, safe=',')}" for k, v in kept)
    return urlunsplit((parts.scheme, parts.netloc, parts.path, query, parts.fragment))


def to_atom(page: ResultPage, manifest: DatasetManifest, index: FacetIndex,
            self_url: str, updated: datetime) -> FeedDocument:
    """Atom feed with georss:point entries and next/previous paging links.

    `updated` is the dataset build timestamp, injected by the caller so
    identical inputs serialize byte-identically.
    """
    features = _resolve(page, index)
    stamp = _rfc3339(updated)
    root = ET.Element("feed", {"xmlns": ATOM_NS, "xmlns:georss": GEORSS_NS})
    ET.SubElement(root, "id").text = self_url
    ET.SubElement(root, "title").text = manifest.title
    ET.SubElement(root, "updated").text = stamp
    author = ET.SubElement(root, "author")
    ET.SubElement(author, "name").text = manifest.title
    ET.SubElement(root, "link", {"rel": "self", "href": self_url})

    last_page = max(1, -(-page.total // page.per_page))
    if page.page > 1 and page.page - 1 <= last_page:
        ET.SubElement(root, "link", {"rel": "previous",
                                     "href": _page_url(self_url, page.page - 1)})
    if page.page + 1 <= last_page:
        ET.SubElement(root, "link", {"rel": "next",
                                     "href": _page_url(self_url, page.page + 1)})

    uris = []
    for f in features:
        uri = persistent_uri(manifest, f)
        uris.append(uri)
        entry = ET.SubElement(root, "entry")
        ET.SubElement(entry, "id").text = uri
        ET.SubElement(entry, "title").text = f.id
        ET.SubElement(entry, "updated").text = stamp
        ET.SubElement(entry, "link", {"rel": "alternate", "href": uri})
        ET.SubElement(entry, "georss:point").text = (
            f"{fnum(f.location.lat)} {fnum(f.location.lon)}")
    body = ET.tostring(root, encoding="UTF-8")
    return FeedDocument(MEDIA_TYPE_ATOM, body, tuple(uris))
