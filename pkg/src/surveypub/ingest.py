"""CSV ingest, validation, and gazetteer reconciliation.

Feature files are RFC 4180 comma-separated UTF-8 with a header row naming
the columns in any order. Rows that violate a SurveyFeature invariant are
reported with their line number, never silently dropped. Reconciliation
matches locus names against a local gazetteer snapshot and mints
Linked-Open-Data URIs; ambiguity is surfaced as data, not failure.
"""

import csv
import io
from dataclasses import dataclass, field, replace

from .errors import IngestError
from .model import (
    FEATURE_ID_RE,
    LOCUS_ID_RE,
    CulturalAffiliation,
    GeoPoint,
    SiteContext,
    SurveyFeature,
    TombType,
    is_absolute_uri,
)

FEATURE_COLUMNS = [
    "id", "locus_id", "locus_name", "tomb_type", "context",
    "lat", "lon", "elevation_m", "has_inscription", "photo_urls",
    "affiliation", "gazetteer_uri",
]

GAZETTEER_COLUMNS = ["uri", "preferred_name", "aliases", "lat", "lon"]


@dataclass(frozen=True)
class IngestOptions:
    """Knobs for parse_dataset. strict_ids enforces the RC####-suffix grammar."""

    strict_ids: bool = True


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: list = field(default_factory=list)    # (line number, reason)
    reconciled: int = 0
    ambiguous: list = field(default_factory=list)   # (locus_name, [candidate uris])

    def to_dict(self):
        return {
            "accepted": self.accepted,
            "rejected": [[line, reason] for line, reason in self.rejected],
            "reconciled": self.reconciled,
            "ambiguous": [[name, list(uris)] for name, uris in self.ambiguous],
        }


@dataclass(frozen=True)
class GazetteerEntry:
    uri: str
    preferred_name: str
    aliases: tuple
    location: GeoPoint

    def __post_init__(self):
        if not is_absolute_uri(self.uri):
            raise ValueError(f"gazetteer uri not absolute: {self.uri!r}")
        if not self.preferred_name:
            raise ValueError("preferred_name must be non-empty")


def _as_stream(source):
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    return source


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_row(row: dict, options: IngestOptions) -> SurveyFeature:
    feature_id = row["id"].strip()
    locus_id = row["locus_id"].strip()
    if options.strict_ids:
        if not FEATURE_ID_RE.match(feature_id):
            raise ValueError(f"id does not match RC####-suffix grammar: {feature_id!r}")
        if not LOCUS_ID_RE.match(locus_id):
            raise ValueError(f"locus_id does not match RC#### grammar: {locus_id!r}")

    try:
        lat = float(row["lat"])
    except ValueError:
        raise ValueError(f"lat not a number: {row['lat']!r}")
    try:
        lon = float(row["lon"])
    except ValueError:
        raise ValueError(f"lon not a number: {row['lon']!r}")
    if not -90.0 <= lat <= 90.0:
        raise ValueError("lat out of range")
    if not -180.0 <= lon <= 180.0:
        raise ValueError("lon out of range")

    raw_type = row["tomb_type"].strip()
    try:
        tomb_type = TombType(raw_type)
    except ValueError:
        raise ValueError(f"unknown tomb_type: {raw_type!r}")
    raw_context = row["context"].strip()
    try:
        context = SiteContext(raw_context)
    except ValueError:
        raise ValueError(f"unknown context: {raw_context!r}")

    try:
        elevation = float(row["elevation_m"])
    except ValueError:
        raise ValueError(f"elevation_m not a number: {row['elevation_m']!r}")

    has_inscription = _parse_bool(row["has_inscription"])

    photo_urls = tuple(u for u in row["photo_urls"].split(";") if u.strip())

    affiliation = None
    if row["affiliation"].strip():
        raw_aff = row["affiliation"].strip()
        try:
            affiliation = CulturalAffiliation(raw_aff)
        except ValueError:
            raise ValueError(f"unknown affiliation: {raw_aff!r}")

    gazetteer_uri = row["gazetteer_uri"].strip() or None

    return SurveyFeature(
        id=feature_id,
        locus_id=locus_id,
        locus_name=row["locus_name"].strip(),
        tomb_type=tomb_type,
        context=context,
        location=GeoPoint(lat=lat, lon=lon),
        elevation_m=elevation,
        has_inscription=has_inscription,
        photo_urls=photo_urls,
        affiliation=affiliation,
        gazetteer_uri=gazetteer_uri,
    )


def parse_dataset(source, options: IngestOptions = IngestOptions()):
    """Parse a feature CSV into (features, report).

    Accepted features keep input order and satisfy every SurveyFeature
    invariant. A missing mandatory column is a whole-file IngestError;
    bad cells reject that row only.
    """
    reader = csv.DictReader(_as_stream(source))
    if reader.fieldnames is None:
        raise IngestError("empty input: no header row")
    missing = [c for c in FEATURE_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise IngestError(f"missing mandatory column(s): {', '.join(missing)}")

    features = []
    report = IngestReport()
    seen_ids = {}
    for row in reader:
        line = reader.line_num
        if any(v is None for v in row.values()):
            report.rejected.append((line, "row has fewer cells than the header"))
            continue
        try:
            feature = _parse_row(row, options)
        except ValueError as exc:
            report.rejected.append((line, str(exc)))
            continue
        if feature.id in seen_ids:
            report.rejected.append(
                (line, f"duplicate id {feature.id} (first seen on line {seen_ids[feature.id]})"))
            continue
        seen_ids[feature.id] = line
        features.append(feature)
        report.accepted += 1
    return features, report


def load_gazetteer(source):
    """Parse a gazetteer CSV into a list of GazetteerEntry.

    Columns: uri, preferred_name, aliases (semicolon-separated), lat, lon.
    Duplicate URIs are a file error naming both lines.
    """
    reader = csv.DictReader(_as_stream(source))
    if reader.fieldnames is None:
        raise IngestError("empty gazetteer: no header row")
    missing = [c for c in GAZETTEER_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise IngestError(f"missing mandatory column(s): {', '.join(missing)}")

    entries = []
    seen = {}
    for row in reader:
        line = reader.line_num
        if any(v is None for v in row.values()):
            raise IngestError(f"gazetteer line {line}: fewer cells than the header")
        uri = row["uri"].strip()
        if uri in seen:
            raise IngestError(f"duplicate uri {uri}: lines {seen[uri]} and {line}")
        seen[uri] = line
        try:
            entry = GazetteerEntry(
                uri=uri,
                preferred_name=row["preferred_name"].strip(),
                aliases=tuple(a.strip() for a in row["aliases"].split(";") if a.strip()),
                location=GeoPoint(lat=float(row["lat"]), lon=float(row["lon"])),
            )
        except ValueError as exc:
            raise IngestError(f"gazetteer line {line}: {exc}")
        entries.append(entry)
    return entries


def reconcile_places(features, gazetteer):
    """Fill gazetteer_uri on features by locus-name match.

    Case-insensitive match against preferred names first, then aliases.
    A unique match assigns the URI; several matches at the same tier go to
    the ambiguous list; zero matches leave the field empty. Pre-set URIs
    are never overwritten, which makes the operation idempotent.

    Returns (new feature list, IngestReport carrying only the deltas).
    """
    by_preferred = {}
    by_alias = {}
    for entry in gazetteer:
        by_preferred.setdefault(entry.preferred_name.lower(), []).append(entry)
        for alias in entry.aliases:
            by_alias.setdefault(alias.lower(), []).append(entry)

    report = IngestReport(accepted=len(features))
    ambiguous_seen = set()
    out = []
    for feature in features:
        if feature.gazetteer_uri is not None:
            out.append(feature)
            continue
        key = feature.locus_name.lower()
        candidates = by_preferred.get(key) or by_alias.get(key) or []
        if len(candidates) == 1:
            out.append(replace(feature, gazetteer_uri=candidates[0].uri))
            report.reconciled += 1
        else:
            if len(candidates) > 1 and feature.locus_name not in ambiguous_seen:
                ambiguous_seen.add(feature.locus_name)
                report.ambiguous.append(
                    (feature.locus_name, [c.uri for c in candidates]))
            out.append(feature)
    return out, report


def features_to_csv(features) -> str:
    """Serialize features back to the feature CSV schema (normalized form)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FEATURE_COLUMNS)
    for f in features:
        writer.writerow([
            f.id,
            f.locus_id,
            f.locus_name,
            f.tomb_type.value,
            f.context.value,
            repr(f.location.lat),
            repr(f.location.lon),
            repr(f.elevation_m),
            "true" if f.has_inscription else "false",
            ";".join(f.photo_urls),
            f.affiliation.value if f.affiliation is not None else "",
            f.gazetteer_uri or "",
        ])
    return buf.getvalue()
