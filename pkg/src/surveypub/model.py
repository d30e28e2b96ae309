"""Domain types for georeferenced funerary survey features.

All types are immutable after construction and safe to share across
threads. The tomb-type -> cultural-affiliation default rule lives here so
every other module derives the same classification.
"""

import re
from dataclasses import dataclass
from enum import Enum
from urllib.parse import urlparse

from .errors import ConfigError


class TombType(str, Enum):
    TempleTomb = "TempleTomb"
    Grabhaus = "Grabhaus"
    VaultedChamber = "VaultedChamber"
    RockCut = "RockCut"
    LycianHouse = "LycianHouse"
    Pedestal = "Pedestal"
    Altar = "Altar"
    Larnax = "Larnax"


class SiteContext(str, Enum):
    Urban = "Urban"
    Village = "Village"
    IsolatedNecropolis = "IsolatedNecropolis"
    Isolated = "Isolated"


class CulturalAffiliation(str, Enum):
    Polis = "Polis"
    Mesogeia = "Mesogeia"
    Hinterland = "Hinterland"


# Default affiliation per tomb type: monumental Greco-Roman construction
# clusters at the coast, rock-cut/house tombs in the midlands, the small
# marker forms in the hinterland-influenced necropolis clusters. The table
# partitions the TombType enumeration.
DEFAULT_AFFILIATION = {
    TombType.TempleTomb: CulturalAffiliation.Polis,
    TombType.Grabhaus: CulturalAffiliation.Polis,
    TombType.VaultedChamber: CulturalAffiliation.Polis,
    TombType.RockCut: CulturalAffiliation.Mesogeia,
    TombType.LycianHouse: CulturalAffiliation.Mesogeia,
    TombType.Pedestal: CulturalAffiliation.Hinterland,
    TombType.Altar: CulturalAffiliation.Hinterland,
    TombType.Larnax: CulturalAffiliation.Hinterland,
}

# RC + 4 digits + "-" + non-empty local suffix, e.g. RC0304-T001.
FEATURE_ID_RE = re.compile(r"^RC\d{4}-\S+$")
LOCUS_ID_RE = re.compile(r"^RC\d{4}$")


def is_absolute_url(value: str) -> bool:
    """True for http(s) URLs with a host."""
    parsed = urlparse(value)
    return parsed.scheme in ("http", "https") and bool(parsed.netloc)


def is_absolute_uri(value: str) -> bool:
    """True for URIs with a scheme and some authority or path."""
    parsed = urlparse(value)
    return bool(parsed.scheme) and bool(parsed.netloc or parsed.path)


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 position in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"lat out of range: {self.lat!r}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"lon out of range: {self.lon!r}")


@dataclass(frozen=True)
class SurveyFeature:
    """One georeferenced funerary/architectural record.

    ``affiliation`` is an explicit override; the derived value comes from
    :func:`classify`. ``photo_urls`` must be absolute URLs. Id-grammar
    strictness is an ingest concern (see ingest options); this type only
    enforces the structural invariants that must always hold.
    """

    id: str
    locus_id: str
    locus_name: str
    tomb_type: TombType
    context: SiteContext
    location: GeoPoint
    elevation_m: float
    has_inscription: bool
    photo_urls: tuple = ()
    affiliation: CulturalAffiliation | None = None
    gazetteer_uri: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("id must be non-empty")
        if not self.id.startswith(self.locus_id):
            raise ValueError(f"locus_id {self.locus_id!r} is not a prefix of id {self.id!r}")
        if self.elevation_m < 0:
            raise ValueError(f"elevation_m must be >= 0, got {self.elevation_m!r}")
        for url in self.photo_urls:
            if not is_absolute_url(url):
                raise ValueError(f"photo url not absolute: {url!r}")
        if self.gazetteer_uri is not None and not is_absolute_uri(self.gazetteer_uri):
            raise ValueError(f"gazetteer_uri not absolute: {self.gazetteer_uri!r}")


@dataclass(frozen=True)
class DatasetManifest:
    """Identity and minting rules for one published dataset."""

    dataset_id: str
    title: str
    license_uri: str
    schema_version: str
    record_count: int
    base_uri: str

    def __post_init__(self):
        if self.record_count < 0:
            raise ValueError("record_count must be >= 0")


def classify(feature: SurveyFeature) -> CulturalAffiliation:
    """Cultural affiliation of a feature: explicit override, else the
    default tomb-type rule. Total and pure."""
    if feature.affiliation is not None:
        return feature.affiliation
    return DEFAULT_AFFILIATION[feature.tomb_type]


def persistent_uri(manifest: DatasetManifest, feature: SurveyFeature) -> str:
    """Persistent identifier of a record: base_uri + "/records/" + id.

    A trailing slash on base_uri is normalized away so the minted URI is
    stable regardless of how the base was configured.
    """
    base = manifest.base_uri.rstrip("/")
    if not is_absolute_uri(base) or not urlparse(base).netloc:
        raise ConfigError(f"base_uri is not an absolute URI: {manifest.base_uri!r}")
    return f"{base}/records/{feature.id}"
