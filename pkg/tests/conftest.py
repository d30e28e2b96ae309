"""Shared fixtures: the synthetic 231-feature survey corpus and helpers.

The corpus is deterministic (seeded) and stratified south-to-north into
three affiliation bands so the zone-raster tests have a known spatial
structure: coastal types in the south band, midland types in the middle,
hinterland marker types in the north. A handful of "exception" features
carry an explicit affiliation override that matches their band despite a
foreign tomb type.
"""

import json
import random

import pytest

from surveypub.facets import FilterSet
from surveypub.ingest import features_to_csv
from surveypub.model import (CulturalAffiliation, GeoPoint, SiteContext,
                             SurveyFeature, TombType, classify)
from surveypub.zones import BarrierPolygon

DOMAIN_BBOX = (32.0, 36.0, 32.6, 36.4)          # min_lon, min_lat, max_lon, max_lat
BARRIER_BBOX = (32.02, 36.02, 32.58, 36.38)

# South (coastal), middle, north bands in latitude.
BANDS = {
    CulturalAffiliation.Polis: (36.04, 36.12),
    CulturalAffiliation.Mesogeia: (36.16, 36.24),
    CulturalAffiliation.Hinterland: (36.28, 36.36),
}

BAND_TYPES = {
    CulturalAffiliation.Polis: [TombType.TempleTomb, TombType.Grabhaus, TombType.VaultedChamber],
    CulturalAffiliation.Mesogeia: [TombType.RockCut, TombType.LycianHouse],
    CulturalAffiliation.Hinterland: [TombType.Pedestal, TombType.Altar, TombType.Larnax],
}

BAND_CONTEXTS = {
    CulturalAffiliation.Polis: [SiteContext.Urban, SiteContext.Village],
    CulturalAffiliation.Mesogeia: [SiteContext.Village, SiteContext.IsolatedNecropolis],
    CulturalAffiliation.Hinterland: [SiteContext.IsolatedNecropolis, SiteContext.Isolated],
}

BAND_ELEVATION = {
    CulturalAffiliation.Polis: (5.0, 150.0),
    CulturalAffiliation.Mesogeia: (200.0, 600.0),
    CulturalAffiliation.Hinterland: (700.0, 1400.0),
}

_LOCUS_PLAN = [
    # (code, name, affiliation band index 0/1/2)
    (101, "Selinara"), (205, "Harbor Point"), (412, "Iotara"),
    (503, "Kestrel Bay"), (618, "Antiakra"), (702, "Cape Govan"),
    (815, "Sivaste"), (909, "Melania"), (1003, "Nephelion"),
    (304, "Kenetepe"), (1105, "Corus"), (1201, "Lamotis"),
    (1308, "Direkli"), (1414, "Asartepe"), (1507, "Kaletepe"),
    (1609, "Ovacik Ridge"), (1716, "Gedik Hill"), (1802, "Yalan Dag"),
    (1905, "Tashan"), (2011, "Kuzca"), (2104, "Ardicli"),
    (2209, "Bey Yaylasi"), (2306, "Tol Kale"), (2408, "Karaman Ridge"),
    (2513, "Gokbel"), (2607, "Sarnic Plateau"),
]

_BAND_OF_LOCUS = ([CulturalAffiliation.Polis] * 9
                  + [CulturalAffiliation.Mesogeia] * 9
                  + [CulturalAffiliation.Hinterland] * 8)


def make_fixture_features(seed: int = 20120401):
    """231 features at 26 named loci, banded by affiliation."""
    rng = random.Random(seed)
    counts = [9] * 23 + [8] * 3                       # sums to 231
    assert sum(counts) == 231

    lon_lo, lon_hi = 32.06, 32.54
    features = []
    for li, ((code, name), band, count) in enumerate(
            zip(_LOCUS_PLAN, _BAND_OF_LOCUS, counts)):
        lat_lo, lat_hi = BANDS[band]
        # Spread loci across the full longitude range within each band.
        band_position = li % 9 if band != CulturalAffiliation.Hinterland else li % 8
        band_size = 9 if band != CulturalAffiliation.Hinterland else 8
        locus_lon = lon_lo + (lon_hi - lon_lo) * (band_position + 0.5) / band_size
        locus_lat = lat_lo + (lat_hi - lat_lo) * rng.random()
        locus_id = f"RC{code:04d}"
        for k in range(count):
            exception = rng.random() < 0.03
            if exception:
                other_bands = [b for b in BAND_TYPES if b != band]
                tomb_type = rng.choice(BAND_TYPES[rng.choice(other_bands)])
                override = band
            else:
                tomb_type = rng.choice(BAND_TYPES[band])
                override = None
            lat = min(lat_hi, max(lat_lo, locus_lat + rng.uniform(-0.008, 0.008)))
            lon = min(lon_hi, max(lon_lo, locus_lon + rng.uniform(-0.008, 0.008)))
            elev_lo, elev_hi = BAND_ELEVATION[band]
            photos = tuple(
                f"https://media.example.org/{locus_id}/T{k + 1:03d}-{j}.jpg"
                for j in range(rng.choice((0, 0, 1, 2))))
            features.append(SurveyFeature(
                id=f"{locus_id}-T{k + 1:03d}",
                locus_id=locus_id,
                locus_name=name,
                tomb_type=tomb_type,
                context=rng.choice(BAND_CONTEXTS[band]),
                location=GeoPoint(lat=lat, lon=lon),
                elevation_m=round(rng.uniform(elev_lo, elev_hi), 1),
                has_inscription=rng.random() < 0.3,
                photo_urls=photos,
                affiliation=override,
            ))
    assert len(features) == 231
    assert len({f.locus_id for f in features}) == 26
    return features


def make_fixture_gazetteer_csv():
    """Gazetteer snapshot: most loci resolvable, 'Corus' ambiguous,
    'Gokbel' absent, 'Sivaste' reachable only through an alias."""
    rows = ["uri,preferred_name,aliases,lat,lon"]
    n = 1
    for (code, name), band in zip(_LOCUS_PLAN, _BAND_OF_LOCUS):
        if name == "Gokbel":
            continue
        lat_lo, lat_hi = BANDS[band]
        lat = round((lat_lo + lat_hi) / 2, 3)
        if name == "Sivaste":
            rows.append(f"https://places.example/{n:03d},Siwaste,Sivaste;Sibaste,{lat},32.3")
        else:
            rows.append(f"https://places.example/{n:03d},{name},,{lat},32.3")
        n += 1
    # second entry for Corus -> ambiguity
    rows.append(f"https://places.example/{n:03d},Corus,,36.2,32.4")
    return "\n".join(rows) + "\n"


def make_barrier(inset=BARRIER_BBOX) -> BarrierPolygon:
    min_lon, min_lat, max_lon, max_lat = inset
    ring = (
        GeoPoint(min_lat, min_lon),
        GeoPoint(min_lat, max_lon),
        GeoPoint(max_lat, max_lon),
        GeoPoint(max_lat, min_lon),
        GeoPoint(min_lat, min_lon),
    )
    return BarrierPolygon(ring=ring)


def barrier_geojson(inset=BARRIER_BBOX) -> str:
    min_lon, min_lat, max_lon, max_lat = inset
    ring = [[min_lon, min_lat], [max_lon, min_lat], [max_lon, max_lat],
            [min_lon, max_lat], [min_lon, min_lat]]
    return json.dumps({"type": "Feature", "properties": {},
                       "geometry": {"type": "Polygon", "coordinates": [ring]}})


def make_random_corpus(n: int = 1000, seed: int = 99):
    """Unstructured random corpus for oracle/property tests."""
    rng = random.Random(seed)
    features = []
    names = ["Alpha", "Beta", "Gamma", "Delta", "Kappa Ridge", "Omega Bay",
             "Kenetepe", "Corus", "North Spur", "Old Harbor"]
    for i in range(n):
        locus_num = rng.randint(1, 40)
        locus_id = f"RC{locus_num:04d}"
        override = rng.choice([None, None, None] + list(CulturalAffiliation))
        photos = tuple(f"https://m.example/{i}/{j}.jpg" for j in range(rng.randint(0, 2)))
        features.append(SurveyFeature(
            id=f"{locus_id}-T{i:04d}",
            locus_id=locus_id,
            locus_name=rng.choice(names),
            tomb_type=rng.choice(list(TombType)),
            context=rng.choice(list(SiteContext)),
            location=GeoPoint(lat=rng.uniform(35.9, 36.5), lon=rng.uniform(31.9, 32.7)),
            elevation_m=rng.uniform(0, 2000),
            has_inscription=rng.random() < 0.5,
            photo_urls=photos,
            affiliation=override,
        ))
    return features


def random_filterset(rng: random.Random) -> FilterSet:
    """A random FilterSet drawing each facet independently."""
    kwargs = {}
    if rng.random() < 0.5:
        kwargs["tomb_type"] = frozenset(rng.sample(list(TombType), rng.randint(1, 3)))
    if rng.random() < 0.4:
        kwargs["context"] = frozenset(rng.sample(list(SiteContext), rng.randint(1, 2)))
    if rng.random() < 0.4:
        kwargs["affiliation"] = frozenset(
            rng.sample(list(CulturalAffiliation), rng.randint(1, 2)))
    if rng.random() < 0.3:
        kwargs["has_inscription"] = rng.random() < 0.5
    if rng.random() < 0.3:
        kwargs["locus_id"] = frozenset(
            f"RC{rng.randint(1, 40):04d}" for _ in range(rng.randint(1, 3)))
    if rng.random() < 0.3:
        lon0 = rng.uniform(31.9, 32.6)
        lat0 = rng.uniform(35.9, 36.4)
        kwargs["bbox"] = (lon0, lat0, lon0 + rng.uniform(0.01, 0.5),
                          lat0 + rng.uniform(0.01, 0.4))
    if rng.random() < 0.2:
        kwargs["text"] = rng.choice(["a", "ke", "Corus", "ridge", "zzz", "O"])
    return FilterSet(**kwargs)


def oracle_matches(feature: SurveyFeature, filters: FilterSet) -> bool:
    """Independent linear-scan predicate (kept free of FacetIndex code)."""
    if filters.tomb_type is not None and feature.tomb_type not in filters.tomb_type:
        return False
    if filters.context is not None and feature.context not in filters.context:
        return False
    if filters.affiliation is not None and classify(feature) not in filters.affiliation:
        return False
    if filters.has_inscription is not None and feature.has_inscription != filters.has_inscription:
        return False
    if filters.locus_id is not None and feature.locus_id not in filters.locus_id:
        return False
    if filters.bbox is not None:
        min_lon, min_lat, max_lon, max_lat = filters.bbox
        if not (min_lon <= feature.location.lon <= max_lon
                and min_lat <= feature.location.lat <= max_lat):
            return False
    if filters.text is not None and filters.text.lower() not in feature.locus_name.lower():
        return False
    return True


@pytest.fixture(scope="session")
def fixture_features():
    return make_fixture_features()


@pytest.fixture(scope="session")
def fixture_csv(fixture_features):
    return features_to_csv(fixture_features)


@pytest.fixture(scope="session")
def fixture_gazetteer_csv():
    return make_fixture_gazetteer_csv()


@pytest.fixture(scope="session")
def random_corpus():
    return make_random_corpus()


@pytest.fixture()
def workspace(tmp_path, fixture_csv, fixture_gazetteer_csv):
    """A fully ingested workspace in a temp dir (no zones)."""
    from surveypub.cli import main
    features_file = tmp_path / "features.csv"
    gazetteer_file = tmp_path / "gazetteer.csv"
    features_file.write_text(fixture_csv, encoding="utf-8")
    gazetteer_file.write_text(fixture_gazetteer_csv, encoding="utf-8")
    ws = tmp_path / "ws"
    rc = main(["ingest", str(features_file), str(gazetteer_file),
               "--workspace", str(ws),
               "--base-uri", "https://data.example.org/rc",
               "--build-time", "2012-04-01T00:00:00+00:00"])
    assert rc == 0
    return ws
