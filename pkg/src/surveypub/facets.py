"""In-memory faceted index over survey features.

A feature matches a FilterSet iff it satisfies every present facet
(conjunction across facets); within one set-valued facet, membership is
disjunctive. Result order is ascending id, which keeps feeds reproducible.
Facet counts are drill-down counts: computed over the filtered match set.

The same query-string grammar the HTTP service speaks is implemented here
(`filterset_to_query` / `parse_query`) so narrative embed directives and
the service stay in lockstep.
"""

from dataclasses import dataclass, fields
from urllib.parse import parse_qsl, quote

from .errors import FacetBuildError, QueryError
from .model import CulturalAffiliation, SiteContext, SurveyFeature, TombType, classify
from .numfmt import fnum

MAX_PER_PAGE = 500

FACET_NAMES = ("tomb_type", "context", "affiliation", "has_inscription",
               "locus_id", "has_photos")

_ENUM_FACETS = {
    "tomb_type": TombType,
    "context": SiteContext,
    "affiliation": CulturalAffiliation,
}


@dataclass(frozen=True)
class FilterSet:
    """A conjunctive query over the facet dimensions. None = unconstrained."""

    tomb_type: frozenset | None = None
    context: frozenset | None = None
    affiliation: frozenset | None = None
    has_inscription: bool | None = None
    locus_id: frozenset | None = None
    bbox: tuple | None = None       # (min_lon, min_lat, max_lon, max_lat)
    text: str | None = None         # case-insensitive substring of locus_name

    def __post_init__(self):
        if self.bbox is not None:
            if len(self.bbox) != 4:
                raise QueryError("bbox needs exactly 4 numbers", param="bbox")
            min_lon, min_lat, max_lon, max_lat = self.bbox
            if min_lon > max_lon or min_lat > max_lat:
                raise QueryError("bbox is not well-ordered (min > max)", param="bbox")

    def is_empty(self) -> bool:
        return all(getattr(self, f.name) is None for f in fields(self))


@dataclass(frozen=True)
class ResultPage:
    matches: tuple          # feature ids, ascending
    total: int
    page: int
    per_page: int
    facet_counts: dict      # facet -> value -> count over the full match set


class FacetIndex:
    """Immutable index over a snapshot of features. Build once, share freely."""

    def __init__(self, features):
        ordered = sorted(features, key=lambda f: f.id)
        seen = set()
        for f in ordered:
            if f.id in seen:
                raise FacetBuildError(f"duplicate feature id: {f.id}")
            seen.add(f.id)
        self._features = tuple(ordered)
        self._by_id = {f.id: f for f in ordered}
        self._derived = tuple(classify(f) for f in ordered)

        postings = {name: {} for name in FACET_NAMES}
        for i, f in enumerate(ordered):
            postings["tomb_type"].setdefault(f.tomb_type, set()).add(i)
            postings["context"].setdefault(f.context, set()).add(i)
            postings["affiliation"].setdefault(self._derived[i], set()).add(i)
            postings["has_inscription"].setdefault(f.has_inscription, set()).add(i)
            postings["locus_id"].setdefault(f.locus_id, set()).add(i)
            postings["has_photos"].setdefault(bool(f.photo_urls), set()).add(i)
        self._postings = postings

    def __len__(self):
        return len(self._features)

    @property
    def features(self):
        return self._features

    def get(self, feature_id: str) -> SurveyFeature | None:
        return self._by_id.get(feature_id)

    def derived_affiliation(self, feature_id: str) -> CulturalAffiliation:
        return classify(self._by_id[feature_id])

    def _facet_allowed(self, name, values):
        allowed = set()
        posting = self._postings[name]
        for v in values:
            allowed |= posting.get(v, set())
        return allowed

    def _match_positions(self, filters: FilterSet):
        candidates = set(range(len(self._features)))
        if filters.tomb_type is not None:
            candidates &= self._facet_allowed("tomb_type", filters.tomb_type)
        if filters.context is not None:
            candidates &= self._facet_allowed("context", filters.context)
        if filters.affiliation is not None:
            candidates &= self._facet_allowed("affiliation", filters.affiliation)
        if filters.has_inscription is not None:
            candidates &= self._facet_allowed("has_inscription", (filters.has_inscription,))
        if filters.locus_id is not None:
            candidates &= self._facet_allowed("locus_id", filters.locus_id)
        if filters.bbox is not None:
            min_lon, min_lat, max_lon, max_lat = filters.bbox
            candidates = {
                i for i in candidates
                if min_lon <= self._features[i].location.lon <= max_lon
                and min_lat <= self._features[i].location.lat <= max_lat
            }
        if filters.text is not None:
            needle = filters.text.lower()
            candidates = {i for i in candidates
                          if needle in self._features[i].locus_name.lower()}
        return sorted(candidates)

    def match_ids(self, filters: FilterSet):
        """All matching ids, ascending, without pagination. In-process use
        (embed resolution, tests); the HTTP surface always paginates."""
        return [self._features[i].id for i in self._match_positions(filters)]


def build_index(features) -> FacetIndex:
    return FacetIndex(features)


def _facet_value_key(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if hasattr(value, "value"):
        return value.value
    return str(value)


def _facet_counts(index: FacetIndex, positions) -> dict:
    counts = {name: {} for name in FACET_NAMES}
    for i in positions:
        f = index._features[i]
        counts["tomb_type"][f.tomb_type.value] = counts["tomb_type"].get(f.tomb_type.value, 0) + 1
        counts["context"][f.context.value] = counts["context"].get(f.context.value, 0) + 1
        aff = index._derived[i].value
        counts["affiliation"][aff] = counts["affiliation"].get(aff, 0) + 1
        ins = _facet_value_key(f.has_inscription)
        counts["has_inscription"][ins] = counts["has_inscription"].get(ins, 0) + 1
        counts["locus_id"][f.locus_id] = counts["locus_id"].get(f.locus_id, 0) + 1
        ph = _facet_value_key(bool(f.photo_urls))
        counts["has_photos"][ph] = counts["has_photos"].get(ph, 0) + 1
    return {name: dict(sorted(vals.items())) for name, vals in counts.items()}


def query(index: FacetIndex, filters: FilterSet, page: int = 1,
          per_page: int = 50) -> ResultPage:
    """Run a filter query and return one page plus full-match facet counts."""
    if page < 1:
        raise QueryError("page must be >= 1", param="page")
    if not 1 <= per_page <= MAX_PER_PAGE:
        raise QueryError(f"per_page must be in 1..{MAX_PER_PAGE}", param="per_page")

    positions = index._match_positions(filters)
    start = (page - 1) * per_page
    window = positions[start:start + per_page]
    return ResultPage(
        matches=tuple(index._features[i].id for i in window),
        total=len(positions),
        page=page,
        per_page=per_page,
        facet_counts=_facet_counts(index, positions),
    )


def query_all(index: FacetIndex, filters: FilterSet) -> ResultPage:
    """The full, unpaginated result for in-process consumers (embed
    resolution); per_page reflects the match count, not the HTTP cap."""
    positions = index._match_positions(filters)
    return ResultPage(
        matches=tuple(index._features[i].id for i in positions),
        total=len(positions),
        page=1,
        per_page=max(1, len(positions)),
        facet_counts=_facet_counts(index, positions),
    )


# --- query-string grammar ---------------------------------------------------
#
# Facet params carry comma-separated value lists (tomb_type=RockCut,LycianHouse),
# bbox is min_lon,min_lat,max_lon,max_lat, paging via page/per_page.

_FILTER_PARAM_ORDER = ("tomb_type", "context", "affiliation", "has_inscription",
                       "locus_id", "bbox", "text")


def filterset_to_query(filters: FilterSet) -> str:
    """Serialize a FilterSet to the shared query-string grammar."""
    parts = []
    for name in _FILTER_PARAM_ORDER:
        value = getattr(filters, name)
        if value is None:
            continue
        if name in _ENUM_FACETS:
            encoded = ",".join(sorted(v.value for v in value))
        elif name == "has_inscription":
            encoded = "true" if value else "false"
        elif name == "locus_id":
            encoded = ",".join(sorted(value))
        elif name == "bbox":
            encoded = ",".join(fnum(v) for v in value)
        else:   # text
            encoded = value
        if encoded == "" and name != "text":
            continue
        parts.append(f"{name}={quote(encoded, safe=',')}")
    return "&".join(parts)


def _split_values(raw: str):
    return [v for v in raw.split(",") if v != ""]


def parse_query(query_string: str):
    """Parse a query string into (FilterSet, page, per_page).

    Unknown parameters, unknown facet values, and bad paging raise
    QueryError naming the offending parameter.
    """
    page, per_page = 1, 50
    collected = {}
    pairs = parse_qsl(query_string, keep_blank_values=True)
    seen = set()
    for key, raw in pairs:
        if key in seen:
            raise QueryError(f"duplicate parameter: {key}", param=key)
        seen.add(key)
        if key == "page":
            try:
                page = int(raw)
            except ValueError:
                raise QueryError("page must be an integer", param="page")
            if page < 1:
                raise QueryError("page must be >= 1", param="page")
        elif key == "per_page":
            try:
                per_page = int(raw)
            except ValueError:
                raise QueryError("per_page must be an integer", param="per_page")
            if not 1 <= per_page <= MAX_PER_PAGE:
                raise QueryError(f"per_page must be in 1..{MAX_PER_PAGE}", param="per_page")
        elif key in _ENUM_FACETS:
            enum_cls = _ENUM_FACETS[key]
            values = set()
            for name in _split_values(raw):
                try:
                    values.add(enum_cls(name))
                except ValueError:
                    raise QueryError(f"unknown {key} value: {name!r}", param=key)
            if values:
                collected[key] = frozenset(values)
        elif key == "has_inscription":
            lowered = raw.strip().lower()
            if lowered not in ("true", "false"):
                raise QueryError("has_inscription must be true or false",
                                 param="has_inscription")
            collected[key] = lowered == "true"
        elif key == "locus_id":
            values = frozenset(_split_values(raw))
            if values:
                collected[key] = values
        elif key == "bbox":
            numbers = raw.split(",")
            if len(numbers) != 4:
                raise QueryError("bbox needs exactly 4 numbers", param="bbox")
            try:
                collected[key] = tuple(float(n) for n in numbers)
            except ValueError:
                raise QueryError("bbox values must be numbers", param="bbox")
        elif key == "text":
            collected[key] = raw
        else:
            raise QueryError(f"unknown parameter: {key}", param=key)
    filters = FilterSet(**collected)
    return filters, page, per_page
