"""Faceted search over a feature corpus: filters, counts, query strings.

Shows the drill-down behavior the instrument panel relies on: every query
returns facet counts computed over the filtered match set, and any filter
state round-trips through the query-string grammar used in URLs and in
narrative embed directives.
"""

import random

from surveypub.facets import (FilterSet, build_index, filterset_to_query,
                              parse_query, query)
from surveypub.model import GeoPoint, SiteContext, SurveyFeature, TombType

rng = random.Random(7)
features = []
for i in range(300):
    locus = rng.randint(1, 12)
    features.append(SurveyFeature(
        id=f"RC{locus:04d}-T{i:03d}",
        locus_id=f"RC{locus:04d}",
        locus_name=f"Locus {locus}",
        tomb_type=rng.choice(list(TombType)),
        context=rng.choice(list(SiteContext)),
        location=GeoPoint(rng.uniform(36.0, 36.4), rng.uniform(32.0, 32.6)),
        elevation_m=rng.uniform(0, 1200),
        has_inscription=rng.random() < 0.3,
    ))

index = build_index(features)

# An unconstrained query: facet counts sum to the corpus size per facet.
page = query(index, FilterSet(), per_page=10)
print(f"corpus: {page.total} features")
print("tomb_type counts:", page.facet_counts["tomb_type"])

# Drill down: conjunction across facets, disjunction within one facet.
filters = FilterSet(
    tomb_type=frozenset({TombType.RockCut, TombType.LycianHouse}),
    context=frozenset({SiteContext.IsolatedNecropolis}),
)
page = query(index, filters, per_page=10)
print(f"\nrock-cut or house tombs in isolated necropoleis: {page.total}")
print("first page of ids:", list(page.matches))
print("affiliation counts within the match set:", page.facet_counts["affiliation"])

# The same filter as a URL query string (and back).
encoded = filterset_to_query(filters)
print("\nas a query string:", encoded)
decoded, page_num, per_page = parse_query(encoded)
assert decoded == filters
print("round-trips to the identical FilterSet:", decoded == filters)

# A bounding-box and substring query, as the map panel would issue.
box = FilterSet(bbox=(32.1, 36.1, 32.3, 36.3), text="locus 1")
print("\nbbox+text query string:", filterset_to_query(box))
print("matches:", query(index, box).total)
