import pytest

from surveypub.errors import ExportError
from surveypub.facets import FilterSet, filterset_to_query
from surveypub.model import CulturalAffiliation, TombType
from surveypub.narrative import (Figure, Heading, MasterMap, MiniMap, Paragraph,
                                 embed_directive, parse_narrative)

SOURCE = """article_id: tombs-overview
title: Funerary Monuments of the Survey Zone
authors: A. Fieldworker; B. Cartographer
canonical_url: https://journal.example.org/articles/tombs-overview

# Coastal monuments

The monumental families cluster along the shore,
within sight of the harbors.

![A temple tomb](images/tomb.jpg)

```minimap affiliation=Polis
Coastal features.
```

## Midland forms

```mastermap
```
"""


class TestParse:
    def test_header_fields(self):
        doc = parse_narrative(SOURCE)
        assert doc.article_id == "tombs-overview"
        assert doc.title == "Funerary Monuments of the Survey Zone"
        assert doc.authors == ("A. Fieldworker", "B. Cartographer")
        assert doc.canonical_url == "https://journal.example.org/articles/tombs-overview"

    def test_block_sequence(self):
        doc = parse_narrative(SOURCE)
        kinds = [type(b).__name__ for b in doc.body]
        assert kinds == ["Heading", "Paragraph", "Figure", "MiniMap", "Heading", "MasterMap"]

    def test_paragraph_lines_joined(self):
        doc = parse_narrative(SOURCE)
        para = doc.body[1]
        assert isinstance(para, Paragraph)
        assert para.text == ("The monumental families cluster along the shore, "
                             "within sight of the harbors.")

    def test_heading_levels(self):
        doc = parse_narrative(SOURCE)
        assert doc.body[0] == Heading(level=1, text="Coastal monuments")
        assert doc.body[4] == Heading(level=2, text="Midland forms")

    def test_figure(self):
        doc = parse_narrative(SOURCE)
        assert doc.body[2] == Figure(image_ref="images/tomb.jpg", caption="A temple tomb")

    def test_minimap_carries_filterset_and_caption(self):
        doc = parse_narrative(SOURCE)
        block = doc.body[3]
        assert isinstance(block, MiniMap)
        assert block.filters == FilterSet(affiliation=frozenset({CulturalAffiliation.Polis}))
        assert block.caption == "Coastal features."

    def test_mastermap_empty_query(self):
        doc = parse_narrative(SOURCE)
        assert doc.body[5] == MasterMap(filters=FilterSet())

    def test_missing_title_is_error(self):
        with pytest.raises(ExportError, match="title"):
            parse_narrative("article_id: x\n\nBody.\n")

    def test_two_mastermaps_rejected(self):
        bad = SOURCE + "\n```mastermap\n```\n"
        with pytest.raises(ExportError, match="mastermap"):
            parse_narrative(bad)

    def test_unterminated_directive(self):
        with pytest.raises(ExportError, match="unterminated"):
            parse_narrative("article_id: x\ntitle: t\n\n```minimap\ncaption")

    def test_bad_directive_query_propagates(self):
        from surveypub.errors import QueryError
        with pytest.raises(QueryError):
            parse_narrative("article_id: x\ntitle: t\n\n```minimap tomb_type=Dolmen\n```\n")


class TestDirectiveRoundTrip:
    def test_directive_text_reparses_to_same_filterset(self):
        fs = FilterSet(tomb_type=frozenset({TombType.RockCut, TombType.LycianHouse}),
                       has_inscription=True)
        directive = embed_directive(fs, caption="Rock-cut tombs.")
        doc = parse_narrative(f"article_id: x\ntitle: t\n\n{directive}\n")
        block = doc.body[0]
        assert isinstance(block, MiniMap)
        assert block.filters == fs
        assert block.caption == "Rock-cut tombs."

    def test_empty_filter_directive_is_master_semantics(self):
        directive = embed_directive(FilterSet(), master=True)
        assert directive.splitlines()[0] == "```mastermap"
        doc = parse_narrative(f"article_id: x\ntitle: t\n\n{directive}\n")
        assert doc.body[0] == MasterMap(filters=FilterSet())

    def test_directive_contains_query_string(self):
        fs = FilterSet(affiliation=frozenset({CulturalAffiliation.Polis}))
        assert "affiliation=Polis" in embed_directive(fs)
        assert embed_directive(fs).startswith("```minimap ")
        assert filterset_to_query(fs) in embed_directive(fs)
