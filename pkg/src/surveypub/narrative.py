"""Plain-text article source format for the export pipeline.

A document is a header of `key: value` lines followed by blank-line
separated blocks:

    article_id: rc-funerary
    title: Funerary Monuments of the Survey Zone
    authors: A. Author; B. Author
    canonical_url: https://example.org/articles/rc-funerary

    # Coastal monuments

    A paragraph. Consecutive lines belong
    to the same paragraph.

    ![A temple tomb near the shore](images/tomb.jpg)

    ```minimap tomb_type=TempleTomb&context=Urban
    Temple tombs in urban contexts.
    ```

    ```mastermap
    ```

Map directives carry the same query-string grammar the HTTP service
speaks, so a query built interactively can be pasted here verbatim.
"""

from dataclasses import dataclass

from .errors import ExportError
from .facets import FilterSet, filterset_to_query, parse_query


@dataclass(frozen=True)
class Paragraph:
    text: str


@dataclass(frozen=True)
class Heading:
    level: int
    text: str


@dataclass(frozen=True)
class Figure:
    image_ref: str
    caption: str


@dataclass(frozen=True)
class MiniMap:
    filters: FilterSet
    caption: str


@dataclass(frozen=True)
class MasterMap:
    filters: FilterSet


@dataclass(frozen=True)
class NarrativeDoc:
    article_id: str
    title: str
    authors: tuple
    body: tuple
    canonical_url: str | None = None

    def __post_init__(self):
        masters = sum(1 for b in self.body if isinstance(b, MasterMap))
        if masters > 1:
            raise ExportError("a document may carry at most one mastermap block")

    def map_blocks(self):
        return [b for b in self.body if isinstance(b, (MiniMap, MasterMap))]


def embed_directive(filters: FilterSet, caption: str = "", master: bool = False) -> str:
    """The fenced directive text for a map block carrying `filters`."""
    kind = "mastermap" if master else "minimap"
    query = filterset_to_query(filters)
    head = f"```{kind} {query}".rstrip()
    lines = [head]
    if caption and not master:
        lines.append(caption)
    lines.append("```")
    return "\n".join(lines)


def _parse_header(lines):
    header = {}
    for i, line in enumerate(lines):
        if not line.strip():
            return header, i + 1
        if ":" not in line:
            raise ExportError(f"header line {i + 1} is not 'key: value': {line!r}")
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
    return header, len(lines)


def parse_narrative(text: str) -> NarrativeDoc:
    lines = text.splitlines()
    header, start = _parse_header(lines)
    for required in ("article_id", "title"):
        if not header.get(required):
            raise ExportError(f"missing required header field: {required}")
    authors = tuple(a.strip() for a in header.get("authors", "").split(";") if a.strip())

    body = []
    i = start
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        if line.startswith("```"):
            directive = line[3:].strip()
            kind, _, query = directive.partition(" ")
            if kind not in ("minimap", "mastermap"):
                raise ExportError(f"line {i + 1}: unknown directive {kind!r}")
            caption_lines = []
            i += 1
            while i < len(lines) and not lines[i].startswith("```"):
                caption_lines.append(lines[i])
                i += 1
            if i >= len(lines):
                raise ExportError(f"unterminated {kind} directive")
            i += 1
            filters, _page, _per = parse_query(query.strip())
            if kind == "minimap":
                body.append(MiniMap(filters=filters, caption=" ".join(caption_lines).strip()))
            else:
                body.append(MasterMap(filters=filters))
        elif line.startswith("#"):
            level = len(line) - len(line.lstrip("#"))
            body.append(Heading(level=min(level, 6), text=line[level:].strip()))
            i += 1
        elif line.startswith("![") and "](" in line and line.rstrip().endswith(")"):
            caption, _, rest = line[2:].rstrip().partition("](")
            body.append(Figure(image_ref=rest[:-1], caption=caption))
            i += 1
        else:
            para = []
            while i < len(lines) and lines[i].strip() and not lines[i].startswith(("#", "```", "![")):
                para.append(lines[i].strip())
                i += 1
            body.append(Paragraph(text=" ".join(para)))
    return NarrativeDoc(
        article_id=header["article_id"],
        title=header["title"],
        authors=authors,
        body=tuple(body),
        canonical_url=header.get("canonical_url") or None,
    )
