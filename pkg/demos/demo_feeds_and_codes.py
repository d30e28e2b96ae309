"""Feeds and print codes: the open interchange surfaces.

One result page is serialized three ways (GeoJSON, KML, Atom), each with
its own axis-order convention, and a QR code bridges a printed page back
to a record's persistent URI - including recovery from print damage.
"""

import dataclasses
import json
import pathlib
import random
import xml.etree.ElementTree as ET
from datetime import datetime, timezone

from surveypub.facets import FilterSet, build_index, query
from surveypub.feeds import to_atom, to_geojson, to_kml
from surveypub.model import (DatasetManifest, GeoPoint, SiteContext,
                             SurveyFeature, TombType, persistent_uri)
from surveypub.qr import (block_structure, codeword_module_positions, decode_qr,
                          encode_qr, interleaved_block_of, render_qr_png)

OUT = pathlib.Path(__file__).parent / "demo-output"
OUT.mkdir(exist_ok=True)

manifest = DatasetManifest(
    dataset_id="demo", title="Feed demo", license_uri="https://example.org/license",
    schema_version="1.0", record_count=1, base_uri="https://data.example.org/demo")

# One feature at an asymmetric point, so lat/lon order mistakes would show.
feature = SurveyFeature(
    id="RC0304-T001", locus_id="RC0304", locus_name="Kenetepe",
    tomb_type=TombType.RockCut, context=SiteContext.IsolatedNecropolis,
    location=GeoPoint(lat=36.30, lon=32.35), elevation_m=410.0,
    has_inscription=True)

index = build_index([feature])
page = query(index, FilterSet())

geojson = to_geojson(page, manifest, index)
coords = json.loads(geojson.body)["features"][0]["geometry"]["coordinates"]
print("GeoJSON coordinates (lon first):", coords)

kml = to_kml(page, manifest, index)
kml_ns = "{http://www.opengis.net/kml/2.2}"
root = ET.fromstring(kml.body)
print("KML coordinates (lon,lat,elev):",
      root.find(f".//{kml_ns}Point/{kml_ns}coordinates").text)

atom = to_atom(page, manifest, index, "https://data.example.org/demo/feeds/atom",
               updated=datetime(2012, 4, 1, tzinfo=timezone.utc))
atom_ns = "{http://www.w3.org/2005/Atom}"
georss_ns = "{http://www.georss.org/georss}"
entry = ET.fromstring(atom.body).find(f"{atom_ns}entry")
print("georss:point (lat first):  ", entry.find(f"{georss_ns}point").text)

# ---------------------------------------------------------------------------
# The print bridge: a record's persistent URI as a QR code.
# ---------------------------------------------------------------------------
uri = persistent_uri(manifest, feature)
matrix = encode_qr(uri, "M")
print(f"\nQR for {uri}")
print(f"  version {matrix.version} ({matrix.side}x{matrix.side} modules), "
      f"mask {matrix.mask_id}")
(OUT / "record-code.png").write_bytes(render_qr_png(matrix, module_px=6))
print(f"  wrote {OUT / 'record-code.png'}")
print("  decodes to:", decode_qr(matrix))

# Smudge the printed code: corrupt whole codewords up to the Reed-Solomon
# capacity of level M and decode anyway.
rng = random.Random(5)
positions = codeword_module_positions(matrix.version)
owners = interleaved_block_of(matrix.version, "M")
caps = [e // 2 for _, e in block_structure(matrix.version, "M")]
budget, grid = {}, [list(row) for row in matrix.modules]
damaged = 0
for i in rng.sample(range(len(positions)), len(positions)):
    block = owners[i]
    if budget.get(block, 0) < caps[block]:
        budget[block] = budget.get(block, 0) + 1
        damaged += 1
        for r, c in positions[i]:
            grid[r][c] = not grid[r][c]
smudged = dataclasses.replace(matrix, modules=tuple(tuple(r) for r in grid))
print(f"  after corrupting {damaged} codewords:", decode_qr(smudged))
