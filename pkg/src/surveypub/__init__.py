"""surveypub: loosely-coupled publishing toolkit for georeferenced survey data.

Submodules:
  model    - domain types and the affiliation classification rule
  ingest   - CSV parsing, validation, gazetteer reconciliation
  facets   - faceted index, filter queries, query-string grammar
  feeds    - Atom / KML / GeoJSON serializers
  zones    - diffusion interpolation with barriers, zone rasters
  qr       - QR 2D codes (encode, decode, render)
  narrative- article source format for the export pipeline
  export   - HTML / print / epub artifact assembly
  server   - read-only HTTP service over a dataset snapshot
  cli      - operator entry points
"""

__version__ = "0.1.0"

SCHEMA_VERSION = "1.0"
