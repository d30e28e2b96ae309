"""The whole publishing loop in one script: ingest -> zones -> serve -> export.

Everything runs against a throwaway workspace directory; the HTTP service
is started on a free port, queried like a third-party consumer would, and
an article with embedded map directives is exported to print form whose
header QR decodes back to the article URL.
"""

import pathlib
import random
import tempfile
import threading
import urllib.request

from surveypub.cli import main
from surveypub.ingest import features_to_csv
from surveypub.model import GeoPoint, SiteContext, SurveyFeature, TombType
from surveypub.qr import decode_qr, matrix_from_png
from surveypub.server import make_server

tmp = pathlib.Path(tempfile.mkdtemp(prefix="surveypub-demo-"))
print("workspace parent:", tmp)

# ---------------------------------------------------------------------------
# 1. Synthesize input files: a feature CSV and a gazetteer snapshot.
# ---------------------------------------------------------------------------
rng = random.Random(3)
band_types = [(TombType.Grabhaus, 36.03, 36.08), (TombType.RockCut, 36.12, 36.17),
              (TombType.Pedestal, 36.21, 36.26)]
features = []
for b, (tomb_type, lat_lo, lat_hi) in enumerate(band_types):
    for k in range(30):
        features.append(SurveyFeature(
            id=f"RC{b + 1:04d}-T{k:03d}", locus_id=f"RC{b + 1:04d}",
            locus_name=["Selinara", "Kenetepe", "Tol Kale"][b],
            tomb_type=tomb_type, context=SiteContext.Village,
            location=GeoPoint(rng.uniform(lat_lo, lat_hi), rng.uniform(32.05, 32.45)),
            elevation_m=b * 350.0, has_inscription=rng.random() < 0.3))
(tmp / "features.csv").write_text(features_to_csv(features))
(tmp / "gazetteer.csv").write_text(
    "uri,preferred_name,aliases,lat,lon\n"
    "https://places.example/1,Selinara,,36.05,32.2\n"
    "https://places.example/2,Kenetepe,Kenet Tepe,36.15,32.2\n"
    "https://places.example/3,Tol Kale,,36.23,32.2\n")
(tmp / "barrier.geojson").write_text(
    '{"type":"Polygon","coordinates":[[[32.01,36.01],[32.49,36.01],'
    '[32.49,36.29],[32.01,36.29],[32.01,36.01]]]}')

# ---------------------------------------------------------------------------
# 2. Ingest + zones via the CLI (exit code 0 = clean).
# ---------------------------------------------------------------------------
ws = tmp / "ws"
assert main(["ingest", str(tmp / "features.csv"), str(tmp / "gazetteer.csv"),
             "--workspace", str(ws), "--base-uri", "https://data.example.org/demo",
             "--build-time", "2012-04-01T00:00:00+00:00"]) == 0
assert main(["zones", "--workspace", str(ws), "--barrier", str(tmp / "barrier.geojson"),
             "--bandwidth-m", "2000", "--cell-m", "250"]) == 0

# ---------------------------------------------------------------------------
# 3. Serve, and talk to the service like any feed consumer.
# ---------------------------------------------------------------------------
httpd = make_server(ws, port=0)
threading.Thread(target=httpd.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{httpd.server_address[1]}"


def get(path):
    with urllib.request.urlopen(base + path) as response:
        return response.read()


print("\nmanifest:", get("/api/manifest").decode()[:120], "...")
print("search rock-cut:", get("/api/search?tomb_type=RockCut").decode()[:80], "...")
print("geojson feed bytes:", len(get("/feeds/geojson?per_page=500")))
print("zone metadata:", get("/api/zones").decode()[:100], "...")

# ---------------------------------------------------------------------------
# 4. Author an article with map directives; export a print-ready tree.
# ---------------------------------------------------------------------------
(tmp / "article.txt").write_text("""article_id: pipeline-demo
title: From Field Notes to Print
canonical_url: https://journal.example.org/articles/pipeline-demo

The midland band is dominated by rock-cut forms.

```minimap tomb_type=RockCut
Rock-cut tombs.
```

```mastermap
```
""")
assert main(["export", "--workspace", str(ws), "--article", str(tmp / "article.txt"),
             "--format", "print", "--build-time", "2012-04-01T00:00:00+00:00"]) == 0
print_dir = ws / "exports" / "pipeline-demo" / "print"
header = (print_dir / "qr" / "header.png").read_bytes()
print("\nprint tree:", sorted(p.name for p in print_dir.rglob("*") if p.is_file()))
print("header QR decodes to:", decode_qr(matrix_from_png(header)))

# The service also mints codes for records and (after export) articles.
code = get("/codes/RC0002-T000.png")
print("record code decodes to:", decode_qr(matrix_from_png(code)))

httpd.shutdown()
httpd.server_close()
print("\ndone; workspace kept at", ws)
