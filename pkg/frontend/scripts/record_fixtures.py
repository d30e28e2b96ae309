"""Record panel fixtures from a live instance of the data service.

Builds the standard synthetic workspace (231 features at 26 loci), starts
the service on a free port, replays the request set the panel suite
exercises, and writes:

    fixtures/recorded.json   {"<METHOD> <path?query>": {"status": ..., "body": ...}}
    fixtures/workspace/      the ingested workspace (reused by the
                             cross-boundary test, which runs the real CLI)

Run from frontend/:  python3 scripts/record_fixtures.py
"""

import base64
import json
import pathlib
import shutil
import sys
import threading
import urllib.request

HERE = pathlib.Path(__file__).resolve().parent
REPO = HERE.parent.parent
sys.path.insert(0, str(REPO / "tests"))

from conftest import (barrier_geojson, make_fixture_features,      # noqa: E402
                      make_fixture_gazetteer_csv)
from surveypub.cli import main as cli_main                         # noqa: E402
from surveypub.ingest import features_to_csv                       # noqa: E402
from surveypub.server import make_server                           # noqa: E402

# The exact request set the panel tests replay. Keep query strings in the
# panel's canonical parameter order (filters, then page/per_page).
REQUESTS = [
    "/api/manifest",
    "/api/search?page=1&per_page=50",
    "/api/search?tomb_type=RockCut&page=1&per_page=50",
    "/api/search?affiliation=Polis&page=1&per_page=50",
    "/api/search?tomb_type=LycianHouse,RockCut&context=IsolatedNecropolis&page=1&per_page=50",
    "/api/search?bbox=32.2,36.02,32.45,36.2&page=1&per_page=50",
    "/api/search?affiliation=Polis&bbox=32.2,36.02,32.45,36.2&page=1&per_page=50",
    "/feeds/geojson?per_page=500",
    "/feeds/geojson?tomb_type=RockCut&per_page=500",
    "/feeds/geojson?affiliation=Polis&per_page=500",
    "/feeds/geojson?tomb_type=LycianHouse,RockCut&context=IsolatedNecropolis&per_page=500",
    "/feeds/geojson?bbox=32.2,36.02,32.45,36.2&per_page=500",
    "/feeds/geojson?affiliation=Polis&bbox=32.2,36.02,32.45,36.2&per_page=500",
    "/api/records/RC0304-T001",
    "/api/records/RC0101-T001",
    "/api/records/RC0101-T002",
    "/api/records/RC9999-T999",       # recorded 404: the stale-record path
    "/api/zones",
    "/api/zones.png",
]


def main():
    fixtures_dir = HERE.parent / "fixtures"
    workspace = fixtures_dir / "workspace"
    if workspace.exists():
        shutil.rmtree(workspace)
    fixtures_dir.mkdir(exist_ok=True)

    staging = fixtures_dir / "_staging"
    staging.mkdir(exist_ok=True)
    (staging / "features.csv").write_text(features_to_csv(make_fixture_features()))
    (staging / "gazetteer.csv").write_text(make_fixture_gazetteer_csv())
    (staging / "barrier.geojson").write_text(barrier_geojson())

    rc = cli_main(["ingest", str(staging / "features.csv"), str(staging / "gazetteer.csv"),
                   "--workspace", str(workspace),
                   "--base-uri", "https://data.example.org/rc",
                   "--build-time", "2012-04-01T00:00:00+00:00"])
    assert rc == 0, "ingest failed"
    rc = cli_main(["zones", "--workspace", str(workspace),
                   "--barrier", str(staging / "barrier.geojson"),
                   "--cell-m", "500", "--alpha", "0.2", "--steps", "40"])
    assert rc == 0, "zones failed"
    shutil.rmtree(staging)

    httpd = make_server(workspace, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"

    recorded = {}
    for path in REQUESTS:
        try:
            with urllib.request.urlopen(base + path) as response:
                raw = response.read()
                status = response.status
                content_type = response.headers.get("Content-Type", "")
        except urllib.error.HTTPError as err:
            raw = err.read()
            status = err.code
            content_type = err.headers.get("Content-Type", "")
        if content_type.startswith("image/"):
            body = {"base64": base64.b64encode(raw).decode("ascii")}
        else:
            body = json.loads(raw)
        recorded[f"GET {path}"] = {"status": status, "body": body}

    httpd.shutdown()
    httpd.server_close()

    out = fixtures_dir / "recorded.json"
    out.write_text(json.dumps(recorded, indent=1, sort_keys=True) + "\n")
    print(f"recorded {len(recorded)} responses -> {out}")
    print(f"workspace kept at {workspace}")


if __name__ == "__main__":
    main()
