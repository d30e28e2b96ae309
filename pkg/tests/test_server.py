import json
import random
import threading
import xml.etree.ElementTree as ET

import pytest
import requests

from conftest import oracle_matches, random_filterset
from surveypub.cli import main
from surveypub.facets import filterset_to_query, query
from surveypub.model import classify, persistent_uri
from surveypub.qr import decode_qr, matrix_from_png
from surveypub.server import load_snapshot, make_server

ATOM = "{http://www.w3.org/2005/Atom}"
KML = "{http://www.opengis.net/kml/2.2}"


@pytest.fixture()
def service(workspace):
    httpd = make_server(workspace, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    session = requests.Session()
    yield base, session, workspace
    session.close()
    httpd.shutdown()
    httpd.server_close()


class TestSearch:
    def test_no_params_returns_corpus_size(self, service):
        base, s, _ = service
        body = s.get(f"{base}/api/search").json()
        assert body["total"] == 231

    def test_equivalence_with_in_process_query(self, service, fixture_features):
        base, s, ws = service
        url = f"{base}/api/search?tomb_type=RockCut,LycianHouse&context=IsolatedNecropolis"
        body = s.get(url).json()
        snapshot = load_snapshot(ws)
        from surveypub.facets import parse_query
        fs, page, per_page = parse_query("tomb_type=RockCut,LycianHouse&context=IsolatedNecropolis")
        expected = query(snapshot.index, fs, page, per_page)
        assert body["total"] == expected.total
        assert [m["id"] for m in body["matches"]] == list(expected.matches)
        assert body["facet_counts"] == expected.facet_counts

    def test_page_zero_names_param(self, service):
        base, s, _ = service
        response = s.get(f"{base}/api/search?bbox=32,36,33,37&page=0")
        assert response.status_code == 400
        assert response.json()["param"] == "page"

    def test_unknown_route_404(self, service):
        base, s, _ = service
        assert s.get(f"{base}/api/nonsense").status_code == 404

    def test_headers_on_success(self, service):
        base, s, _ = service
        response = s.get(f"{base}/api/search")
        assert response.headers["X-Schema-Version"] == "1.0"
        assert response.headers["X-Dataset-Build"]
        assert response.headers["Access-Control-Allow-Origin"] == "*"

    def test_summaries_carry_persistent_uri(self, service):
        base, s, _ = service
        body = s.get(f"{base}/api/search?per_page=1").json()
        record = body["matches"][0]
        assert record["uri"].startswith("https://data.example.org/rc/records/")


class TestRecord:
    def test_existing_record(self, service):
        base, s, _ = service
        body = s.get(f"{base}/api/records/RC0304-T001").json()
        assert body["id"] == "RC0304-T001"

    def test_unknown_404(self, service):
        base, s, _ = service
        assert s.get(f"{base}/api/records/RC9999-T999").status_code == 404

    def test_affiliation_matches_classify(self, service, fixture_features):
        base, s, _ = service
        by_id = {f.id: f for f in fixture_features}
        for fid in ("RC0304-T001", "RC0101-T001", "RC2607-T001"):
            body = s.get(f"{base}/api/records/{fid}").json()
            assert body["affiliation"] == classify(by_id[fid]).value

    def test_gazetteer_uri_present(self, service):
        base, s, _ = service
        body = s.get(f"{base}/api/records/RC0101-T001").json()
        assert body["gazetteer_uri"] and body["gazetteer_uri"].startswith("https://places.example/")


class TestFeeds:
    def test_geojson_count_matches_search_total(self, service):
        base, s, _ = service
        total = s.get(f"{base}/api/search?affiliation=Polis").json()["total"]
        feed = s.get(f"{base}/feeds/geojson?affiliation=Polis&per_page=500").json()
        assert len(feed["features"]) == total

    def test_kml_media_type(self, service):
        base, s, _ = service
        response = s.get(f"{base}/feeds/kml")
        assert response.headers["Content-Type"] == "application/vnd.google-earth.kml+xml"

    def test_atom_paging_links_on_middle_page(self, service):
        base, s, _ = service
        response = s.get(f"{base}/feeds/atom?per_page=10&page=2&has_inscription=true")
        root = ET.fromstring(response.content)
        rels = {link.get("rel") for link in root.findall(f"{ATOM}link")}
        assert {"next", "previous"} <= rels

    def test_bad_format_400(self, service):
        base, s, _ = service
        assert s.get(f"{base}/feeds/rss").status_code == 400

    def test_cross_endpoint_consistency_sample(self, service, fixture_features):
        base, s, _ = service
        rng = random.Random(2)
        for _ in range(15):
            fs = random_filterset(rng)
            qs = filterset_to_query(fs)
            sep = "&" if qs else ""
            expected = sum(1 for f in fixture_features if oracle_matches(f, fs))
            total = s.get(f"{base}/api/search?{qs}").json()["total"]
            geo = len(s.get(f"{base}/feeds/geojson?{qs}{sep}per_page=500").json()["features"])
            kml_root = ET.fromstring(s.get(f"{base}/feeds/kml?{qs}{sep}per_page=500").content)
            kml_count = len(kml_root.findall(f".//{KML}Placemark"))
            atom_root = ET.fromstring(s.get(f"{base}/feeds/atom?{qs}{sep}per_page=500").content)
            atom_count = len(atom_root.findall(f"{ATOM}entry"))
            assert total == geo == kml_count == atom_count == expected


class TestZonesEndpoints:
    def test_404_before_zones_computed(self, service):
        base, s, _ = service
        assert s.get(f"{base}/api/zones").status_code == 404
        assert s.get(f"{base}/api/zones.png").status_code == 404

    def test_zones_served_after_cli(self, service, tmp_path):
        base, s, ws = service
        from conftest import barrier_geojson
        barrier_file = tmp_path / "barrier.geojson"
        barrier_file.write_text(barrier_geojson())
        rc = main(["zones", "--workspace", str(ws), "--barrier", str(barrier_file),
                   "--cell-m", "500", "--alpha", "0.2", "--steps", "40"])
        assert rc == 0
        assert s.post(f"{base}/admin/reload").status_code == 200
        meta = s.get(f"{base}/api/zones").json()
        assert meta["cell_count"] == meta["grid"]["n_cols"] * meta["grid"]["n_rows"]
        png = s.get(f"{base}/api/zones.png")
        assert png.status_code == 200
        assert png.content == (ws / "zones.png").read_bytes()


class TestCodes:
    def test_record_code_decodes_to_persistent_uri(self, service, fixture_features):
        base, s, ws = service
        snapshot = load_snapshot(ws)
        feature = snapshot.index.get("RC0304-T001")
        expected = persistent_uri(snapshot.manifest, feature)
        png = s.get(f"{base}/codes/RC0304-T001.png")
        assert png.status_code == 200
        assert decode_qr(matrix_from_png(png.content)) == expected

    def test_unknown_id_404(self, service):
        base, s, _ = service
        assert s.get(f"{base}/codes/NOPE.png").status_code == 404

    def test_byte_identical_responses(self, service):
        base, s, _ = service
        a = s.get(f"{base}/codes/RC0304-T001.png").content
        b = s.get(f"{base}/codes/RC0304-T001.png").content
        assert a == b

    def test_article_code_after_export(self, service, tmp_path):
        base, s, ws = service
        article = tmp_path / "article.txt"
        article.write_text(
            "article_id: demo\ntitle: Demo\n"
            "canonical_url: https://journal.example.org/articles/demo\n\nText.\n")
        rc = main(["export", "--workspace", str(ws), "--article", str(article),
                   "--format", "html", "--build-time", "2012-04-01T00:00:00+00:00"])
        assert rc == 0
        assert s.post(f"{base}/admin/reload").status_code == 200
        png = s.get(f"{base}/codes/demo.png")
        assert png.status_code == 200
        assert decode_qr(matrix_from_png(png.content)) == "https://journal.example.org/articles/demo"


class TestReload:
    def test_reload_returns_build_and_count(self, service):
        base, s, _ = service
        body = s.post(f"{base}/admin/reload").json()
        assert body["record_count"] == 231
        assert len(body["build"]) == 16

    def test_build_changes_with_dataset(self, service, fixture_features):
        base, s, ws = service
        first = s.post(f"{base}/admin/reload").json()
        from surveypub.ingest import features_to_csv
        (ws / "dataset.csv").write_text(features_to_csv(fixture_features[:100]))
        manifest = json.loads((ws / "manifest.json").read_text())
        manifest["record_count"] = 100
        (ws / "manifest.json").write_text(json.dumps(manifest))
        second = s.post(f"{base}/admin/reload").json()
        assert second["build"] != first["build"]
        assert second["record_count"] == 100
        assert s.get(f"{base}/api/search").json()["total"] == 100
