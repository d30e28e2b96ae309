import math
import random
from collections import deque
from dataclasses import replace

import numpy as np
import pytest

from conftest import BARRIER_BBOX, make_barrier, make_fixture_features
from surveypub.errors import BarrierError, ConfigError, GridCapError
from surveypub.model import CulturalAffiliation, GeoPoint, SiteContext, SurveyFeature, TombType, classify
from surveypub.zones import (EARTH_RADIUS_M, ZONE_NODATA, ZONE_ORDER,
                             BarrierPolygon, DiffusionParams, MaskedField,
                             deposit, diffuse, interpolate_zones, rasterize,
                             render_zone_png, world_file)

M_PER_DEG_LAT = math.pi / 180.0 * EARTH_RADIUS_M


def exact_bbox(n_cols, n_rows, cell_m=250.0, lat0=36.0, lon0=32.0):
    """A bbox whose metric extent is exactly n_cols x n_rows cells."""
    dlat = n_rows * cell_m / M_PER_DEG_LAT
    mean_lat = lat0 + dlat / 2
    m_per_deg_lon = M_PER_DEG_LAT * math.cos(math.radians(mean_lat))
    dlon = n_cols * cell_m / m_per_deg_lon
    return (lon0, lat0, lon0 + dlon, lat0 + dlat)


def rect_barrier(bbox):
    min_lon, min_lat, max_lon, max_lat = bbox
    return BarrierPolygon(ring=(
        GeoPoint(min_lat, min_lon), GeoPoint(min_lat, max_lon),
        GeoPoint(max_lat, max_lon), GeoPoint(max_lat, min_lon),
        GeoPoint(min_lat, min_lon)))


def matrix_power_oracle(active, values, alpha, steps):
    """Dense transition-matrix power: the independent small-grid oracle."""
    rows, cols = active.shape
    index = {}
    cells = []
    for r in range(rows):
        for c in range(cols):
            if active[r, c]:
                index[(r, c)] = len(cells)
                cells.append((r, c))
    n = len(cells)
    if n == 0:
        return np.zeros_like(values)
    transition = np.zeros((n, n))
    for k, (r, c) in enumerate(cells):
        neighbors = [index[nb] for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
                     if nb in index]
        transition[k, k] = 1.0 - alpha * len(neighbors)
        for j in neighbors:
            transition[k, j] = alpha
    vec = np.array([values[rc] for rc in cells])
    out_vec = np.linalg.matrix_power(transition, steps) @ vec
    out = np.zeros_like(values)
    for k, rc in enumerate(cells):
        out[rc] = out_vec[k]
    return out


def flood_reachable(active, seed):
    seen = {seed}
    frontier = deque([seed])
    rows, cols = active.shape
    while frontier:
        r, c = frontier.popleft()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nr < rows and 0 <= nc < cols and active[nr, nc] and (nr, nc) not in seen:
                seen.add((nr, nc))
                frontier.append((nr, nc))
    return seen


class TestRasterize:
    def test_square_barrier_covers_all_centers(self):
        bbox = exact_bbox(30, 20)
        grid, active = rasterize(bbox, rect_barrier(bbox), 250.0)
        assert (grid.n_cols, grid.n_rows) == (30, 20)
        assert active.all()

    def test_half_split_barrier(self):
        bbox = exact_bbox(30, 20)
        min_lon, min_lat, max_lon, max_lat = bbox
        mid_lon = (min_lon + max_lon) / 2
        left_half = rect_barrier((min_lon, min_lat, mid_lon, max_lat))
        grid, active = rasterize(bbox, left_half, 250.0)
        half = grid.n_rows * grid.n_cols / 2
        assert abs(int(active.sum()) - half) <= grid.n_rows  # +/- one column

    def test_c_shape_connectivity(self):
        bbox = exact_bbox(30, 30)
        min_lon, min_lat, max_lon, max_lat = bbox
        dlon = max_lon - min_lon
        dlat = max_lat - min_lat
        # C opens to the east: a notch cut from the right edge, mid-height.
        ring = [
            (min_lon, min_lat), (max_lon, min_lat),
            (max_lon, min_lat + 0.3 * dlat),
            (min_lon + 0.4 * dlon, min_lat + 0.3 * dlat),
            (min_lon + 0.4 * dlon, min_lat + 0.7 * dlat),
            (max_lon, min_lat + 0.7 * dlat),
            (max_lon, max_lat), (min_lon, max_lat), (min_lon, min_lat),
        ]
        barrier = BarrierPolygon(ring=tuple(GeoPoint(lat, lon) for lon, lat in ring))
        grid, active = rasterize(bbox, barrier, 250.0)
        prong_cells = np.argwhere(active)
        top = tuple(prong_cells[prong_cells[:, 0].argmax()])
        bottom = tuple(prong_cells[prong_cells[:, 0].argmin()])
        reachable = flood_reachable(active, top)
        assert bottom in reachable                       # connected via the spine
        assert len(reachable) == int(active.sum())       # single component
        # the notch is inactive
        notch_row = grid.n_rows // 2
        assert not active[notch_row, grid.n_cols - 2]

    def test_cell_cap_enforced(self):
        bbox = exact_bbox(100, 100)
        with pytest.raises(GridCapError):
            rasterize(bbox, rect_barrier(bbox), 250.0, cell_cap=99 * 99)

    def test_open_ring_rejected(self):
        with pytest.raises(BarrierError, match="closed"):
            BarrierPolygon(ring=(GeoPoint(0, 0), GeoPoint(0, 1), GeoPoint(1, 1),
                                 GeoPoint(1, 0)))

    def test_self_intersecting_ring_rejected(self):
        with pytest.raises(BarrierError, match="self-intersects"):
            BarrierPolygon(ring=(GeoPoint(0, 0), GeoPoint(1, 1), GeoPoint(0, 1),
                                 GeoPoint(1, 0), GeoPoint(0, 0)))

    def test_barrier_outside_bbox_rejected(self):
        bbox = exact_bbox(10, 10)
        wide = rect_barrier((bbox[0] - 1, bbox[1], bbox[2], bbox[3]))
        with pytest.raises(BarrierError, match="outside bbox"):
            rasterize(bbox, wide, 250.0)


def small_field(n_cols=10, n_rows=10, cell_m=250.0):
    bbox = exact_bbox(n_cols, n_rows, cell_m)
    grid, active = rasterize(bbox, rect_barrier(bbox), cell_m)
    return grid, active


class TestDeposit:
    def test_no_features_zero_field(self):
        grid, active = small_field()
        field = deposit(grid, active, [])
        assert field.values.sum() == 0.0

    def test_three_features_one_cell(self):
        grid, active = small_field()
        lat = grid.origin.lat + 2.5 * grid.cell_size_m / grid.m_per_deg_lat
        lon = grid.origin.lon + 3.5 * grid.cell_size_m / grid.m_per_deg_lon
        field = deposit(grid, active, [GeoPoint(lat, lon)] * 3)
        assert field.values[2, 3] == 3.0
        assert field.total_mass() == 3.0

    def test_fixture_masses_sum_to_231(self):
        features = make_fixture_features()
        grid, active = rasterize(BARRIER_BBOX, make_barrier(), 250.0)
        total = 0.0
        for affiliation in ZONE_ORDER:
            group = [f for f in features if classify(f) == affiliation]
            total += deposit(grid, active, group).total_mass()
        assert total == 231.0

    def test_outside_point_skipped_with_warning(self, caplog):
        grid, active = small_field()
        outside = GeoPoint(grid.origin.lat - 1.0, grid.origin.lon)
        with caplog.at_level("WARNING"):
            field = deposit(grid, active, [outside])
        assert field.total_mass() == 0.0
        assert any("skipped" in rec.message for rec in caplog.records)


class TestDiffuse:
    def test_steps_zero_is_identity(self):
        grid, active = small_field()
        values = np.zeros_like(active, dtype=float)
        values[4, 4] = 7.0
        field = MaskedField(grid=grid, active=active, values=values)
        out = diffuse(field, DiffusionParams(alpha=0.2, steps=0))
        assert np.array_equal(out.values, values)

    def test_matches_matrix_power_on_10x10(self):
        grid, active = small_field(10, 10)
        values = np.zeros((10, 10))
        values[5, 4] = 1.0
        field = MaskedField(grid=grid, active=active, values=values)
        for steps in (1, 7, 40):
            ours = diffuse(field, DiffusionParams(alpha=0.22, steps=steps)).values
            oracle = matrix_power_oracle(active, values, 0.22, steps)
            assert np.abs(ours - oracle).max() <= 1e-10

    def test_matches_matrix_power_on_random_masks(self):
        rng = random.Random(11)
        for trial in range(6):
            n_cols, n_rows = rng.randint(3, 12), rng.randint(3, 12)
            grid, active = small_field(n_cols, n_rows)
            mask = active & (np.random.RandomState(trial).rand(n_rows, n_cols) > 0.3)
            values = np.where(mask, np.random.RandomState(trial + 99).rand(n_rows, n_cols), 0.0)
            field = MaskedField(grid=grid, active=mask, values=values)
            steps = rng.randint(1, 100)
            ours = diffuse(field, DiffusionParams(alpha=0.25, steps=steps)).values
            oracle = matrix_power_oracle(mask, values, 0.25, steps)
            assert np.abs(ours - oracle).max() <= 1e-10

    def test_wall_is_impermeable(self):
        grid, active = small_field(21, 9)
        wall = active.copy()
        wall[:, 10] = False                       # full-height inactive wall
        values = np.zeros_like(wall, dtype=float)
        values[4, 2] = 5.0
        field = MaskedField(grid=grid, active=wall, values=values)
        out = diffuse(field, DiffusionParams(alpha=0.25, steps=500))
        assert np.all(out.values[:, 11:] == 0.0)  # bit-exact zero beyond the wall
        assert out.values[:, :10].sum() == pytest.approx(5.0, rel=1e-12)

    def test_mass_conserved_on_random_mask(self):
        grid, active = small_field(50, 50)
        rs = np.random.RandomState(5)
        mask = active & (rs.rand(50, 50) > 0.2)
        values = np.where(mask, rs.rand(50, 50), 0.0)
        field = MaskedField(grid=grid, active=mask, values=values)
        out = diffuse(field, DiffusionParams(alpha=0.2, steps=300))
        drift = abs(out.values.sum() - values.sum()) / values.sum()
        assert drift <= 1e-9

    def test_non_negativity_at_stability_bound(self):
        grid, active = small_field(20, 20)
        rs = np.random.RandomState(17)
        for trial in range(10):
            mask = active & (rs.rand(20, 20) > 0.25)
            values = np.where(mask, rs.rand(20, 20) * 10, 0.0)
            field = MaskedField(grid=grid, active=mask, values=values)
            out = diffuse(field, DiffusionParams(alpha=0.25, steps=60))
            assert out.values.min() >= 0.0

    def test_gaussian_variance_identity(self):
        cell = 250.0
        grid, active = small_field(101, 101, cell)
        values = np.zeros((101, 101))
        values[50, 50] = 1.0
        field = MaskedField(grid=grid, active=active, values=values)
        alpha, steps = 0.2, 60
        out = diffuse(field, DiffusionParams(alpha=alpha, steps=steps)).values
        rows, cols = np.indices(out.shape)
        mass = out.sum()
        for axis in (rows, cols):
            mean = (out * axis).sum() / mass
            var = (out * (axis - mean) ** 2).sum() / mass * cell ** 2
            expected = 2 * alpha * steps * cell ** 2
            assert abs(var - expected) / expected <= 0.01

    def test_alpha_stability_bound_enforced(self):
        with pytest.raises(ConfigError):
            DiffusionParams(alpha=0.3)
        with pytest.raises(ConfigError):
            DiffusionParams(alpha=0.0)

    def test_bandwidth_derives_steps(self):
        params = DiffusionParams(alpha=0.2, bandwidth_m=2000.0)
        assert params.effective_steps(250.0) == 160


def feature_at(grid, row, col, tomb_type, n):
    lat = grid.origin.lat + (row + 0.5) * grid.cell_size_m / grid.m_per_deg_lat
    lon = grid.origin.lon + (col + 0.5) * grid.cell_size_m / grid.m_per_deg_lon
    return SurveyFeature(
        id=f"RC0001-T{n:03d}", locus_id="RC0001", locus_name="Test",
        tomb_type=tomb_type, context=SiteContext.Village,
        location=GeoPoint(lat, lon), elevation_m=0.0, has_inscription=False)


class TestInterpolateZones:
    def test_zero_features_is_error(self):
        bbox = exact_bbox(10, 10)
        with pytest.raises(ConfigError):
            interpolate_zones([], rect_barrier(bbox), bbox, 250.0,
                              DiffusionParams(alpha=0.2, steps=10))

    def test_single_affiliation_uniform(self):
        bbox = exact_bbox(15, 15)
        barrier = rect_barrier(bbox)
        grid, _ = rasterize(bbox, barrier, 250.0)
        features = [feature_at(grid, 7, 7, TombType.TempleTomb, 1)]
        zones = interpolate_zones(features, barrier, bbox, 250.0,
                                  DiffusionParams(alpha=0.2, steps=50))
        reachable = zones.zone != ZONE_NODATA
        assert reachable.any()
        assert (zones.zone[reachable] == 0).all()          # all Polis
        assert np.allclose(zones.prob[CulturalAffiliation.Polis][reachable], 1.0)

    def test_symmetric_two_class_mirror(self):
        bbox = exact_bbox(31, 21)
        barrier = rect_barrier(bbox)
        grid, _ = rasterize(bbox, barrier, 250.0)
        features = [
            feature_at(grid, 10, 7, TombType.TempleTomb, 1),     # Polis west
            feature_at(grid, 10, 23, TombType.RockCut, 2),       # Mesogeia east (mirror)
        ]
        zones = interpolate_zones(features, barrier, bbox, 250.0,
                                  DiffusionParams(alpha=0.2, steps=80))
        p = zones.prob[CulturalAffiliation.Polis]
        m = zones.prob[CulturalAffiliation.Mesogeia]
        # the Polis surface mirrors the Mesogeia surface across the midline
        assert np.abs(p - m[:, ::-1]).max() <= 1e-12
        # midline column: exact tie -> NoData
        assert (zones.zone[:, 15] == ZONE_NODATA).all()
        assert np.abs(p[:, 15] - m[:, 15]).max() <= 1e-12
        # off-midline zones mirror with labels swapped
        west = zones.zone[:, :15]
        east = zones.zone[:, 16:][:, ::-1]
        swapped = np.where(east == 0, 1, np.where(east == 1, 0, east))
        assert np.array_equal(west, swapped)

    def test_probabilities_normalized(self):
        bbox = exact_bbox(20, 12)
        barrier = rect_barrier(bbox)
        grid, _ = rasterize(bbox, barrier, 250.0)
        features = [feature_at(grid, 3, 3, TombType.TempleTomb, 1),
                    feature_at(grid, 8, 15, TombType.RockCut, 2),
                    feature_at(grid, 5, 10, TombType.Larnax, 3)]
        zones = interpolate_zones(features, barrier, bbox, 250.0,
                                  DiffusionParams(alpha=0.2, steps=60))
        classified = zones.zone != ZONE_NODATA
        total = sum(zones.prob[aff] for aff in ZONE_ORDER)
        assert np.abs(total[classified] - 1.0).max() <= 1e-9

    def test_permutation_invariance(self):
        features = make_fixture_features()
        params = DiffusionParams(alpha=0.2, steps=40)
        zones_a = interpolate_zones(features, make_barrier(), BARRIER_BBOX, 500.0, params)
        shuffled = list(features)
        random.Random(3).shuffle(shuffled)
        zones_b = interpolate_zones(shuffled, make_barrier(), BARRIER_BBOX, 500.0, params)
        assert np.array_equal(zones_a.zone, zones_b.zone)
        for aff in ZONE_ORDER:
            assert np.array_equal(zones_a.prob[aff], zones_b.prob[aff])


class TestRender:
    def _mono_raster(self):
        bbox = exact_bbox(8, 6)
        barrier = rect_barrier(bbox)
        grid, _ = rasterize(bbox, barrier, 250.0)
        features = [feature_at(grid, 3, 4, TombType.TempleTomb, 1)]
        return interpolate_zones(features, barrier, bbox, 250.0,
                                 DiffusionParams(alpha=0.2, steps=30))

    def test_uniform_single_zone_single_hue(self):
        from PIL import Image
        import io
        zones = self._mono_raster()
        png = render_zone_png(zones)
        rgba = np.asarray(Image.open(io.BytesIO(png)).convert("RGBA"))
        opaque = rgba[rgba[:, :, 3] > 0]
        hues = {tuple(px[:3]) for px in opaque}
        assert hues == {(0x1F, 0x4F, 0xFF)}

    def test_nodata_everywhere_transparent(self):
        zones = self._mono_raster()
        blank = replace(zones, zone=np.full_like(zones.zone, ZONE_NODATA),
                        max_prob=np.zeros_like(zones.max_prob))
        from PIL import Image
        import io
        png = render_zone_png(blank)
        rgba = np.asarray(Image.open(io.BytesIO(png)).convert("RGBA"))
        assert rgba.shape[:2] == zones.zone.shape    # one pixel per cell
        assert (rgba[:, :, 3] == 0).all()

    def test_mirror_fixture_flips_byte_identically(self):
        zones = self._mono_raster()
        # synthetic, exactly mirrored two-zone raster
        rows, cols = 10, 21
        zone = np.full((rows, cols), ZONE_NODATA, dtype=np.int8)
        zone[:, :10] = 0
        zone[:, 11:] = 0
        zone[2:5, 3:7] = 1
        zone[2:5, 14:18] = 1
        max_prob = np.zeros((rows, cols))
        max_prob[:, :] = 0.55
        max_prob[2:5, 3:7] = 0.95
        max_prob[2:5, 14:18] = 0.95
        assert np.array_equal(zone, zone[:, ::-1])
        mirrored = replace(zones, zone=zone, max_prob=max_prob,
                           active=np.ones((rows, cols), bool),
                           prob={aff: np.zeros((rows, cols)) for aff in ZONE_ORDER})
        png = render_zone_png(mirrored)
        from PIL import Image
        import io
        rgba = np.asarray(Image.open(io.BytesIO(png)).convert("RGBA"))
        assert np.array_equal(rgba, rgba[:, ::-1, :])

    def test_world_file_six_lines(self):
        zones = self._mono_raster()
        text = world_file(zones.grid)
        lines = text.strip().split("\n")
        assert len(lines) == 6
        x_size, rot1, rot2, y_size, center_lon, center_lat = map(float, lines)
        assert rot1 == rot2 == 0.0
        assert x_size > 0 > y_size
        assert center_lon == pytest.approx(zones.grid.origin.lon + x_size / 2)
        top_row_lat = zones.grid.origin.lat + (zones.grid.n_rows - 0.5) * (-y_size)
        assert center_lat == pytest.approx(top_row_lat)
