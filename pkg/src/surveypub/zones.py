"""Cultural-zone surfaces by diffusion interpolation with barriers.

The study area is rasterized on a local equirectangular grid; the survey
border becomes a mask (cells whose center falls inside the barrier ring,
even-odd rule). Per-affiliation deposits then diffuse with an explicit
5-point stencil,

    u_i <- u_i + alpha * sum_{j in active 4-neighbors of i} (u_j - u_i)

with inactive cells excluded from the neighbor sum. That exclusion is the
no-flux (Neumann) barrier condition: mass never crosses the border and the
total is conserved exactly in exact arithmetic. After diffusion the
per-affiliation fields are normalized into probability surfaces and the
argmax gives the zone classification; argmax ties and cells with total
mass below the epsilon floor are NoData.

alpha must stay in (0, 0.25]: the stability bound of the explicit stencil,
which also keeps every intermediate field non-negative.
"""

import io
import logging
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import BarrierError, ConfigError, GridCapError
from .model import CulturalAffiliation, GeoPoint, classify

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6371008.8

DEFAULT_CELL_M = 250.0
DEFAULT_ALPHA = 0.2
DEFAULT_BANDWIDTH_M = 2000.0
DEFAULT_EPSILON = 1e-12
DEFAULT_CELL_CAP = 4_000_000

# Probability difference below which an argmax is treated as a tie.
TIE_TOL = 1e-12

ZONE_ORDER = (CulturalAffiliation.Polis, CulturalAffiliation.Mesogeia,
              CulturalAffiliation.Hinterland)
ZONE_NODATA = -1

ZONE_COLORS = {
    CulturalAffiliation.Polis: (0x1F, 0x4F, 0xFF),
    CulturalAffiliation.Mesogeia: (0xFF, 0x9F, 0x1F),
    CulturalAffiliation.Hinterland: (0xE0, 0x20, 0x20),
}

OPACITY_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class GridSpec:
    """Raster geometry: rows run south to north from the SW origin corner.

    The projection is local equirectangular about ``mean_lat``: x is meters
    east of the origin, y meters north, with the longitude scale fixed by
    cos(mean_lat). Adequate for survey-sized domains.
    """

    origin: GeoPoint
    cell_size_m: float
    n_cols: int
    n_rows: int
    mean_lat: float

    @property
    def m_per_deg_lat(self) -> float:
        return math.pi / 180.0 * EARTH_RADIUS_M

    @property
    def m_per_deg_lon(self) -> float:
        return math.pi / 180.0 * EARTH_RADIUS_M * math.cos(math.radians(self.mean_lat))

    def project(self, point: GeoPoint):
        """(x_m, y_m) east/north of the origin corner."""
        return ((point.lon - self.origin.lon) * self.m_per_deg_lon,
                (point.lat - self.origin.lat) * self.m_per_deg_lat)

    def cell_of(self, point: GeoPoint):
        """(row, col) of the cell containing the point; may be out of range."""
        x, y = self.project(point)
        return (int(math.floor(y / self.cell_size_m)),
                int(math.floor(x / self.cell_size_m)))


@dataclass(frozen=True)
class BarrierPolygon:
    """Closed, simple ring of WGS84 points delimiting the survey sector."""

    ring: tuple

    def __post_init__(self):
        ring = self.ring
        if len(ring) < 4:
            raise BarrierError("barrier ring needs >= 4 points including closure")
        first, last = ring[0], ring[-1]
        if (first.lat, first.lon) != (last.lat, last.lon):
            raise BarrierError("barrier ring is not closed (first point != last)")
        _check_simple(ring)


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_intersect(p1, p2, p3, p4):
    d1 = _orient(p3[0], p3[1], p4[0], p4[1], p1[0], p1[1])
    d2 = _orient(p3[0], p3[1], p4[0], p4[1], p2[0], p2[1])
    d3 = _orient(p1[0], p1[1], p2[0], p2[1], p3[0], p3[1])
    d4 = _orient(p1[0], p1[1], p2[0], p2[1], p4[0], p4[1])
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0:
        return True

    def on_segment(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    if d1 == 0 and on_segment(p3, p4, p1):
        return True
    if d2 == 0 and on_segment(p3, p4, p2):
        return True
    if d3 == 0 and on_segment(p1, p2, p3):
        return True
    if d4 == 0 and on_segment(p1, p2, p4):
        return True
    return False


def _check_simple(ring):
    pts = [(p.lon, p.lat) for p in ring]
    n = len(pts) - 1
    for i in range(n):
        if pts[i] == pts[i + 1]:
            raise BarrierError(f"barrier ring repeats point {i} consecutively")
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            if adjacent:
                continue
            if _segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]):
                raise BarrierError(
                    f"barrier ring self-intersects (edges {i} and {j})")


@dataclass(frozen=True)
class MaskedField:
    """Non-negative values on the active cells of a grid; zero elsewhere."""

    grid: GridSpec
    active: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.active.shape != (self.grid.n_rows, self.grid.n_cols):
            raise ValueError("active mask shape does not match grid")
        if self.values.shape != self.active.shape:
            raise ValueError("values shape does not match mask")

    def total_mass(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class DiffusionParams:
    """Stencil parameters. If bandwidth_m is set, the step count is derived
    so the implied kernel's standard deviation equals the bandwidth:
    steps = round(bandwidth_m^2 / (2 * alpha * cell_size_m^2))."""

    alpha: float = DEFAULT_ALPHA
    steps: int = 160
    bandwidth_m: float | None = None
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.25:
            raise ConfigError(f"alpha must be in (0, 0.25], got {self.alpha}")
        if self.steps < 0:
            raise ConfigError("steps must not be negative")
        if self.bandwidth_m is not None and self.bandwidth_m <= 0:
            raise ConfigError("bandwidth_m must be positive")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")

    def effective_steps(self, cell_size_m: float) -> int:
        if self.bandwidth_m is None:
            return self.steps
        derived = round(self.bandwidth_m ** 2 / (2.0 * self.alpha * cell_size_m ** 2))
        return max(1, int(derived))


def _points_in_ring(px, py, rx, ry):
    """Even-odd rule point-in-polygon, vectorized over point arrays."""
    inside = np.zeros(px.shape, dtype=bool)
    for k in range(len(rx) - 1):
        x1, y1, x2, y2 = rx[k], ry[k], rx[k + 1], ry[k + 1]
        if y1 == y2:
            continue
        crosses = (y1 > py) != (y2 > py)
        x_at = (x2 - x1) * (py - y1) / (y2 - y1) + x1
        inside ^= crosses & (px < x_at)
    return inside


def rasterize(bbox, barrier: BarrierPolygon, cell_size_m: float,
              cell_cap: int = DEFAULT_CELL_CAP):
    """Grid the bbox and mark cells whose center lies inside the barrier.

    bbox is (min_lon, min_lat, max_lon, max_lat) and must contain the
    barrier ring. Returns (GridSpec, active bool array).
    """
    min_lon, min_lat, max_lon, max_lat = bbox
    if min_lon > max_lon or min_lat > max_lat:
        raise ConfigError("bbox is not well-ordered")
    if cell_size_m <= 0:
        raise ConfigError("cell_size_m must be positive")
    for p in barrier.ring:
        if not (min_lon <= p.lon <= max_lon and min_lat <= p.lat <= max_lat):
            raise BarrierError(f"barrier point ({p.lat}, {p.lon}) outside bbox")

    mean_lat = 0.5 * (min_lat + max_lat)
    grid_probe = GridSpec(origin=GeoPoint(min_lat, min_lon), cell_size_m=cell_size_m,
                          n_cols=1, n_rows=1, mean_lat=mean_lat)
    width_m = (max_lon - min_lon) * grid_probe.m_per_deg_lon
    height_m = (max_lat - min_lat) * grid_probe.m_per_deg_lat
    n_cols = max(1, int(math.ceil(width_m / cell_size_m - 1e-9)))
    n_rows = max(1, int(math.ceil(height_m / cell_size_m - 1e-9)))
    if n_cols * n_rows > cell_cap:
        raise GridCapError(
            f"grid of {n_cols}x{n_rows} = {n_cols * n_rows} cells exceeds cap {cell_cap}")
    grid = GridSpec(origin=GeoPoint(min_lat, min_lon), cell_size_m=cell_size_m,
                    n_cols=n_cols, n_rows=n_rows, mean_lat=mean_lat)

    xs = (np.arange(n_cols) + 0.5) * cell_size_m
    ys = (np.arange(n_rows) + 0.5) * cell_size_m
    px, py = np.meshgrid(xs, ys)
    rx = np.array([(p.lon - grid.origin.lon) * grid.m_per_deg_lon for p in barrier.ring])
    ry = np.array([(p.lat - grid.origin.lat) * grid.m_per_deg_lat for p in barrier.ring])
    active = _points_in_ring(px, py, rx, ry)
    return grid, active


def deposit(grid: GridSpec, active: np.ndarray, features) -> MaskedField:
    """Drop unit point masses into the active cells containing the features.

    Accepts SurveyFeatures or bare GeoPoints. Points that land outside the
    grid or on an inactive cell are skipped with a warning; total mass
    equals the number of deposited features.
    """
    values = np.zeros((grid.n_rows, grid.n_cols), dtype=np.float64)
    for f in features:
        point = getattr(f, "location", f)
        row, col = grid.cell_of(point)
        if 0 <= row < grid.n_rows and 0 <= col < grid.n_cols and active[row, col]:
            values[row, col] += 1.0
        else:
            label = getattr(f, "id", f"({point.lat}, {point.lon})")
            logger.warning("deposit: %s falls outside the barrier, skipped", label)
    return MaskedField(grid=grid, active=active, values=values)


def _active_neighbor_counts(active: np.ndarray) -> np.ndarray:
    deg = np.zeros(active.shape, dtype=np.float64)
    a = active.astype(np.float64)
    deg[1:, :] += a[:-1, :]
    deg[:-1, :] += a[1:, :]
    deg[:, 1:] += a[:, :-1]
    deg[:, :-1] += a[:, 1:]
    return deg * a


def diffuse(field: MaskedField, params: DiffusionParams) -> MaskedField:
    """Run the explicit stencil for the configured number of steps.

    Each step reads only the previous step's buffer. With steps derived
    from a bandwidth, the result approximates a heat kernel of standard
    deviation bandwidth_m confined to the mask.
    """
    steps = params.effective_steps(field.grid.cell_size_m)
    active = field.active
    deg = _active_neighbor_counts(active)
    v = field.values.astype(np.float64, copy=True)
    alpha = params.alpha
    a = active.astype(np.float64)
    for _ in range(steps):
        neigh = np.zeros_like(v)
        neigh[1:, :] += v[:-1, :]
        neigh[:-1, :] += v[1:, :]
        neigh[:, 1:] += v[:, :-1]
        neigh[:, :-1] += v[:, 1:]
        v = (v + alpha * (neigh - deg * v)) * a
    return MaskedField(grid=field.grid, active=active, values=v)


@dataclass(frozen=True)
class ZoneRaster:
    """Per-affiliation probability surfaces plus the argmax classification.

    ``zone`` holds indexes into ZONE_ORDER, or ZONE_NODATA where the total
    diffused mass is below epsilon or the argmax is tied.
    """

    grid: GridSpec
    active: np.ndarray
    prob: dict
    zone: np.ndarray
    max_prob: np.ndarray


def interpolate_zones(features, barrier: BarrierPolygon, bbox,
                      cell_size_m: float = DEFAULT_CELL_M,
                      params: DiffusionParams = DiffusionParams()) -> ZoneRaster:
    """Full pipeline: rasterize, deposit per affiliation, diffuse, normalize.

    Where the summed diffused mass T >= epsilon, prob_c = u_c / T and the
    zone is the argmax affiliation (ties -> NoData); elsewhere NoData.
    """
    features = list(features)
    if not features:
        raise ConfigError("interpolate_zones needs at least one feature")
    grid, active = rasterize(bbox, barrier, cell_size_m)

    groups = {aff: [] for aff in ZONE_ORDER}
    for f in features:
        groups[classify(f)].append(f)

    diffused = {}
    for aff in ZONE_ORDER:
        field = deposit(grid, active, groups[aff])
        diffused[aff] = diffuse(field, params).values

    stack = np.stack([diffused[aff] for aff in ZONE_ORDER])
    total = stack.sum(axis=0)
    has_data = active & (total >= params.epsilon)

    safe_total = np.where(has_data, total, 1.0)
    probs = np.where(has_data, stack / safe_total, 0.0)

    order = np.sort(probs, axis=0)
    top, second = order[-1], order[-2]
    tied = (top - second) <= TIE_TOL
    zone = np.where(has_data & ~tied, probs.argmax(axis=0), ZONE_NODATA).astype(np.int8)
    max_prob = np.where(has_data, top, 0.0)

    prob = {aff: probs[k] for k, aff in enumerate(ZONE_ORDER)}
    return ZoneRaster(grid=grid, active=active, prob=prob, zone=zone, max_prob=max_prob)


def render_zone_png(zones: ZoneRaster) -> bytes:
    """RGBA PNG, one pixel per cell, north at the top.

    Hue encodes the winning zone; opacity encodes max_prob quantized into
    five bands bounded by OPACITY_THRESHOLDS (values below the first
    threshold clamp into the faintest band). NoData is fully transparent.
    """
    n_rows, n_cols = zones.zone.shape
    rgba = np.zeros((n_rows, n_cols, 4), dtype=np.uint8)

    k = np.searchsorted(np.asarray(OPACITY_THRESHOLDS), zones.max_prob, side="right")
    band = np.maximum(k, 1)
    alpha = np.rint(255.0 * band / len(OPACITY_THRESHOLDS)).astype(np.uint8)

    for idx, aff in enumerate(ZONE_ORDER):
        sel = zones.zone == idx
        r, g, b = ZONE_COLORS[aff]
        rgba[sel, 0] = r
        rgba[sel, 1] = g
        rgba[sel, 2] = b
        rgba[sel, 3] = alpha[sel]

    flipped = rgba[::-1, :, :]
    image = Image.fromarray(flipped, mode="RGBA")
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def world_file(grid: GridSpec) -> str:
    """Six-line world file georeferencing the PNG in WGS84 degrees.

    Lines: x cell size, 0, 0, -y cell size, then the lon/lat of the center
    of the upper-left pixel (the northernmost grid row).
    """
    x_size = grid.cell_size_m / grid.m_per_deg_lon
    y_size = grid.cell_size_m / grid.m_per_deg_lat
    center_lon = grid.origin.lon + 0.5 * x_size
    center_lat = grid.origin.lat + (grid.n_rows - 0.5) * y_size
    lines = [x_size, 0.0, 0.0, -y_size, center_lon, center_lat]
    return "\n".join(repr(v) for v in lines) + "\n"
