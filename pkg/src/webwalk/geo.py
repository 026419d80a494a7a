"""Geographic primitives.

Coordinates on the WGS84 sphere, great-circle distance, an equirectangular
local projection for city-scale work, rectangular/polygonal regions, and a
uniform-grid spatial index for radius queries.

All distances are metres.  The projection treats the Earth as a sphere of
mean radius 6,371 km; within a ~30 km extent the planar distance agrees
with the great-circle distance to about 0.1%, which is the accuracy domain
everything downstream assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Protocol

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoCoordinate:
    """A latitude/longitude pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("coordinates must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class PlanarPoint:
    """A point in a local tangent plane, metres east (x) and north (y)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("planar coordinates must be finite")


def haversine_m(a: GeoCoordinate, b: GeoCoordinate) -> float:
    """Great-circle distance between two coordinates in metres.

    Args:
        a: First coordinate.
        b: Second coordinate.

    Returns:
        Distance along the sphere surface, >= 0; exactly 0 when a == b.
    """
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def project_local(origin: GeoCoordinate, p: GeoCoordinate) -> PlanarPoint:
    """Project a coordinate into the equirectangular plane anchored at origin.

    x = R * dlon_rad * cos(origin.lat), y = R * dlat_rad.  Accurate to about
    0.1% for separations up to city scale; beyond that the scale error grows
    and no attempt is made to correct it.
    """
    x = EARTH_RADIUS_M * math.radians(p.lon - origin.lon) * math.cos(math.radians(origin.lat))
    y = EARTH_RADIUS_M * math.radians(p.lat - origin.lat)
    return PlanarPoint(x, y)


def unproject_local(origin: GeoCoordinate, q: PlanarPoint) -> GeoCoordinate:
    """Inverse of project_local for the same origin."""
    lat = origin.lat + math.degrees(q.y / EARTH_RADIUS_M)
    lon = origin.lon + math.degrees(q.x / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    return GeoCoordinate(lat, lon)


def planar_distance(a: PlanarPoint, b: PlanarPoint) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def _segments_intersect(p1: GeoCoordinate, p2: GeoCoordinate,
                        q1: GeoCoordinate, q2: GeoCoordinate) -> bool:
    """Proper intersection test in lon/lat space (shared endpoints excluded)."""

    def orient(a, b, c):
        v = (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon)
        if v > 1e-18:
            return 1
        if v < -1e-18:
            return -1
        return 0

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


@dataclass(frozen=True)
class Region:
    """A lat/lon bounding box, optionally restricted to a simple polygon.

    The polygon ring, when given, must be simple (non-self-intersecting)
    and lie within the bounding box.  Containment is inclusive of the
    boundary for the box and even-odd for the polygon.
    """

    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float
    polygon: tuple[GeoCoordinate, ...] | None = None

    def __post_init__(self):
        GeoCoordinate(self.min_lat, self.min_lon)
        GeoCoordinate(self.max_lat, self.max_lon)
        if self.min_lat >= self.max_lat or self.min_lon >= self.max_lon:
            raise ValueError("region box must have positive extent")
        if self.polygon is not None:
            ring = self.polygon
            if len(ring) < 3:
                raise ValueError("polygon needs at least 3 vertices")
            for v in ring:
                if not (self.min_lat <= v.lat <= self.max_lat
                        and self.min_lon <= v.lon <= self.max_lon):
                    raise ValueError("polygon vertex outside bounding box")
            n = len(ring)
            for i in range(n):
                a1, a2 = ring[i], ring[(i + 1) % n]
                for j in range(i + 1, n):
                    if j == i or (j + 1) % n == i or (i + 1) % n == j:
                        continue
                    b1, b2 = ring[j], ring[(j + 1) % n]
                    if _segments_intersect(a1, a2, b1, b2):
                        raise ValueError("polygon ring self-intersects")

    @classmethod
    def from_center(cls, center: GeoCoordinate, width_m: float, height_m: float) -> "Region":
        """Axis-aligned box of the given planar size centred on a coordinate."""
        if width_m <= 0 or height_m <= 0:
            raise ValueError("region size must be positive")
        half_w = PlanarPoint(width_m / 2.0, height_m / 2.0)
        ne = unproject_local(center, half_w)
        sw = unproject_local(center, PlanarPoint(-width_m / 2.0, -height_m / 2.0))
        return cls(sw.lat, sw.lon, ne.lat, ne.lon)

    @property
    def southwest(self) -> GeoCoordinate:
        return GeoCoordinate(self.min_lat, self.min_lon)

    @property
    def width_m(self) -> float:
        return planar_distance(
            project_local(self.southwest, GeoCoordinate(self.min_lat, self.max_lon)),
            PlanarPoint(0.0, 0.0))

    @property
    def height_m(self) -> float:
        return planar_distance(
            project_local(self.southwest, GeoCoordinate(self.max_lat, self.min_lon)),
            PlanarPoint(0.0, 0.0))

    def contains(self, c: GeoCoordinate) -> bool:
        if not (self.min_lat <= c.lat <= self.max_lat
                and self.min_lon <= c.lon <= self.max_lon):
            return False
        if self.polygon is None:
            return True
        return self._in_polygon(c)

    def _in_polygon(self, c: GeoCoordinate) -> bool:
        # even-odd rule, horizontal ray towards +lon
        ring = self.polygon
        inside = False
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            if (a.lat > c.lat) != (b.lat > c.lat):
                lon_at = a.lon + (c.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat)
                if c.lon < lon_at:
                    inside = not inside
        return inside


class HasLocation(Protocol):
    """Anything with a stable string id and a coordinate."""

    @property
    def id(self) -> str: ...

    @property
    def geo(self) -> GeoCoordinate: ...


class SpatialIndex:
    """Uniform-grid index over located items for radius queries.

    Items are bucketed by floor-division of their projected coordinates by
    the cell size.  A radius query gathers every bucket the disk can touch
    and then filters candidates by exact great-circle distance, so results
    are independent of the cell size.
    """

    def __init__(self, origin: GeoCoordinate, cell_size_m: float):
        if cell_size_m <= 0:
            raise ValueError("cell size must be positive")
        self.origin = origin
        self.cell_size_m = cell_size_m
        self._buckets: dict[tuple[int, int], list[tuple[HasLocation, float, float]]] = {}
        self._count = 0

    @classmethod
    def build(cls, items: Iterable[HasLocation], origin: GeoCoordinate,
              cell_size_m: float) -> "SpatialIndex":
        index = cls(origin, cell_size_m)
        for item in items:
            index.insert(item)
        return index

    def insert(self, item: HasLocation) -> None:
        q = project_local(self.origin, item.geo)
        key = (math.floor(q.x / self.cell_size_m), math.floor(q.y / self.cell_size_m))
        self._buckets.setdefault(key, []).append((item, q.x, q.y))
        self._count += 1

    def __len__(self) -> int:
        return self._count

    def candidates(self, center: GeoCoordinate, radius_m: float) -> list[tuple[HasLocation, float, float]]:
        """Superset of the items within radius_m of center, with their
        projected coordinates.  No exact distance filtering is applied."""
        if radius_m < 0:
            raise ValueError("radius must be >= 0")
        q = project_local(self.origin, center)
        # margin absorbs projection error between planar buckets and the
        # great-circle disk
        r = radius_m + max(1.0, 0.005 * radius_m)
        cs = self.cell_size_m
        i_lo = math.floor((q.x - r) / cs)
        i_hi = math.floor((q.x + r) / cs)
        j_lo = math.floor((q.y - r) / cs)
        j_hi = math.floor((q.y + r) / cs)
        out: list[tuple[HasLocation, float, float]] = []
        for i in range(i_lo, i_hi + 1):
            for j in range(j_lo, j_hi + 1):
                bucket = self._buckets.get((i, j))
                if bucket:
                    out.extend(bucket)
        return out

    def query_radius(self, center: GeoCoordinate, radius_m: float) -> list[HasLocation]:
        """All items within radius_m (inclusive) of center, ascending by id."""
        hits = [item for item, _, _ in self.candidates(center, radius_m)
                if haversine_m(item.geo, center) <= radius_m]
        hits.sort(key=lambda item: item.id)
        return hits
