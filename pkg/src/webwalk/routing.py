"""Paths between movement endpoints and their traversal in time.

Providers turn a movement into an ordered waypoint list; a path adds
cumulative great-circle distances, and a timed path pins a constant
walking speed on top so any moment maps to a point on the polyline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Protocol, Sequence

import numpy as np

from webwalk.dataset.places import Place
from webwalk.errors import RoutingError, SchemaError
from webwalk.geo import GeoCoordinate, PlanarPoint, haversine_m, project_local
from webwalk.mobility import MovementKind, MovementPair

# walking pace: 5 km/h
SPEED_5_KMH = 5000.0 / 3600.0

PROVIDER_NAMES = ("straight", "grid", "replay")


class PathProvider(Protocol):
    """Turns two endpoints into an ordered waypoint list."""

    def route(self, start: Place, end: Place) -> Sequence[GeoCoordinate]: ...


class StraightLineProvider:
    """Direct segment between the endpoints."""

    def route(self, start: Place, end: Place) -> list[GeoCoordinate]:
        return [start.geo, end.geo]


class GridWalkProvider:
    """Street-grid style dogleg: east-west first, then north-south,
    turning at the corner that shares the start latitude and the end
    longitude."""

    def route(self, start: Place, end: Place) -> list[GeoCoordinate]:
        a, b = start.geo, end.geo
        corner = GeoCoordinate(a.lat, b.lon)
        if corner in (a, b):
            return [a, b]
        return [a, corner, b]


class FileReplayProvider:
    """Replays recorded routes keyed by (start id, end id)."""

    def __init__(self, routes: dict[tuple[str, str], tuple[GeoCoordinate, ...]]):
        self._routes = routes

    @classmethod
    def from_jsonl(cls, path: str | FsPath) -> "FileReplayProvider":
        """Load routes from JSONL lines of
        {"start_id", "end_id", "waypoints": [[lat, lon], ...]}."""
        routes: dict[tuple[str, str], tuple[GeoCoordinate, ...]] = {}
        with open(path, encoding="utf-8") as fh:
            for line, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"invalid JSON: {exc.msg}", line=line)
                try:
                    key = (obj["start_id"], obj["end_id"])
                    waypoints = tuple(GeoCoordinate(lat, lon) for lat, lon in obj["waypoints"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise SchemaError(f"bad route record: {exc}", line=line)
                routes[key] = waypoints
        return cls(routes)

    def route(self, start: Place, end: Place) -> Sequence[GeoCoordinate]:
        try:
            return self._routes[(start.id, end.id)]
        except KeyError:
            raise RoutingError(f"no recorded route for {start.id} -> {end.id}")


@dataclass(frozen=True)
class RoutingParams:
    provider: str = "straight"
    speed_m_s: float = SPEED_5_KMH
    l_max_km: float = 3.0

    def __post_init__(self):
        if self.provider not in PROVIDER_NAMES:
            raise ValueError(f"unknown provider {self.provider!r}")
        if not self.speed_m_s > 0:
            raise ValueError("speed must be positive")
        if not self.l_max_km > 0:
            raise ValueError("l_max_km must be positive")


@dataclass(frozen=True)
class Path:
    """A polyline with cumulative great-circle distances per waypoint."""

    kind: MovementKind
    waypoints: tuple[GeoCoordinate, ...]
    cumulative_m: tuple[float, ...]
    movement: MovementPair | None = None
    path_id: str | None = None

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise ValueError("a path needs at least two waypoints")
        if len(self.cumulative_m) != len(self.waypoints):
            raise ValueError("one cumulative distance per waypoint")
        if self.cumulative_m[0] != 0.0:
            raise ValueError("cumulative distances must start at 0")
        if any(b <= a for a, b in zip(self.cumulative_m, self.cumulative_m[1:])):
            raise ValueError("cumulative distances must strictly increase")

    @property
    def length_m(self) -> float:
        return self.cumulative_m[-1]

    @property
    def length_km(self) -> float:
        return self.length_m / 1000.0


def route(provider: PathProvider, movement: MovementPair) -> Path:
    """Build the path of a movement via a provider.

    Raises:
        RoutingError: On fewer than two waypoints or a zero-length segment.
    """
    waypoints = tuple(provider.route(movement.start, movement.end))
    if len(waypoints) < 2:
        raise RoutingError(f"provider returned {len(waypoints)} waypoints")
    cumulative = _cumulative(waypoints)
    return Path(movement.kind, waypoints, cumulative, movement=movement)


def _cumulative(waypoints: tuple[GeoCoordinate, ...]) -> tuple[float, ...]:
    acc = [0.0]
    for a, b in zip(waypoints, waypoints[1:]):
        step = haversine_m(a, b)
        if step <= 0.0:
            raise RoutingError("zero-length segment in route")
        acc.append(acc[-1] + step)
    return tuple(acc)


def filter_by_length(paths: Iterable[Path], l_max_km: float) -> list[Path]:
    """Paths no longer than l_max_km (inclusive)."""
    return [p for p in paths if p.length_km <= l_max_km]


@dataclass(frozen=True)
class TimedPath:
    """A path walked at constant speed; waypoint k is reached at
    cumulative_m[k] / speed seconds."""

    path: Path
    speed_m_s: float
    arrival_s: tuple[float, ...]

    @property
    def duration_s(self) -> float:
        return self.arrival_s[-1]

    def projected(self, origin: GeoCoordinate) -> np.ndarray:
        """Waypoints in the local plane of origin, shape (n, 2)."""
        return np.array([[q.x, q.y] for q in
                         (project_local(origin, w) for w in self.path.waypoints)])

    def positions_at(self, times_s: np.ndarray, origin: GeoCoordinate) -> np.ndarray:
        """Positions at many times, shape (len(times), 2).  Times are
        clamped to [0, duration]."""
        arc = np.clip(np.asarray(times_s, dtype=float), 0.0, self.duration_s) * self.speed_m_s
        pts = self.projected(origin)
        cum = np.asarray(self.path.cumulative_m)
        return np.column_stack([np.interp(arc, cum, pts[:, 0]),
                                np.interp(arc, cum, pts[:, 1])])

    def position_at(self, t_s: float, origin: GeoCoordinate) -> PlanarPoint:
        """Position at one moment, by linear interpolation along the
        active segment."""
        xy = self.positions_at(np.array([t_s]), origin)
        return PlanarPoint(float(xy[0, 0]), float(xy[0, 1]))


def timestamp_path(path: Path, speed_m_s: float = SPEED_5_KMH) -> TimedPath:
    """Attach constant-speed timestamps to a path."""
    if not speed_m_s > 0:
        raise ValueError("speed must be positive")
    return TimedPath(path, speed_m_s, tuple(d / speed_m_s for d in path.cumulative_m))


def path_length_cdf(paths: Sequence[Path], bin_width_km: float = 0.25,
                    bins_km: Sequence[float] | None = None) -> list[tuple[float, int]]:
    """Cumulative path-length counts.

    Bins are multiples of bin_width_km up to the longest path unless an
    explicit ascending bin list is given; each entry is (bin upper edge,
    number of paths with length <= edge).  Empty input gives [].
    """
    if not paths:
        return []
    lengths = sorted(p.length_km for p in paths)
    if bins_km is None:
        if not bin_width_km > 0:
            raise ValueError("bin_width_km must be positive")
        top = math.ceil(lengths[-1] / bin_width_km)
        bins_km = [bin_width_km * k for k in range(1, top + 1)]
    edges = list(bins_km)
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bins must be strictly ascending")
    counts = np.searchsorted(lengths, edges, side="right")
    return [(float(edge), int(c)) for edge, c in zip(edges, counts)]


def write_paths_jsonl(paths: Sequence[Path], path: str | FsPath) -> None:
    """Write paths as JSONL records of
    {"path_id", "kind", "length_m", "waypoints": [[lat, lon], ...]}."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, p in enumerate(paths):
            fh.write(json.dumps({
                "path_id": p.path_id or f"path-{i:05d}",
                "kind": p.kind.value,
                "length_m": p.length_m,
                "waypoints": [[w.lat, w.lon] for w in p.waypoints],
            }) + "\n")


def read_paths_jsonl(path: str | FsPath) -> list[Path]:
    """Read paths written by write_paths_jsonl.  Cumulative distances are
    recomputed from the waypoints."""
    out: list[Path] = []
    with open(path, encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=line)
            try:
                kind = MovementKind(obj["kind"])
                waypoints = tuple(GeoCoordinate(lat, lon) for lat, lon in obj["waypoints"])
                path_id = obj["path_id"]
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"bad path record: {exc}", line=line)
            if len(waypoints) < 2:
                raise SchemaError("path needs at least two waypoints", line=line)
            try:
                cumulative = _cumulative(waypoints)
            except RoutingError as exc:
                raise SchemaError(str(exc), line=line)
            out.append(Path(kind, waypoints, cumulative, path_id=path_id))
    return out
