"""Grid crawl of a place provider.

The region is tiled with square cells; each cell is queried once with a
radar search whose radius circumscribes the cell (plus a 10% margin), so
the union of the disks covers the region.  Radar results are deduplicated
before details are fetched, transient failures are retried with
exponential backoff, and progress goes to a JSONL checkpoint so an
interrupted crawl can resume without re-fetching anything.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Callable, Protocol

from webwalk.dataset.places import Place, PlaceCategory, PlaceSet
from webwalk.errors import TransportError
from webwalk.geo import GeoCoordinate, PlanarPoint, Region, unproject_local


class PlacesProvider(Protocol):
    """What a crawl needs from a place API."""

    @property
    def radar_cap(self) -> int:
        """Maximum number of ids a radar search can return."""
        ...

    def radar_search(self, center: GeoCoordinate, radius_m: float) -> list[str]:
        """Ids of places within radius_m of center, at most radar_cap."""
        ...

    def place_details(self, place_id: str) -> Place:
        """Full record for one id."""
        ...


class FilePlacesProvider:
    """Provider backed by an in-memory dataset, for replays and tests.

    Radar results are ordered by prominence (check-ins desc, id asc) and
    capped, mirroring how a real API truncates."""

    def __init__(self, places: PlaceSet, radar_cap: int = 60):
        if radar_cap <= 0:
            raise ValueError("radar_cap must be positive")
        self._places = places
        self._radar_cap = radar_cap

    @property
    def radar_cap(self) -> int:
        return self._radar_cap

    def radar_search(self, center: GeoCoordinate, radius_m: float) -> list[str]:
        from webwalk.geo import haversine_m
        hits = [p for p in self._places if haversine_m(p.geo, center) <= radius_m]
        hits.sort(key=lambda p: (-p.checkins, p.id))
        return [p.id for p in hits[:self._radar_cap]]

    def place_details(self, place_id: str) -> Place:
        try:
            return self._places.get(place_id)
        except KeyError:
            raise TransportError(f"unknown place id {place_id!r}")


@dataclass(frozen=True)
class CellReport:
    """Outcome for one grid cell: ok, truncated (radar hit the provider
    cap, so places were likely missed) or failed (gave up after retries)."""

    cell_i: int
    cell_j: int
    status: str


@dataclass(frozen=True)
class CrawlResult:
    places: PlaceSet
    report: tuple[CellReport, ...]


def _with_retries(call: Callable[[], list | Place], max_attempts: int,
                  backoff_s: float, sleep: Callable[[float], None]):
    for attempt in range(max_attempts):
        try:
            return call()
        except TransportError:
            if attempt == max_attempts - 1:
                raise
            sleep(backoff_s * 2 ** attempt)


def crawl_places(provider: PlacesProvider, region: Region, grid_resolution_m: float,
                 checkpoint_path: str | FsPath | None = None, *,
                 max_attempts: int = 3, backoff_s: float = 0.05,
                 sleep: Callable[[float], None] = time.sleep) -> CrawlResult:
    """Crawl every grid cell of a region.

    Args:
        provider: Place API to query.
        region: Area to tile.
        grid_resolution_m: Cell side; the radar radius is the half-diagonal
            plus a 10% margin.
        checkpoint_path: Optional JSONL ledger.  Completed cells and fetched
            place records are appended as they happen; an existing file is
            replayed first, so rerunning after an interruption only touches
            unfinished cells.  Failed cells are not checkpointed and get
            retried on resume.
        max_attempts: Attempts per provider call before a cell is marked
            failed.
        backoff_s: Initial retry delay, doubled per attempt.
        sleep: Delay function, injectable for tests.

    Returns:
        The union of all fetched places plus one report row per cell.
    """
    if grid_resolution_m <= 0:
        raise ValueError("grid_resolution_m must be positive")
    nx = max(1, math.ceil(region.width_m / grid_resolution_m))
    ny = max(1, math.ceil(region.height_m / grid_resolution_m))
    radius = grid_resolution_m * math.sqrt(2.0) / 2.0 * 1.1
    sw = region.southwest

    done: dict[tuple[int, int], str] = {}
    fetched: dict[str, Place] = {}
    if checkpoint_path is not None and FsPath(checkpoint_path).exists():
        with open(checkpoint_path, encoding="utf-8") as fh:
            for raw in fh:
                if not raw.strip():
                    continue
                entry = json.loads(raw)
                if "place" in entry:
                    rec = entry["place"]
                    place = Place(rec["id"], rec["name"],
                                  GeoCoordinate(rec["lat"], rec["lon"]),
                                  PlaceCategory(rec["category"]),
                                  rec["checkins"], rec.get("website"))
                    fetched[place.id] = place
                elif "cell" in entry:
                    done[tuple(entry["cell"])] = entry["status"]

    ledger = open(checkpoint_path, "a", encoding="utf-8") if checkpoint_path is not None else None
    report: list[CellReport] = []
    try:
        for i in range(nx):
            for j in range(ny):
                if (i, j) in done:
                    report.append(CellReport(i, j, done[(i, j)]))
                    continue
                center = unproject_local(sw, PlanarPoint(
                    (i + 0.5) * grid_resolution_m, (j + 0.5) * grid_resolution_m))
                try:
                    ids = _with_retries(lambda: provider.radar_search(center, radius),
                                        max_attempts, backoff_s, sleep)
                except TransportError:
                    report.append(CellReport(i, j, "failed"))
                    continue
                status = "truncated" if len(ids) >= provider.radar_cap else "ok"
                cell_ok = True
                for pid in ids:
                    if pid in fetched:
                        continue
                    try:
                        place = _with_retries(lambda: provider.place_details(pid),
                                              max_attempts, backoff_s, sleep)
                    except TransportError:
                        cell_ok = False
                        break
                    fetched[place.id] = place
                    if ledger is not None:
                        ledger.write(json.dumps({"place": {
                            "id": place.id, "name": place.name,
                            "lat": place.geo.lat, "lon": place.geo.lon,
                            "category": place.category.value,
                            "checkins": place.checkins, "website": place.website,
                        }}) + "\n")
                        ledger.flush()
                if not cell_ok:
                    report.append(CellReport(i, j, "failed"))
                    continue
                report.append(CellReport(i, j, status))
                if ledger is not None:
                    ledger.write(json.dumps(
                        {"cell": [i, j], "status": status, "ids": ids}) + "\n")
                    ledger.flush()
    finally:
        if ledger is not None:
            ledger.close()

    ordered = sorted(fetched.values(), key=lambda p: p.id)
    return CrawlResult(PlaceSet(ordered), tuple(report))


def write_crawl_report(report: tuple[CellReport, ...] | list[CellReport],
                       path: str | FsPath) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_i", "cell_j", "status"])
        for row in report:
            writer.writerow([row.cell_i, row.cell_j, row.status])
