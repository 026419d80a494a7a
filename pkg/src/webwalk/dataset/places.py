"""Place records, datasets, and their CSV/JSONL round trip.

A place is a point of interest with one of five fixed categories.  Places
with a website double as virtual locations, the physical anchors the rest
of the analysis cares about.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Iterator, Mapping
from urllib.parse import urlsplit

from webwalk.errors import SchemaError
from webwalk.geo import GeoCoordinate


class PlaceCategory(enum.Enum):
    HOME = "Home"
    WORK = "Work"
    FOOD = "Food"
    ENTERTAINMENT = "Entertainment"
    OTHERS = "Others"


# canonical ordering used by every per-category table and vector
CATEGORY_ORDER: tuple[PlaceCategory, ...] = (
    PlaceCategory.HOME,
    PlaceCategory.WORK,
    PlaceCategory.FOOD,
    PlaceCategory.ENTERTAINMENT,
    PlaceCategory.OTHERS,
)

_CSV_HEADER = ["id", "name", "lat", "lon", "category", "checkins", "website"]


def _validate_url(url: str) -> None:
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise ValueError(f"not an absolute http(s) URL: {url!r}")


@dataclass(frozen=True)
class Place:
    """One point of interest.

    Args:
        id: Stable non-empty identifier, unique within a dataset.
        name: Display name.
        geo: Coordinate.
        category: One of the five fixed categories.
        checkins: Non-negative popularity count.
        website: Absolute http(s) URL, or None when the place has no
            web presence.
    """

    id: str
    name: str
    geo: GeoCoordinate
    category: PlaceCategory
    checkins: int
    website: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("place id must be non-empty")
        if not isinstance(self.checkins, int) or self.checkins < 0:
            raise ValueError(f"checkins must be a non-negative int, got {self.checkins!r}")
        if self.website is not None:
            _validate_url(self.website)

    @property
    def is_virtual(self) -> bool:
        return self.website is not None


@dataclass(frozen=True)
class VirtualLocation:
    """A place that also exists on the web: coordinate plus URL."""

    id: str
    geo: GeoCoordinate
    url: str
    domain: str

    @classmethod
    def from_place(cls, place: Place) -> "VirtualLocation":
        if place.website is None:
            raise ValueError(f"place {place.id} has no website")
        return cls(place.id, place.geo, place.website,
                   urlsplit(place.website).netloc.lower())


class PlaceSet:
    """An immutable collection of places with unique ids."""

    def __init__(self, places: Iterable[Place]):
        self._places = tuple(places)
        self._by_id: dict[str, Place] = {}
        for p in self._places:
            if p.id in self._by_id:
                raise ValueError(f"duplicate place id {p.id!r}")
            self._by_id[p.id] = p

    def __len__(self) -> int:
        return len(self._places)

    def __iter__(self) -> Iterator[Place]:
        return iter(self._places)

    def __contains__(self, place_id: str) -> bool:
        return place_id in self._by_id

    def __eq__(self, other) -> bool:
        return isinstance(other, PlaceSet) and self._places == other._places

    def get(self, place_id: str) -> Place:
        return self._by_id[place_id]

    @property
    def places(self) -> tuple[Place, ...]:
        return self._places


@dataclass(frozen=True)
class DatasetStats:
    """Summary of a dataset: totals, virtual share, per-category breakdown
    (categories always in the fixed Home/Work/Food/Entertainment/Others
    order)."""

    place_count: int
    virtual_count: int
    virtual_ratio: float
    category_places: Mapping[PlaceCategory, int]
    category_checkins: Mapping[PlaceCategory, int]


def dataset_stats(places: PlaceSet) -> DatasetStats:
    """Counts, check-in totals and the virtual share of a dataset."""
    n_places = {c: 0 for c in CATEGORY_ORDER}
    n_checkins = {c: 0 for c in CATEGORY_ORDER}
    virtual = 0
    for p in places:
        n_places[p.category] += 1
        n_checkins[p.category] += p.checkins
        if p.is_virtual:
            virtual += 1
    total = len(places)
    ratio = virtual / total if total else 0.0
    return DatasetStats(total, virtual, ratio, n_places, n_checkins)


def filter_virtual(places: PlaceSet) -> list[VirtualLocation]:
    """The virtual locations of a dataset, ascending by id."""
    out = [VirtualLocation.from_place(p) for p in places if p.is_virtual]
    out.sort(key=lambda v: v.id)
    return out


@dataclass(frozen=True)
class ImportResult:
    """Outcome of an import: the accepted places plus one diagnostic per
    rejected row (each prefixed with its line number)."""

    places: PlaceSet
    diagnostics: tuple[str, ...]


def _place_from_fields(fields: dict, line: int,
                       seen: set[str]) -> tuple[Place | None, str | None]:
    pid = fields["id"]
    if not isinstance(pid, str) or not pid:
        return None, f"line {line}: empty or invalid id"
    if pid in seen:
        return None, f"line {line}: duplicate id {pid!r}"
    try:
        lat = float(fields["lat"])
        lon = float(fields["lon"])
    except (TypeError, ValueError):
        return None, f"line {line}: unparseable coordinates"
    try:
        geo = GeoCoordinate(lat, lon)
    except ValueError as exc:
        return None, f"line {line}: {exc}"
    try:
        category = PlaceCategory(fields["category"])
    except ValueError:
        return None, f"line {line}: unknown category {fields['category']!r}"
    raw_checkins = fields["checkins"]
    try:
        if isinstance(raw_checkins, float) and not raw_checkins.is_integer():
            raise ValueError(raw_checkins)
        checkins = int(raw_checkins)
    except (TypeError, ValueError):
        return None, f"line {line}: unparseable checkins"
    website = fields.get("website")
    if website in ("", None):
        website = None
    try:
        place = Place(pid, str(fields.get("name", "")), geo, category, checkins, website)
    except ValueError as exc:
        return None, f"line {line}: {exc}"
    return place, None


def import_places(path: str | FsPath, fmt: str = "csv") -> ImportResult:
    """Read a places file.

    Structural problems (wrong header, unparseable line, missing field)
    raise SchemaError with the line number.  Rows that parse but violate a
    value constraint are dropped and reported as diagnostics.

    Args:
        path: File to read.
        fmt: "csv" or "jsonl".

    Returns:
        ImportResult with the accepted places and per-row diagnostics.
    """
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {fmt!r}")
    accepted: list[Place] = []
    diagnostics: list[str] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        if fmt == "csv":
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError("empty file, expected header", line=1)
            if header != _CSV_HEADER:
                raise SchemaError(
                    f"bad header {header!r}, expected {_CSV_HEADER!r}", line=1)
            for line, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(_CSV_HEADER):
                    raise SchemaError(
                        f"expected {len(_CSV_HEADER)} fields, got {len(row)}", line=line)
                fields = dict(zip(_CSV_HEADER, row))
                place, diag = _place_from_fields(fields, line, seen)
                if place is not None:
                    accepted.append(place)
                    seen.add(place.id)
                else:
                    diagnostics.append(diag)
        else:
            for line, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"invalid JSON: {exc.msg}", line=line)
                if not isinstance(obj, dict):
                    raise SchemaError("expected a JSON object", line=line)
                missing = [k for k in _CSV_HEADER if k not in obj and k != "website"]
                if missing:
                    raise SchemaError(f"missing fields {missing}", line=line)
                place, diag = _place_from_fields(obj, line, seen)
                if place is not None:
                    accepted.append(place)
                    seen.add(place.id)
                else:
                    diagnostics.append(diag)
    return ImportResult(PlaceSet(accepted), tuple(diagnostics))


def export_places(places: PlaceSet, path: str | FsPath, fmt: str = "csv") -> None:
    """Write a places file in a form import_places reads back unchanged."""
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if fmt == "csv":
            writer = csv.writer(fh)
            writer.writerow(_CSV_HEADER)
            for p in places:
                writer.writerow([p.id, p.name, repr(p.geo.lat), repr(p.geo.lon),
                                 p.category.value, p.checkins, p.website or ""])
        else:
            for p in places:
                fh.write(json.dumps({
                    "id": p.id, "name": p.name,
                    "lat": p.geo.lat, "lon": p.geo.lon,
                    "category": p.category.value, "checkins": p.checkins,
                    "website": p.website,
                }) + "\n")
