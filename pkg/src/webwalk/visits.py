"""Visit detection and overlap metrics.

A walker visits a virtual location while it stays inside the location's
detection disk.  Entry and exit times come from exact segment/circle
intersections in the local plane; sub-intervals from consecutive segments
are merged before the minimum-dwell filter, so a visit spanning a corner
counts once.

Per-path metrics: distinct locations visited, the step function of
simultaneous visits with its time-weighted median and maximum, and the
accumulated visiting time.  Sweeps aggregate the per-path metrics into
medians per parameter combination.
"""

from __future__ import annotations

import csv
import logging
import math
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from webwalk.dataset.places import VirtualLocation
from webwalk.errors import AnalysisError
from webwalk.geo import GeoCoordinate, SpatialIndex
from webwalk.mobility import MovementKind
from webwalk.routing import Path, TimedPath, timestamp_path

log = logging.getLogger(__name__)

# sub-intervals closer than this are one visit
_MERGE_GAP_S = 1e-9


@dataclass(frozen=True)
class AnalysisParams:
    """Knobs of a single overlap analysis.

    Args:
        r_v_m: Detection radius around a virtual location, metres.
        t_v_min_s: Minimum dwell for a visit to count, seconds.
        l_max_km: Longest path admitted to the sample, km.
        speed_m_s: Walking speed.
    """

    r_v_m: float = 100.0
    t_v_min_s: float = 60.0
    l_max_km: float = 3.0
    speed_m_s: float = 5000.0 / 3600.0

    def __post_init__(self):
        for name in ("r_v_m", "t_v_min_s", "l_max_km", "speed_m_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class VisitInterval:
    """One stay inside one location's disk."""

    location_id: str
    t_enter_s: float
    t_exit_s: float

    def __post_init__(self):
        if self.t_enter_s < 0 or self.t_exit_s <= self.t_enter_s:
            raise ValueError("need 0 <= t_enter < t_exit")

    @property
    def duration_s(self) -> float:
        return self.t_exit_s - self.t_enter_s


def _raw_spans(tp: TimedPath, index: SpatialIndex, r_v_m: float) -> dict[str, list[tuple[float, float]]]:
    """Merged in-disk time spans per location id, before any dwell filter."""
    pts = tp.projected(index.origin)
    times = np.asarray(tp.arrival_s)
    n_seg = len(pts) - 1

    seg_idx: list[int] = []
    centers: list[tuple[float, float]] = []
    keys: list[str] = []
    for s in range(n_seg):
        a, b = tp.path.waypoints[s], tp.path.waypoints[s + 1]
        mid = GeoCoordinate((a.lat + b.lat) / 2.0, (a.lon + b.lon) / 2.0)
        half = math.hypot(pts[s + 1, 0] - pts[s, 0], pts[s + 1, 1] - pts[s, 1]) / 2.0
        for item, cx, cy in index.candidates(mid, r_v_m + half + 2.0):
            seg_idx.append(s)
            centers.append((cx, cy))
            keys.append(item.id)
    if not seg_idx:
        return {}

    seg = np.asarray(seg_idx)
    c = np.asarray(centers)
    a_pts = pts[seg]
    d = pts[seg + 1] - a_pts
    f = a_pts - c
    aa = np.einsum("ij,ij->i", d, d)
    bb = 2.0 * np.einsum("ij,ij->i", f, d)
    cc = np.einsum("ij,ij->i", f, f) - r_v_m * r_v_m
    disc = bb * bb - 4.0 * aa * cc
    ok = (disc > 0.0) & (aa > 0.0)
    if not ok.any():
        return {}
    sq = np.sqrt(disc[ok])
    lo = np.maximum((-bb[ok] - sq) / (2.0 * aa[ok]), 0.0)
    hi = np.minimum((-bb[ok] + sq) / (2.0 * aa[ok]), 1.0)
    inside = lo < hi
    if not inside.any():
        return {}
    seg_ok = seg[ok][inside]
    t0 = times[seg_ok] + lo[inside] * (times[seg_ok + 1] - times[seg_ok])
    t1 = times[seg_ok] + hi[inside] * (times[seg_ok + 1] - times[seg_ok])
    keys_ok = [keys[i] for i in np.flatnonzero(ok)[inside]]

    by_loc: dict[str, list[tuple[float, float]]] = {}
    for key, start, end in zip(keys_ok, t0, t1):
        by_loc.setdefault(key, []).append((float(start), float(end)))
    for key, spans in by_loc.items():
        spans.sort()
        merged = [spans[0]]
        for start, end in spans[1:]:
            last_start, last_end = merged[-1]
            if start <= last_end + _MERGE_GAP_S:
                if end > last_end:
                    merged[-1] = (last_start, end)
            else:
                merged.append((start, end))
        by_loc[key] = merged
    return by_loc


def _qualifying(spans: Mapping[str, list[tuple[float, float]]],
                t_v_min_s: float) -> list[VisitInterval]:
    out = [VisitInterval(key, start, end)
           for key, merged in spans.items()
           for start, end in merged
           if end - start >= t_v_min_s]
    out.sort(key=lambda v: (v.t_enter_s, v.location_id))
    return out


def detect_visits(tp: TimedPath, index: SpatialIndex,
                  params: AnalysisParams) -> list[VisitInterval]:
    """All qualifying visits of a timed path against an index of virtual
    locations, ordered by entry time.

    The path is projected into the index's plane, so every distance is
    consistent with the index's own geometry.
    """
    return _qualifying(_raw_spans(tp, index, params.r_v_m), params.t_v_min_s)


def visited_location_count(intervals: Iterable[VisitInterval]) -> int:
    """Distinct locations with at least one qualifying visit."""
    return len({v.location_id for v in intervals})


def accumulated_visiting_time(intervals: Iterable[VisitInterval]) -> float:
    """Total visiting seconds, summed over intervals (overlaps counted
    per location, same as integrating the parallel-visit series)."""
    return sum(v.duration_s for v in intervals)


@dataclass(frozen=True)
class StepSeries:
    """Piecewise-constant integer series on [0, duration].

    values[k] holds on [breakpoints[k-1], breakpoints[k]) with the outer
    edges at 0 and duration; breakpoints are strictly inside the domain.
    """

    breakpoints: tuple[float, ...]
    values: tuple[int, ...]
    duration_s: float

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("need one more value than breakpoints")
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must strictly increase")
        if self.breakpoints and not (0.0 < self.breakpoints[0]
                                     and self.breakpoints[-1] < self.duration_s):
            raise ValueError("breakpoints must lie inside (0, duration)")

    def value_at(self, t_s: float) -> int:
        return self.values[bisect_right(self.breakpoints, t_s)]

    def integral(self) -> float:
        edges = (0.0, *self.breakpoints, self.duration_s)
        return sum(v * (b - a) for v, a, b in zip(self.values, edges, edges[1:]))


def parallel_visits_series(intervals: Sequence[VisitInterval],
                           duration_s: float) -> StepSeries:
    """How many locations are visited at once, as a function of time."""
    deltas: dict[float, int] = {}
    for v in intervals:
        deltas[v.t_enter_s] = deltas.get(v.t_enter_s, 0) + 1
        deltas[v.t_exit_s] = deltas.get(v.t_exit_s, 0) - 1
    value = sum(d for t, d in deltas.items() if t <= 0.0)
    breakpoints: list[float] = []
    values: list[int] = [value]
    for t in sorted(deltas):
        if t <= 0.0 or t >= duration_s or deltas[t] == 0:
            continue
        value += deltas[t]
        breakpoints.append(t)
        values.append(value)
    return StepSeries(tuple(breakpoints), tuple(values), duration_s)


def parallel_visits_summary(series: StepSeries) -> tuple[float, int]:
    """Time-weighted median and maximum of a step series.

    The median is the value under which half the time falls; when the
    half-time lands exactly on a boundary between two values, their
    midpoint is returned.
    """
    edges = (0.0, *series.breakpoints, series.duration_s)
    time_per_value: dict[int, float] = {}
    for v, a, b in zip(series.values, edges, edges[1:]):
        time_per_value[v] = time_per_value.get(v, 0.0) + (b - a)
    ordered = sorted(time_per_value)
    half = series.duration_s / 2.0
    acc = 0.0
    median = float(ordered[-1])
    for pos, v in enumerate(ordered):
        acc += time_per_value[v]
        if acc >= half:
            if acc == half and pos + 1 < len(ordered):
                median = (v + ordered[pos + 1]) / 2.0
            else:
                median = float(v)
            break
    return median, max(series.values)


@dataclass(frozen=True)
class PathVisitReport:
    """All per-path metrics for one parameter combination."""

    path_id: str
    intervals: tuple[VisitInterval, ...]
    distinct_visited: int
    parallel_median: float
    parallel_max: int
    accumulated_s: float


def path_report(path_id: str, intervals: Sequence[VisitInterval],
                duration_s: float) -> PathVisitReport:
    series = parallel_visits_series(intervals, duration_s)
    median, maximum = parallel_visits_summary(series)
    return PathVisitReport(
        path_id, tuple(intervals), visited_location_count(intervals),
        median, maximum, accumulated_visiting_time(intervals))


@dataclass(frozen=True)
class AggregateStats:
    """Medians of the per-path metrics over one path sample."""

    n_paths: int
    med_visited: float
    med_of_med_parallel: float
    med_of_max_parallel: float
    med_accumulated_s: float


def aggregate_reports(reports: Sequence[PathVisitReport]) -> AggregateStats:
    """Median aggregation (midpoint convention for even counts).

    Raises:
        AnalysisError: On an empty sample.
    """
    if not reports:
        raise AnalysisError("cannot aggregate an empty path sample")
    return AggregateStats(
        len(reports),
        float(np.median([r.distinct_visited for r in reports])),
        float(np.median([r.parallel_median for r in reports])),
        float(np.median([r.parallel_max for r in reports])),
        float(np.median([r.accumulated_s for r in reports])),
    )


@dataclass(frozen=True)
class SweepSpec:
    """Parameter grid of an overlap sweep; every combination is run."""

    r_v_m: tuple[float, ...]
    t_v_min_s: tuple[float, ...]
    l_max_km: tuple[float, ...]

    def __post_init__(self):
        for name in ("r_v_m", "t_v_min_s", "l_max_km"):
            vals = getattr(self, name)
            if not vals:
                raise ValueError(f"{name} sweep must not be empty")
            if any(not v > 0 for v in vals):
                raise ValueError(f"{name} values must be positive")

    @classmethod
    def default(cls) -> "SweepSpec":
        return cls(tuple(float(r) for r in range(25, 251, 25)), (60.0,), (3.0,))


@dataclass(frozen=True)
class OverlapRow:
    """One aggregated result row: a parameter combination applied to one
    movement kind of one dataset."""

    dataset: str
    kind: str
    r_v_m: float
    t_v_min_s: float
    l_max_km: float
    n_paths: int
    med_visited: float
    med_of_med_parallel: float
    med_of_max_parallel: float
    med_accumulated_s: float
    insufficient: bool


def _spans_chunk(tps: Sequence[TimedPath], index: SpatialIndex,
                 r_v_m: float) -> list[dict[str, list[tuple[float, float]]]]:
    return [_raw_spans(tp, index, r_v_m) for tp in tps]


def run_overlap_analysis(paths: Sequence[Path], locations: Sequence[VirtualLocation],
                         params: AnalysisParams, sweep: SweepSpec | None = None, *,
                         dataset: str = "data", min_sample: int = 100,
                         workers: int = 1,
                         detail_sink: "Callable[[str, float, float, list[PathVisitReport]], None] | None" = None,
                         ) -> list[OverlapRow]:
    """Sweep the overlap metrics over a parameter grid.

    Paths are grouped by movement kind; every (kind, r_v, t_v_min, l_max)
    combination yields one row.  Combinations whose filtered sample is
    smaller than min_sample are flagged insufficient (and logged), never
    silently dropped.  params supplies the walking speed; with no sweep,
    the single combination in params is run.  detail_sink, when given,
    receives the per-path reports of every (kind, r_v, t_v_min)
    combination before length filtering.

    Raises:
        AnalysisError: When no paths are given.
    """
    if not paths:
        raise AnalysisError("no paths to analyse")
    if sweep is None:
        sweep = SweepSpec((params.r_v_m,), (params.t_v_min_s,), (params.l_max_km,))
    if locations:
        origin = GeoCoordinate(
            sum(v.geo.lat for v in locations) / len(locations),
            sum(v.geo.lon for v in locations) / len(locations))
    else:
        origin = paths[0].waypoints[0]

    longest = max(sweep.l_max_km)
    rows: list[OverlapRow] = []
    for kind in MovementKind:
        kind_paths = [p for p in paths if p.kind is kind]
        if not kind_paths:
            continue
        admitted = [p for p in kind_paths if p.length_km <= longest]
        tps = [timestamp_path(p, params.speed_m_s) for p in admitted]
        ids = [p.path_id or f"{kind.value}-{i:05d}" for i, p in enumerate(admitted)]
        lengths = np.array([p.length_km for p in admitted])
        for r_v in sweep.r_v_m:
            index = SpatialIndex.build(locations, origin, cell_size_m=max(r_v, 1.0))
            if workers > 1 and len(tps) >= 256:
                chunks = np.array_split(np.arange(len(tps)), workers * 4)
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    parts = pool.map(_spans_chunk,
                                     [[tps[i] for i in c] for c in chunks if len(c)],
                                     [index] * sum(1 for c in chunks if len(c)),
                                     [r_v] * sum(1 for c in chunks if len(c)))
                    spans = [s for part in parts for s in part]
            else:
                spans = _spans_chunk(tps, index, r_v)
            for t_v in sweep.t_v_min_s:
                reports = [path_report(pid, _qualifying(sp, t_v), tp.duration_s)
                           for pid, sp, tp in zip(ids, spans, tps)]
                if detail_sink is not None:
                    detail_sink(kind.value, float(r_v), float(t_v), reports)
                for l_max in sweep.l_max_km:
                    chosen = [rep for rep, km in zip(reports, lengths) if km <= l_max]
                    if chosen:
                        agg = aggregate_reports(chosen)
                    else:
                        agg = AggregateStats(0, math.nan, math.nan, math.nan, math.nan)
                    insufficient = agg.n_paths < min_sample
                    if insufficient:
                        log.warning(
                            "sample of %d paths (< %d) for kind=%s r_v=%g t_v=%g l_max=%g",
                            agg.n_paths, min_sample, kind.value, r_v, t_v, l_max)
                    rows.append(OverlapRow(
                        dataset, kind.value, float(r_v), float(t_v), float(l_max),
                        agg.n_paths, agg.med_visited, agg.med_of_med_parallel,
                        agg.med_of_max_parallel, agg.med_accumulated_s, insufficient))
    return rows


OVERLAP_CSV_HEADER = ["dataset", "kind", "r_v_m", "t_v_min_s", "l_max_km", "n_paths",
                      "med_visited", "med_of_med_parallel", "med_of_max_parallel",
                      "med_accumulated_s"]


def write_overlap_csv(rows: Sequence[OverlapRow], path: str | FsPath) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(OVERLAP_CSV_HEADER)
        for r in rows:
            writer.writerow([r.dataset, r.kind, repr(r.r_v_m), repr(r.t_v_min_s),
                             repr(r.l_max_km), r.n_paths, repr(r.med_visited),
                             repr(r.med_of_med_parallel), repr(r.med_of_max_parallel),
                             repr(r.med_accumulated_s)])


def write_path_details_csv(reports: Sequence[PathVisitReport], path: str | FsPath) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id", "distinct_visited", "parallel_median",
                         "parallel_max", "accumulated_s"])
        for r in reports:
            writer.writerow([r.path_id, r.distinct_visited, repr(r.parallel_median),
                             r.parallel_max, repr(r.accumulated_s)])
