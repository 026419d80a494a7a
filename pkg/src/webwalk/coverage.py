"""Area coverage and square-occupancy statistics.

Coverage rasterises the region and marks every cell whose centre lies
within the detection radius of some location; occupancy tiles the region
with squares and counts locations per square.  Distances are evaluated in
the local plane anchored at the region's south-west corner, consistent
with the projection used everywhere else.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Mapping, Sequence

import numpy as np

from webwalk.errors import AnalysisError
from webwalk.geo import (
    HasLocation,
    PlanarPoint,
    Region,
    project_local,
    unproject_local,
)


@dataclass(frozen=True)
class CoverageResult:
    r_v_m: float
    raster_m: float
    covered_cells: int
    total_cells: int
    percent: float


def coverage_percent(locations: Sequence[HasLocation], region: Region,
                     r_v_m: float, raster_m: float = 10.0) -> CoverageResult:
    """Share of the region within r_v of at least one location.

    The region is rasterised at raster_m; a cell counts as covered when
    its centre is within r_v_m of some location.  The raster must be at
    most half the radius so discretisation error stays small.

    Raises:
        AnalysisError: On a too-coarse raster or a degenerate grid.
    """
    if r_v_m <= 0 or raster_m <= 0:
        raise AnalysisError("radius and raster must be positive")
    if raster_m > r_v_m / 2.0:
        raise AnalysisError(
            f"raster {raster_m} m too coarse for radius {r_v_m} m (max {r_v_m / 2.0})")
    width, height = region.width_m, region.height_m
    nx = math.ceil(width / raster_m)
    ny = math.ceil(height / raster_m)
    if nx <= 0 or ny <= 0:
        raise AnalysisError("degenerate raster grid")
    sw = region.southwest
    centers_x = (np.arange(nx) + 0.5) * raster_m
    centers_y = (np.arange(ny) + 0.5) * raster_m

    covered = np.zeros((nx, ny), dtype=bool)
    r_sq = r_v_m * r_v_m
    for loc in locations:
        q = project_local(sw, loc.geo)
        i_lo = max(0, math.floor((q.x - r_v_m) / raster_m))
        i_hi = min(nx - 1, math.floor((q.x + r_v_m) / raster_m))
        j_lo = max(0, math.floor((q.y - r_v_m) / raster_m))
        j_hi = min(ny - 1, math.floor((q.y + r_v_m) / raster_m))
        if i_lo > i_hi or j_lo > j_hi:
            continue
        dx = centers_x[i_lo:i_hi + 1] - q.x
        dy = centers_y[j_lo:j_hi + 1] - q.y
        covered[i_lo:i_hi + 1, j_lo:j_hi + 1] |= (
            dx[:, None] ** 2 + dy[None, :] ** 2 <= r_sq)

    if region.polygon is None:
        total = nx * ny
        covered_count = int(covered.sum())
    else:
        in_region = np.zeros((nx, ny), dtype=bool)
        for i in range(nx):
            for j in range(ny):
                center = unproject_local(sw, PlanarPoint(centers_x[i], centers_y[j]))
                in_region[i, j] = region.contains(center)
        total = int(in_region.sum())
        covered_count = int((covered & in_region).sum())
    if total == 0:
        raise AnalysisError("region contains no raster cells")
    return CoverageResult(r_v_m, raster_m, covered_count, total,
                          100.0 * covered_count / total)


@dataclass(frozen=True)
class SquareOccupancy:
    """Locations per square for one tiling side.

    counts holds only non-empty squares, keyed by (column, row) from the
    south-west corner; total_squares covers the whole region."""

    side_m: float
    counts: Mapping[tuple[int, int], int]
    total_squares: int

    @property
    def non_empty_ratio(self) -> float:
        return len(self.counts) / self.total_squares if self.total_squares else 0.0


def square_occupancy(locations: Sequence[HasLocation], region: Region,
                     side_m: float) -> SquareOccupancy:
    """Count locations per square of a side_m tiling anchored at the
    region's south-west corner.  Locations outside the region are
    ignored; every in-region location lands in exactly one square."""
    if side_m <= 0:
        raise AnalysisError("square side must be positive")
    width, height = region.width_m, region.height_m
    nx = max(1, math.ceil(width / side_m))
    ny = max(1, math.ceil(height / side_m))
    sw = region.southwest
    counts: dict[tuple[int, int], int] = {}
    for loc in locations:
        if not region.contains(loc.geo):
            continue
        q = project_local(sw, loc.geo)
        i = min(nx - 1, max(0, math.floor(q.x / side_m)))
        j = min(ny - 1, max(0, math.floor(q.y / side_m)))
        counts[(i, j)] = counts.get((i, j), 0) + 1

    if region.polygon is None:
        total = nx * ny
    else:
        inside = set(counts)
        for i in range(nx):
            for j in range(ny):
                center = unproject_local(
                    sw, PlanarPoint((i + 0.5) * side_m, (j + 0.5) * side_m))
                if region.contains(center):
                    inside.add((i, j))
        total = len(inside)
    return SquareOccupancy(float(side_m), counts, total)


def occupancy_histogram(occ: SquareOccupancy) -> list[tuple[int, int]]:
    """(k, number of squares holding exactly k locations), ascending k,
    non-empty squares only."""
    freq: dict[int, int] = {}
    for k in occ.counts.values():
        freq[k] = freq.get(k, 0) + 1
    return sorted(freq.items())


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line through (log10 k, log10 frequency)."""

    slope: float
    intercept: float
    r_squared: float
    bins_used: int


def fit_power_law(histogram: Sequence[tuple[int, float]]) -> PowerLawFit:
    """Fit frequency ~ C * k**slope on log-log axes.

    Bins with k <= 0 or frequency <= 0 are excluded (log-undefined).

    Raises:
        AnalysisError: With fewer than 3 usable bins.
    """
    usable = [(k, f) for k, f in histogram if k > 0 and f > 0]
    if len(usable) < 3:
        raise AnalysisError(f"power-law fit needs >= 3 usable bins, got {len(usable)}")
    x = np.log10([k for k, _ in usable])
    y = np.log10([f for _, f in usable])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_sq = 1.0 if ss_tot == 0.0 else 1.0 - float((residuals ** 2).sum()) / ss_tot
    return PowerLawFit(float(slope), float(intercept), r_sq, len(usable))


def write_coverage_csv(results: Sequence[CoverageResult], dataset: str,
                       path: str | FsPath) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "r_v_m", "raster_m", "percent"])
        for r in results:
            writer.writerow([dataset, repr(r.r_v_m), repr(r.raster_m), repr(r.percent)])


def write_occupancy_csv(occupancies: Sequence[SquareOccupancy], dataset: str,
                        path: str | FsPath) -> None:
    """Histogram rows per side (ascending k) followed by one summary row
    with k = "non_empty_ratio" carrying the ratio in the frequency
    column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "side_m", "k", "frequency"])
        for occ in occupancies:
            for k, freq in occupancy_histogram(occ):
                writer.writerow([dataset, repr(occ.side_m), k, freq])
            writer.writerow([dataset, repr(occ.side_m), "non_empty_ratio",
                             repr(occ.non_empty_ratio)])


def write_fit_csv(fits: Sequence[tuple[float, PowerLawFit]], dataset: str,
                  path: str | FsPath) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "side_m", "slope", "intercept", "r2"])
        for side, fit in fits:
            writer.writerow([dataset, repr(side), repr(fit.slope),
                             repr(fit.intercept), repr(fit.r_squared)])
