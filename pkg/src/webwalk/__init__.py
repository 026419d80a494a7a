"""Simulated city walks measured against web-present places.

The pipeline: acquire a place dataset (synthetic, imported or crawled),
draw start/end movements from the category model, route them into walking
paths, then measure how those paths overlap the detection disks of
places that also exist on the web.
"""

__version__ = "0.1.0"

from webwalk.geo import (
    EARTH_RADIUS_M,
    GeoCoordinate,
    PlanarPoint,
    Region,
    SpatialIndex,
    haversine_m,
    project_local,
    unproject_local,
)
from webwalk.dataset import (
    Place,
    PlaceCategory,
    PlaceSet,
    SynthSpec,
    VirtualLocation,
    dataset_stats,
    filter_virtual,
    generate_synthetic_city,
    import_places,
    export_places,
)
from webwalk.mobility import (
    CategoryDistribution,
    CategoryModel,
    MovementKind,
    MovementPair,
    RngStream,
    TransitionMatrix,
    build_transition_matrix,
    generate_movements,
    sample_nonrecurring,
    sample_recurring,
    sample_weighted_place,
    stationary_distribution,
    transition_from_counts,
)
from webwalk.routing import (
    SPEED_5_KMH,
    FileReplayProvider,
    GridWalkProvider,
    Path,
    RoutingParams,
    StraightLineProvider,
    TimedPath,
    filter_by_length,
    path_length_cdf,
    read_paths_jsonl,
    route,
    timestamp_path,
    write_paths_jsonl,
)
from webwalk.visits import (
    AggregateStats,
    AnalysisParams,
    OverlapRow,
    PathVisitReport,
    StepSeries,
    SweepSpec,
    VisitInterval,
    accumulated_visiting_time,
    aggregate_reports,
    detect_visits,
    parallel_visits_series,
    parallel_visits_summary,
    run_overlap_analysis,
    visited_location_count,
)
from webwalk.coverage import (
    CoverageResult,
    PowerLawFit,
    SquareOccupancy,
    coverage_percent,
    fit_power_law,
    occupancy_histogram,
    square_occupancy,
)
