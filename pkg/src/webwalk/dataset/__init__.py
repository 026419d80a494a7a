"""Place datasets: types, import/export, stats, and the two acquisition
paths (grid crawl against a provider, synthetic city generation)."""

from webwalk.dataset.places import (
    CATEGORY_ORDER,
    DatasetStats,
    ImportResult,
    Place,
    PlaceCategory,
    PlaceSet,
    VirtualLocation,
    dataset_stats,
    export_places,
    filter_virtual,
    import_places,
)
from webwalk.dataset.synth import SynthSpec, generate_synthetic_city
from webwalk.dataset.crawl import (
    CellReport,
    CrawlResult,
    FilePlacesProvider,
    PlacesProvider,
    crawl_places,
    write_crawl_report,
)

__all__ = [
    "CATEGORY_ORDER",
    "CellReport",
    "CrawlResult",
    "DatasetStats",
    "FilePlacesProvider",
    "ImportResult",
    "Place",
    "PlaceCategory",
    "PlaceSet",
    "PlacesProvider",
    "SynthSpec",
    "VirtualLocation",
    "crawl_places",
    "dataset_stats",
    "export_places",
    "filter_virtual",
    "generate_synthetic_city",
    "import_places",
    "write_crawl_report",
]
