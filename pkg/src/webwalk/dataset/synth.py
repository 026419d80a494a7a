"""Synthetic city generation.

Places are scattered as a mix of Gaussian clusters (commercial cores) and
a uniform background; homes lean towards the background, everything else
towards the clusters.  Check-ins follow a Zipf profile within each
category so a few places dominate, and a fixed share of places receives a
website.  The whole draw is a pure function of the spec and the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from webwalk.dataset.places import CATEGORY_ORDER, Place, PlaceSet
from webwalk.geo import PlanarPoint, Region, unproject_local

# Dublin-like category weights (Home, Work, Food, Entertainment, Others)
DEFAULT_CATEGORY_MIX: tuple[float, ...] = (
    4413 / 10021, 1280 / 10021, 1425 / 10021, 634 / 10021, 2269 / 10021,
)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic city.

    Args:
        region: Where places live.
        places: Total number of places to generate.
        website_ratio: Fraction of places that get a website; the realised
            count is exactly round(website_ratio * places).
        category_mix: Probability of each category, in the fixed category
            order; must sum to 1.
        clusters: Number of Gaussian clusters; 0 means pure background.
        cluster_spread_m: Standard deviation of a cluster, metres.
        home_cluster_prob: Chance a Home place is attached to a cluster.
        other_cluster_prob: Same for the four non-Home categories.
        checkin_scale: Check-ins of the top-ranked place per category;
            rank r gets round(scale / r**zipf_s).
        zipf_s: Zipf exponent.
        name_prefix: Prefix for generated ids, names and domains.
    """

    region: Region
    places: int
    website_ratio: float
    category_mix: tuple[float, ...] = DEFAULT_CATEGORY_MIX
    clusters: int = 3
    cluster_spread_m: float = 150.0
    home_cluster_prob: float = 0.2
    other_cluster_prob: float = 0.8
    checkin_scale: int = 1000
    zipf_s: float = 1.0
    name_prefix: str = "place"

    def __post_init__(self):
        if self.places <= 0:
            raise ValueError("places must be positive")
        if not 0.0 <= self.website_ratio <= 1.0:
            raise ValueError("website_ratio must be within [0, 1]")
        if len(self.category_mix) != len(CATEGORY_ORDER):
            raise ValueError(f"category_mix needs {len(CATEGORY_ORDER)} entries")
        if any(w < 0 for w in self.category_mix):
            raise ValueError("category_mix entries must be >= 0")
        if abs(sum(self.category_mix) - 1.0) > 1e-9:
            raise ValueError("category_mix must sum to 1")
        if self.clusters < 0:
            raise ValueError("clusters must be >= 0")
        if self.cluster_spread_m <= 0:
            raise ValueError("cluster_spread_m must be positive")
        for p in (self.home_cluster_prob, self.other_cluster_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("cluster probabilities must be within [0, 1]")
        if self.checkin_scale <= 0:
            raise ValueError("checkin_scale must be positive")
        if self.zipf_s <= 0:
            raise ValueError("zipf_s must be positive")


def _category_counts(mix: tuple[float, ...], total: int) -> list[int]:
    """Apportion total by largest remainder so counts sum exactly."""
    raw = [w * total for w in mix]
    counts = [math.floor(v) for v in raw]
    short = total - sum(counts)
    by_remainder = sorted(range(len(mix)), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in by_remainder[:short]:
        counts[i] += 1
    return counts


def _sample_in_region(rng: np.random.Generator, region: Region, width: float,
                      height: float, n: int) -> np.ndarray:
    """Uniform planar samples (from the SW corner) inside the region."""
    pts = np.column_stack([rng.uniform(0.0, width, n), rng.uniform(0.0, height, n)])
    if region.polygon is None:
        return pts
    sw = region.southwest
    for _ in range(1000):
        bad = [k for k in range(n)
               if not region.contains(unproject_local(sw, PlanarPoint(pts[k, 0], pts[k, 1])))]
        if not bad:
            return pts
        pts[bad, 0] = rng.uniform(0.0, width, len(bad))
        pts[bad, 1] = rng.uniform(0.0, height, len(bad))
    raise RuntimeError("could not place points inside the region polygon")


def generate_synthetic_city(spec: SynthSpec, seed: int) -> PlaceSet:
    """Generate a synthetic dataset.

    The same spec and seed always produce the identical PlaceSet.
    """
    rng = np.random.default_rng(seed)
    region = spec.region
    sw = region.southwest
    width, height = region.width_m, region.height_m
    n = spec.places
    counts = _category_counts(spec.category_mix, n)

    if spec.clusters > 0:
        # cluster centres sit in the central half of the box
        centers = np.column_stack([
            rng.uniform(width * 0.25, width * 0.75, spec.clusters),
            rng.uniform(height * 0.25, height * 0.75, spec.clusters),
        ])
    else:
        centers = np.empty((0, 2))

    positions = np.empty((n, 2))
    categories = np.empty(n, dtype=object)
    checkins = np.empty(n, dtype=np.int64)
    start = 0
    for cat, m in zip(CATEGORY_ORDER, counts):
        if m == 0:
            continue
        block = slice(start, start + m)
        categories[block] = cat
        p_cluster = spec.home_cluster_prob if cat is CATEGORY_ORDER[0] else spec.other_cluster_prob
        background = _sample_in_region(rng, region, width, height, m)
        if spec.clusters > 0:
            clustered = rng.uniform(0.0, 1.0, m) < p_cluster
            which = rng.integers(0, spec.clusters, m)
            offsets = rng.normal(0.0, spec.cluster_spread_m, (m, 2))
            around = centers[which] + offsets
            around[:, 0] = np.clip(around[:, 0], 0.0, width)
            around[:, 1] = np.clip(around[:, 1], 0.0, height)
            positions[block] = np.where(clustered[:, None], around, background)
        else:
            positions[block] = background
        # Zipf check-ins over a shuffled ranking inside the category
        ranks = rng.permutation(m) + 1
        checkins[block] = np.rint(spec.checkin_scale / ranks.astype(float) ** spec.zipf_s)
        start += m

    quota = round(spec.website_ratio * n)
    with_site = np.zeros(n, dtype=bool)
    if quota:
        with_site[rng.choice(n, size=quota, replace=False)] = True

    places = []
    for i in range(n):
        geo = unproject_local(sw, PlanarPoint(positions[i, 0], positions[i, 1]))
        slug = f"{spec.name_prefix}-{i:05d}"
        website = f"https://{slug}.example.ie" if with_site[i] else None
        places.append(Place(
            id=f"p{i:05d}", name=slug, geo=geo, category=categories[i],
            checkins=int(checkins[i]), website=website,
        ))
    return PlaceSet(places)
