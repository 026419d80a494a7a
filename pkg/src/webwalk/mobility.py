"""Movement model over the five place categories.

Transitions between categories follow a popularity-driven matrix with a
small self-loop weight epsilon on the diagonal and hard zeros between
Home and Work in both directions (commutes are handled separately as
recurring movements).  Inside a category, places are drawn through a
check-in-weighted Dirichlet so popular places dominate without ever
fixing the ranking.
"""

from __future__ import annotations

import csv
import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Mapping, Sequence

import numpy as np

from webwalk.dataset.places import CATEGORY_ORDER, Place, PlaceCategory, PlaceSet
from webwalk.errors import ConvergenceError, ModelError, SamplingError

N_CATEGORIES = len(CATEGORY_ORDER)

# targets reachable from each category: everything except self and the
# forbidden Home<->Work pair
_HOME, _WORK = 0, 1
ALLOWED_TARGETS: tuple[tuple[int, ...], ...] = tuple(
    tuple(j for j in range(N_CATEGORIES)
          if j != i and {i, j} != {_HOME, _WORK})
    for i in range(N_CATEGORIES)
)


class MovementKind(enum.Enum):
    RECURRING = "recurring"
    NONRECURRING = "nonrecurring"


@dataclass(frozen=True)
class MovementPair:
    """A start/end pair of distinct places."""

    start: Place
    end: Place
    kind: MovementKind

    def __post_init__(self):
        if self.start.id == self.end.id:
            raise ValueError("movement start and end must be distinct places")


class CategoryModel:
    """Places grouped by category, with cached Dirichlet weights.

    Each category list is sorted by place id; the weight of a place is
    its check-in count plus one, so zero-check-in places stay reachable.
    """

    def __init__(self, by_category: Mapping[PlaceCategory, Sequence[Place]]):
        grouped: dict[PlaceCategory, tuple[Place, ...]] = {}
        seen: set[str] = set()
        for cat in CATEGORY_ORDER:
            members = tuple(sorted(by_category.get(cat, ()), key=lambda p: p.id))
            for p in members:
                if p.category is not cat:
                    raise ValueError(f"place {p.id} listed under {cat} but has category {p.category}")
                if p.id in seen:
                    raise ValueError(f"place {p.id} appears in more than one category")
                seen.add(p.id)
            grouped[cat] = members
        self._by_category = grouped
        self._alphas = {
            cat: np.array([p.checkins + 1 for p in members], dtype=float)
            for cat, members in grouped.items()
        }

    @classmethod
    def from_places(cls, places: PlaceSet) -> "CategoryModel":
        by_cat: dict[PlaceCategory, list[Place]] = {c: [] for c in CATEGORY_ORDER}
        for p in places:
            by_cat[p.category].append(p)
        return cls(by_cat)

    def places_in(self, cat: PlaceCategory) -> tuple[Place, ...]:
        return self._by_category[cat]

    def alphas(self, cat: PlaceCategory) -> np.ndarray:
        return self._alphas[cat]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(self._by_category[c]) for c in CATEGORY_ORDER)


def max_epsilon(counts: Sequence[int]) -> float:
    """Largest diagonal weight the given counts admit (exclusive bound)."""
    bound = 1.0
    for i in range(N_CATEGORIES):
        allowed = ALLOWED_TARGETS[i]
        m_i = sum(counts[j] for j in allowed)
        if m_i <= 0:
            raise ModelError(f"no places reachable from {CATEGORY_ORDER[i].value}")
        for j in allowed:
            bound = min(bound, len(allowed) * counts[j] / m_i)
    return bound


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic category transition matrix.

    Diagonal entries equal epsilon, Home<->Work entries are exactly zero,
    and every row sums to one."""

    probs: tuple[tuple[float, ...], ...]
    epsilon: float

    def __post_init__(self):
        if len(self.probs) != N_CATEGORIES or any(len(r) != N_CATEGORIES for r in self.probs):
            raise ValueError(f"matrix must be {N_CATEGORIES}x{N_CATEGORIES}")
        for i, row in enumerate(self.probs):
            if any(w < 0.0 or w > 1.0 for w in row):
                raise ValueError(f"row {i} has entries outside [0, 1]")
            if abs(sum(row) - 1.0) > 1e-9:
                raise ValueError(f"row {i} sums to {sum(row)!r}, not 1")
            if abs(row[i] - self.epsilon) > 1e-12:
                raise ValueError(f"diagonal entry {i} is {row[i]!r}, expected epsilon")
        if self.probs[_HOME][_WORK] != 0.0 or self.probs[_WORK][_HOME] != 0.0:
            raise ValueError("Home<->Work transitions must be zero")

    def as_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)

    def row(self, cat: PlaceCategory) -> tuple[float, ...]:
        return self.probs[CATEGORY_ORDER.index(cat)]


def transition_from_counts(counts: Sequence[int], epsilon: float = 0.1) -> TransitionMatrix:
    """Build the transition matrix from per-category place counts.

    Off-diagonal weight towards an allowed target j from row i is
    N_j / M_i - epsilon / Z_i, where M_i sums the counts of the allowed
    targets and Z_i is how many there are.  Rows sum to one by
    construction.

    Raises:
        ModelError: When epsilon is out of range or large enough to push
            some entry negative.
    """
    if len(counts) != N_CATEGORIES:
        raise ModelError(f"expected {N_CATEGORIES} counts, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise ModelError("category counts must be >= 0")
    if not 0.0 < epsilon < 1.0:
        raise ModelError(f"epsilon must be in (0, 1), got {epsilon}")
    rows = []
    for i in range(N_CATEGORIES):
        allowed = ALLOWED_TARGETS[i]
        z_i = len(allowed)
        m_i = sum(counts[j] for j in allowed)
        if m_i <= 0:
            raise ModelError(f"no places reachable from {CATEGORY_ORDER[i].value}")
        row = [0.0] * N_CATEGORIES
        row[i] = epsilon
        for j in allowed:
            w = counts[j] / m_i - epsilon / z_i
            if w < 0.0:
                raise ModelError(
                    f"epsilon {epsilon} makes {CATEGORY_ORDER[i].value}->"
                    f"{CATEGORY_ORDER[j].value} negative; this model needs "
                    f"epsilon < {max_epsilon(counts):.6g}")
            row[j] = w
        rows.append(tuple(row))
    return TransitionMatrix(tuple(rows), epsilon)


def build_transition_matrix(model: CategoryModel, epsilon: float = 0.1) -> TransitionMatrix:
    return transition_from_counts(model.counts, epsilon)


@dataclass(frozen=True)
class CategoryDistribution:
    """A probability vector over the five categories, in the fixed order."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.probs) != N_CATEGORIES:
            raise ValueError(f"expected {N_CATEGORIES} probabilities")
        if any(p < 0.0 for p in self.probs):
            raise ValueError("probabilities must be >= 0")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")

    def as_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)


def stationary_distribution(matrix: TransitionMatrix, tol: float = 1e-12,
                            max_iter: int = 1_000_000) -> CategoryDistribution:
    """Stationary distribution by power iteration from a uniform start.

    Iterates pi <- pi P until the L1 change drops below tol.

    Raises:
        ConvergenceError: If the tolerance is not met within max_iter.
    """
    p = matrix.as_array()
    pi = np.full(N_CATEGORIES, 1.0 / N_CATEGORIES)
    for _ in range(max_iter):
        nxt = pi @ p
        if np.abs(nxt - pi).sum() < tol:
            nxt /= nxt.sum()
            return CategoryDistribution(tuple(float(v) for v in nxt))
        pi = nxt
    raise ConvergenceError(f"power iteration did not reach {tol} within {max_iter} steps")


class RngStream:
    """A deterministic random stream with the few draws sampling needs."""

    def __init__(self, generator: np.random.Generator):
        self._gen = generator

    @classmethod
    def from_seed(cls, master_seed: int, index: int = 0) -> "RngStream":
        """Stream number `index` of the family rooted at master_seed.
        Streams with different indices are statistically independent."""
        seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
        return cls(np.random.Generator(np.random.PCG64(seq)))

    def uniform(self) -> float:
        return float(self._gen.random())

    def integer(self, n: int) -> int:
        return int(self._gen.integers(n))

    def gammas(self, shapes: np.ndarray) -> np.ndarray:
        return self._gen.gamma(shapes)

    def categorical(self, weights: Sequence[float] | np.ndarray) -> int:
        """Index draw proportional to non-negative weights (any scale)."""
        c = np.cumsum(np.asarray(weights, dtype=float))
        if c[-1] <= 0.0:
            raise SamplingError("categorical weights sum to zero")
        return int(np.searchsorted(c, self._gen.random() * c[-1], side="right"))


def sample_weighted_place(places: Sequence[Place], rng: RngStream,
                          alphas: np.ndarray | None = None) -> Place:
    """Draw one place by a fresh Dirichlet weighting over check-ins.

    Weights come from Gamma(checkins + 1) variates, normalised; a place's
    long-run pick rate is (checkins + 1) / sum(checkins + 1).
    """
    if not places:
        raise SamplingError("cannot sample from an empty category")
    if alphas is None:
        alphas = np.array([p.checkins + 1 for p in places], dtype=float)
    weights = rng.gammas(alphas)
    return places[rng.categorical(weights)]


def sample_recurring(model: CategoryModel, rng: RngStream) -> tuple[MovementPair, MovementPair]:
    """One commute: a uniform home, a popularity-weighted workplace, and
    both orientations of the trip between them."""
    homes = model.places_in(PlaceCategory.HOME)
    works = model.places_in(PlaceCategory.WORK)
    if not homes or not works:
        raise SamplingError("recurring movements need Home and Work places")
    home = homes[rng.integer(len(homes))]
    work = sample_weighted_place(works, rng, model.alphas(PlaceCategory.WORK))
    kind = MovementKind.RECURRING
    return MovementPair(home, work, kind), MovementPair(work, home, kind)


def sample_nonrecurring(model: CategoryModel, matrix: TransitionMatrix,
                        rng: RngStream, max_retries: int = 100) -> MovementPair:
    """One errand: uniform start category, weighted start place, end
    category from the start's matrix row, weighted end place.

    When the end lands on the start place (possible only inside one
    category) the end draw is repeated, keeping the category fixed.
    """
    c_start = CATEGORY_ORDER[rng.integer(N_CATEGORIES)]
    starts = model.places_in(c_start)
    if not starts:
        raise SamplingError(f"no places in category {c_start.value}")
    l_start = sample_weighted_place(starts, rng, model.alphas(c_start))
    c_end = CATEGORY_ORDER[rng.categorical(matrix.row(c_start))]
    ends = model.places_in(c_end)
    if not ends:
        raise SamplingError(f"no places in category {c_end.value}")
    for _ in range(max_retries):
        l_end = sample_weighted_place(ends, rng, model.alphas(c_end))
        if l_end.id != l_start.id:
            return MovementPair(l_start, l_end, MovementKind.NONRECURRING)
    raise SamplingError(
        f"could not draw an end distinct from {l_start.id} in {c_end.value}")


def _movements_chunk(model: CategoryModel, matrix: TransitionMatrix,
                     kind: MovementKind, master_seed: int,
                     indices: Sequence[int]) -> list[MovementPair]:
    out: list[MovementPair] = []
    if kind is MovementKind.RECURRING:
        # substream k drives commute k, which yields movements 2k and 2k+1
        for k in indices:
            rng = RngStream.from_seed(master_seed, k)
            out.extend(sample_recurring(model, rng))
    else:
        for k in indices:
            rng = RngStream.from_seed(master_seed, k)
            out.append(sample_nonrecurring(model, matrix, rng))
    return out


def generate_movements(model: CategoryModel, matrix: TransitionMatrix,
                       kind: MovementKind, count: int, master_seed: int,
                       workers: int = 1) -> list[MovementPair]:
    """Generate `count` movements of one kind.

    Each draw runs on its own seed substream, so the output is a pure
    function of (model, matrix, kind, count, master_seed) no matter how
    many workers share the job.  Recurring commutes contribute both
    orientations; an odd count drops the final return leg.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return []
    n_draws = (count + 1) // 2 if kind is MovementKind.RECURRING else count
    indices = range(n_draws)
    if workers <= 1 or n_draws < 64:
        movements = _movements_chunk(model, matrix, kind, master_seed, indices)
    else:
        chunks = np.array_split(np.arange(n_draws), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_movements_chunk,
                             *zip(*[(model, matrix, kind, master_seed, list(c))
                                    for c in chunks if len(c)]))
            movements = [m for part in parts for m in part]
    return movements[:count]


def write_movements_csv(pairs: Iterable[MovementPair], path: str | FsPath) -> None:
    """Write movements with start/end ids and coordinates."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["idx", "kind", "start_id", "end_id",
                         "start_lat", "start_lon", "end_lat", "end_lon"])
        for idx, pair in enumerate(pairs):
            writer.writerow([
                idx, pair.kind.value, pair.start.id, pair.end.id,
                repr(pair.start.geo.lat), repr(pair.start.geo.lon),
                repr(pair.end.geo.lat), repr(pair.end.geo.lon),
            ])
