import numpy as np
import pytest

from webwalk.dataset import Place, PlaceCategory, PlaceSet, SynthSpec, generate_synthetic_city
from webwalk.errors import ModelError, SamplingError
from webwalk.geo import GeoCoordinate, Region
from webwalk.mobility import (
    ALLOWED_TARGETS,
    CATEGORY_ORDER,
    CategoryModel,
    MovementKind,
    MovementPair,
    RngStream,
    TransitionMatrix,
    build_transition_matrix,
    generate_movements,
    max_epsilon,
    sample_nonrecurring,
    sample_recurring,
    sample_weighted_place,
    stationary_distribution,
    transition_from_counts,
    write_movements_csv,
)

SEED = 2024
REGION = Region.from_center(GeoCoordinate(53.35, -6.26), 2000.0, 2000.0)
CITY = generate_synthetic_city(
    SynthSpec(region=REGION, places=300, website_ratio=0.4), SEED)
MODEL = CategoryModel.from_places(CITY)


def null_space_stationary(p):
    """Independent oracle: least-squares solve of pi (P - I) = 0, sum pi = 1."""
    n = p.shape[0]
    a = np.vstack([p.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    return pi


def test_allowed_targets_structure():
    home, work = 0, 1
    assert tuple(len(t) for t in ALLOWED_TARGETS) == (3, 3, 4, 4, 4)
    for i, targets in enumerate(ALLOWED_TARGETS):
        assert i not in targets
    assert work not in ALLOWED_TARGETS[home]
    assert home not in ALLOWED_TARGETS[work]


def test_matrix_matches_hand_computation():
    # counts (2,3,4,5,6), eps 0.05: Home row is (0.05, 0, 0.25, 19/60, 23/60)
    m = transition_from_counts([2, 3, 4, 5, 6], epsilon=0.05)
    row = m.probs[0]
    assert row[0] == pytest.approx(0.05, abs=1e-15)
    assert row[1] == 0.0
    assert row[2] == pytest.approx(4 / 15 - 0.05 / 3, abs=1e-12)
    assert row[3] == pytest.approx(5 / 15 - 0.05 / 3, abs=1e-12)
    assert row[4] == pytest.approx(6 / 15 - 0.05 / 3, abs=1e-12)


def test_matrix_matches_loop_oracle():
    rng = np.random.default_rng(SEED)
    for _ in range(25):
        counts = rng.integers(1, 500, size=5).tolist()
        eps = float(rng.uniform(0.3, 0.9)) * max_epsilon(counts)
        got = transition_from_counts(counts, eps).as_array()
        want = np.zeros((5, 5))
        for i in range(5):
            allowed = [j for j in range(5) if j != i and {i, j} != {0, 1}]
            m_i = sum(counts[j] for j in allowed)
            want[i, i] = eps
            for j in allowed:
                want[i, j] = counts[j] / m_i - eps / len(allowed)
        assert np.max(np.abs(got - want)) < 1e-12
        assert np.allclose(got.sum(axis=1), 1.0, atol=1e-12)


def test_matrix_structure_invariants():
    m = transition_from_counts([10, 20, 30, 40, 50], epsilon=0.1)
    a = m.as_array()
    assert a[0, 1] == 0.0 and a[1, 0] == 0.0
    assert np.allclose(np.diag(a), 0.1, atol=1e-15)
    assert m.row(PlaceCategory.FOOD) == m.probs[2]


def test_epsilon_bound_enforced():
    counts = [100, 100, 100, 100, 1]
    bound = max_epsilon(counts)
    transition_from_counts(counts, epsilon=bound * 0.999)
    with pytest.raises(ModelError, match="epsilon"):
        transition_from_counts(counts, epsilon=bound * 1.001)


@pytest.mark.parametrize("counts,eps", [
    ([1, 2, 3], 0.1),
    ([1, 2, 3, 4, -1], 0.1),
    ([1, 2, 3, 4, 5], 0.0),
    ([1, 2, 3, 4, 5], 1.0),
])
def test_transition_from_counts_rejects(counts, eps):
    with pytest.raises(ModelError):
        transition_from_counts(counts, epsilon=eps)


def test_unreachable_category_rejected():
    # from Home only Food/Entertainment/Others are reachable; all empty
    with pytest.raises(ModelError):
        transition_from_counts([5, 5, 0, 0, 0], epsilon=0.1)


def test_transition_matrix_validates_rows():
    good = transition_from_counts([10, 20, 30, 40, 50], epsilon=0.1)
    rows = [list(r) for r in good.probs]
    rows[2][0] += 0.01
    with pytest.raises(ValueError, match="sums"):
        TransitionMatrix(tuple(tuple(r) for r in rows), 0.1)
    with pytest.raises(ValueError, match="epsilon"):
        TransitionMatrix(good.probs, 0.2)
    bad = [list(r) for r in good.probs]
    bad[0][1], bad[0][2] = bad[0][2], 0.0
    with pytest.raises(ValueError, match="Home"):
        TransitionMatrix(tuple(tuple(r) for r in bad), 0.1)


def test_stationary_is_fixed_point():
    m = build_transition_matrix(MODEL, epsilon=0.1)
    pi = np.array(stationary_distribution(m).probs)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(pi @ m.as_array() - pi)) < 1e-10


def test_stationary_matches_null_space_oracle():
    rng = np.random.default_rng(SEED + 1)
    for _ in range(30):
        counts = rng.integers(1, 400, size=5).tolist()
        eps = float(rng.uniform(0.3, 0.9)) * max_epsilon(counts)
        m = transition_from_counts(counts, eps)
        pi = np.array(stationary_distribution(m).probs)
        want = null_space_stationary(m.as_array())
        assert np.max(np.abs(pi - want)) < 1e-8


def test_category_model_groups_and_sorts():
    foods = MODEL.places_in(PlaceCategory.FOOD)
    assert all(p.category is PlaceCategory.FOOD for p in foods)
    assert [p.id for p in foods] == sorted(p.id for p in foods)
    assert MODEL.counts == tuple(
        len(MODEL.places_in(c)) for c in CATEGORY_ORDER)
    assert sum(MODEL.counts) == len(CITY)
    alphas = MODEL.alphas(PlaceCategory.FOOD)
    assert np.array_equal(alphas, [p.checkins + 1 for p in foods])


def test_rng_stream_reproducible_and_independent():
    a = RngStream.from_seed(99, 4)
    b = RngStream.from_seed(99, 4)
    c = RngStream.from_seed(99, 5)
    seq_a = [a.uniform() for _ in range(8)]
    seq_b = [b.uniform() for _ in range(8)]
    seq_c = [c.uniform() for _ in range(8)]
    assert seq_a == seq_b
    assert seq_a != seq_c


def test_categorical_edge_cases():
    rng = RngStream.from_seed(5, 0)
    assert all(rng.categorical([0.0, 0.0, 3.0]) == 2 for _ in range(20))
    with pytest.raises(SamplingError):
        rng.categorical([0.0, 0.0])


def test_weighted_place_marginal_rates():
    geo = GeoCoordinate(53.35, -6.26)
    places = [
        Place("a", "a", geo, PlaceCategory.FOOD, 0),
        Place("b", "b", geo, PlaceCategory.FOOD, 1),
        Place("c", "c", geo, PlaceCategory.FOOD, 5),
    ]
    rng = RngStream.from_seed(SEED, 0)
    n = 30_000
    hits = {"a": 0, "b": 0, "c": 0}
    for _ in range(n):
        hits[sample_weighted_place(places, rng).id] += 1
    # expected rates (checkins + 1) / 9
    assert hits["a"] / n == pytest.approx(1 / 9, abs=0.01)
    assert hits["b"] / n == pytest.approx(2 / 9, abs=0.01)
    assert hits["c"] / n == pytest.approx(6 / 9, abs=0.01)


def test_sample_weighted_rejects_empty():
    with pytest.raises(SamplingError):
        sample_weighted_place([], RngStream.from_seed(1, 0))


def test_recurring_sample_shape():
    rng = RngStream.from_seed(SEED, 0)
    out, back = sample_recurring(MODEL, rng)
    assert out.start.category is PlaceCategory.HOME
    assert out.end.category is PlaceCategory.WORK
    assert back.start is out.end and back.end is out.start
    assert out.kind is MovementKind.RECURRING


def test_nonrecurring_statistics():
    m = build_transition_matrix(MODEL, epsilon=0.1)
    n = 12_000
    start_counts = dict.fromkeys(CATEGORY_ORDER, 0)
    same_cat = 0
    for k in range(n):
        pair = sample_nonrecurring(MODEL, m, RngStream.from_seed(SEED, k))
        start_counts[pair.start.category] += 1
        same_cat += pair.start.category is pair.end.category
        assert {pair.start.category, pair.end.category} != {
            PlaceCategory.HOME, PlaceCategory.WORK}
        assert pair.start.id != pair.end.id
    for cat in CATEGORY_ORDER:
        assert start_counts[cat] / n == pytest.approx(0.2, abs=0.015)
    assert same_cat / n == pytest.approx(0.1, abs=0.015)


class _ScriptedStream:
    """Drives the sampler down one fixed branch."""

    def __init__(self, integer_out, categorical_outs):
        self._int = integer_out
        self._cats = list(categorical_outs)

    def integer(self, n):
        return self._int

    def gammas(self, shapes):
        return np.asarray(shapes, dtype=float)

    def categorical(self, weights):
        return self._cats.pop(0) if self._cats else 0


def test_single_place_category_collision_exhausts_retries():
    geo = GeoCoordinate(53.35, -6.26)
    places = PlaceSet([
        Place("h1", "h1", geo, PlaceCategory.HOME, 0),
        Place("h2", "h2", geo, PlaceCategory.HOME, 0),
        Place("w1", "w1", geo, PlaceCategory.WORK, 0),
        Place("w2", "w2", geo, PlaceCategory.WORK, 0),
        Place("f1", "f1", geo, PlaceCategory.FOOD, 0),
        Place("f2", "f2", geo, PlaceCategory.FOOD, 0),
        Place("e1", "e1", geo, PlaceCategory.ENTERTAINMENT, 0),
        Place("e2", "e2", geo, PlaceCategory.ENTERTAINMENT, 0),
        Place("o1", "o1", geo, PlaceCategory.OTHERS, 0),
    ])
    model = CategoryModel.from_places(places)
    matrix = build_transition_matrix(model, epsilon=0.1)
    # start in Others (sole place), then stay in Others: no distinct end
    stream = _ScriptedStream(integer_out=4, categorical_outs=[0, 4])
    with pytest.raises(SamplingError, match="distinct"):
        sample_nonrecurring(model, matrix, stream)


def test_generate_movements_deterministic():
    m = build_transition_matrix(MODEL, epsilon=0.1)
    for kind in MovementKind:
        a = generate_movements(MODEL, m, kind, 40, master_seed=7)
        b = generate_movements(MODEL, m, kind, 40, master_seed=7)
        other = generate_movements(MODEL, m, kind, 40, master_seed=8)
        assert [(p.start.id, p.end.id) for p in a] == [
            (p.start.id, p.end.id) for p in b]
        assert [(p.start.id, p.end.id) for p in a] != [
            (p.start.id, p.end.id) for p in other]


def test_generate_movements_worker_count_invariant():
    m = build_transition_matrix(MODEL, epsilon=0.1)
    for kind, count in ((MovementKind.RECURRING, 140),
                        (MovementKind.NONRECURRING, 70)):
        serial = generate_movements(MODEL, m, kind, count, master_seed=11)
        pooled = generate_movements(MODEL, m, kind, count, master_seed=11,
                                    workers=3)
        assert [(p.start.id, p.end.id) for p in serial] == [
            (p.start.id, p.end.id) for p in pooled]


def test_recurring_pairing_and_odd_count():
    m = build_transition_matrix(MODEL, epsilon=0.1)
    odd = generate_movements(MODEL, m, MovementKind.RECURRING, 5, master_seed=3)
    assert len(odd) == 5
    for k in range(2):
        assert odd[2 * k].start.id == odd[2 * k + 1].end.id
        assert odd[2 * k].end.id == odd[2 * k + 1].start.id
    # the dropped return leg does not disturb the shared draws
    even = generate_movements(MODEL, m, MovementKind.RECURRING, 6, master_seed=3)
    assert [(p.start.id, p.end.id) for p in even[:5]] == [
        (p.start.id, p.end.id) for p in odd]


def test_generate_movements_count_bounds():
    m = build_transition_matrix(MODEL, epsilon=0.1)
    assert generate_movements(MODEL, m, MovementKind.RECURRING, 0, 1) == []
    with pytest.raises(ValueError):
        generate_movements(MODEL, m, MovementKind.RECURRING, -1, 1)


def test_movement_pair_rejects_loop():
    place = next(iter(CITY))
    with pytest.raises(ValueError):
        MovementPair(place, place, MovementKind.NONRECURRING)


def test_movements_csv_round_trip(tmp_path):
    m = build_transition_matrix(MODEL, epsilon=0.1)
    pairs = generate_movements(MODEL, m, MovementKind.NONRECURRING, 10, 5)
    target = tmp_path / "movements.csv"
    write_movements_csv(pairs, target)
    lines = target.read_text().splitlines()
    assert lines[0] == "idx,kind,start_id,end_id,start_lat,start_lon,end_lat,end_lon"
    assert len(lines) == 11
    first = lines[1].split(",")
    assert first[1] == "nonrecurring"
    assert float(first[4]) == pairs[0].start.geo.lat
