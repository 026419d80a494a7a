import numpy as np
import pytest

from webwalk.dataset import (
    CATEGORY_ORDER,
    Place,
    PlaceCategory,
    PlaceSet,
    SynthSpec,
    VirtualLocation,
    dataset_stats,
    export_places,
    filter_virtual,
    generate_synthetic_city,
    import_places,
)
from webwalk.coverage import occupancy_histogram, square_occupancy
from webwalk.errors import SchemaError
from webwalk.geo import GeoCoordinate, Region

SEED = 9022


def _place(pid, cat=PlaceCategory.FOOD, checkins=5, website=None,
           lat=53.3, lon=-6.3):
    return Place(pid, f"name-{pid}", GeoCoordinate(lat, lon), cat, checkins, website)


def test_place_validation():
    with pytest.raises(ValueError):
        _place("")
    with pytest.raises(ValueError):
        _place("a", checkins=-1)
    with pytest.raises(ValueError):
        _place("a", website="not a url")
    with pytest.raises(ValueError):
        _place("a", website="ftp://x.example")
    assert _place("a", website="https://x.example/page").is_virtual
    assert not _place("a").is_virtual


def test_placeset_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        PlaceSet([_place("a"), _place("a")])


def test_virtual_location_domain():
    v = VirtualLocation.from_place(_place("a", website="https://Shop.Example.IE/menu"))
    assert v.domain == "shop.example.ie"
    assert v.url == "https://Shop.Example.IE/menu"
    with pytest.raises(ValueError):
        VirtualLocation.from_place(_place("b"))


def test_dataset_stats_fixed_order():
    places = PlaceSet([
        _place("h1", PlaceCategory.HOME, 2),
        _place("h2", PlaceCategory.HOME, 3, website="https://h2.example"),
        _place("w1", PlaceCategory.WORK, 10),
        _place("f1", PlaceCategory.FOOD, 7, website="https://f1.example"),
        _place("o1", PlaceCategory.OTHERS, 0),
    ])
    stats = dataset_stats(places)
    assert stats.place_count == 5
    assert stats.virtual_count == 2
    assert stats.virtual_ratio == 0.4
    assert list(stats.category_places) == list(CATEGORY_ORDER)
    assert [stats.category_places[c] for c in CATEGORY_ORDER] == [2, 1, 1, 0, 1]
    assert [stats.category_checkins[c] for c in CATEGORY_ORDER] == [5, 10, 7, 0, 0]


def test_stats_empty_ratio():
    assert dataset_stats(PlaceSet([])).virtual_ratio == 0.0


def test_filter_virtual_sorted():
    places = PlaceSet([
        _place("zz", website="https://zz.example"),
        _place("aa", website="https://aa.example"),
        _place("mm"),
    ])
    assert [v.id for v in filter_virtual(places)] == ["aa", "zz"]


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_round_trip(tmp_path, fmt):
    places = PlaceSet([
        _place("a", PlaceCategory.HOME, 0, None, 53.123456789, -6.987654321),
        _place("b", PlaceCategory.ENTERTAINMENT, 42, "https://b.example.ie/x?q=1"),
        Place("c", 'comma, "quoted"', GeoCoordinate(53.0, -6.0),
              PlaceCategory.OTHERS, 1, None),
    ])
    target = tmp_path / f"places.{fmt}"
    export_places(places, target, fmt)
    result = import_places(target, fmt)
    assert result.diagnostics == ()
    assert result.places == places


def test_import_rejects_bad_header(tmp_path):
    target = tmp_path / "bad.csv"
    target.write_text("id,name,lat,lon,category,checkins\n")
    with pytest.raises(SchemaError) as exc:
        import_places(target, "csv")
    assert exc.value.line == 1


def test_import_rejects_short_row(tmp_path):
    target = tmp_path / "short.csv"
    target.write_text("id,name,lat,lon,category,checkins,website\n"
                      "a,Name,53.0,-6.0,Food\n")
    with pytest.raises(SchemaError) as exc:
        import_places(target, "csv")
    assert exc.value.line == 2


def test_import_drops_invalid_rows_with_diagnostics(tmp_path):
    target = tmp_path / "mixed.csv"
    target.write_text(
        "id,name,lat,lon,category,checkins,website\n"
        "ok1,Fine,53.0,-6.0,Food,3,\n"
        "bad1,Polar,95.0,-6.0,Food,3,\n"
        "bad2,Alien,53.0,-6.0,Cinema,3,\n"
        "bad3,Negative,53.0,-6.0,Food,-1,\n"
        "ok1,Duplicate,53.0,-6.0,Food,3,\n"
        "ok2,Fine,53.1,-6.1,Work,0,https://ok2.example\n")
    result = import_places(target, "csv")
    assert [p.id for p in result.places] == ["ok1", "ok2"]
    assert len(result.diagnostics) == 4
    assert "line 3" in result.diagnostics[0]
    assert "line 6" in result.diagnostics[3]
    assert "duplicate" in result.diagnostics[3]


def test_import_jsonl_structural_error_has_line(tmp_path):
    target = tmp_path / "broken.jsonl"
    target.write_text('{"id": "a", "name": "x", "lat": 53.0, "lon": -6.0, '
                      '"category": "Food", "checkins": 1, "website": null}\n'
                      "not json at all\n")
    with pytest.raises(SchemaError) as exc:
        import_places(target, "jsonl")
    assert exc.value.line == 2


def test_import_jsonl_missing_key_is_structural(tmp_path):
    target = tmp_path / "missing.jsonl"
    target.write_text('{"id": "a", "lat": 53.0}\n')
    with pytest.raises(SchemaError) as exc:
        import_places(target, "jsonl")
    assert exc.value.line == 1


def test_import_jsonl_website_key_optional(tmp_path):
    target = tmp_path / "nosite.jsonl"
    target.write_text('{"id": "a", "name": "x", "lat": 53.0, "lon": -6.0, '
                      '"category": "Food", "checkins": 1}\n')
    result = import_places(target, "jsonl")
    assert result.places.get("a").website is None


def test_import_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        import_places(tmp_path / "x.xml", "xml")


REGION = Region.from_center(GeoCoordinate(53.35, -6.26), 2000.0, 2000.0)


def test_synth_deterministic():
    spec = SynthSpec(region=REGION, places=250, website_ratio=0.4)
    a = generate_synthetic_city(spec, 5)
    b = generate_synthetic_city(spec, 5)
    c = generate_synthetic_city(spec, 6)
    assert a == b
    assert a != c


def test_synth_website_quota_exact():
    # Galway-shaped ratio: 1455 of 3692
    spec = SynthSpec(region=REGION, places=3692, website_ratio=1455 / 3692)
    places = generate_synthetic_city(spec, SEED)
    stats = dataset_stats(places)
    assert stats.place_count == 3692
    assert stats.virtual_count == 1455
    assert abs(stats.virtual_ratio - 0.394) < 5e-4


def test_synth_category_counts_sum():
    spec = SynthSpec(region=REGION, places=997, website_ratio=0.3)
    stats = dataset_stats(generate_synthetic_city(spec, SEED))
    counts = [stats.category_places[c] for c in CATEGORY_ORDER]
    assert sum(counts) == 997
    for count, weight in zip(counts, spec.category_mix):
        assert abs(count - weight * 997) <= 1.0


def test_synth_places_inside_region():
    spec = SynthSpec(region=REGION, places=300, website_ratio=0.5)
    for p in generate_synthetic_city(spec, SEED):
        assert REGION.contains(p.geo)


def test_synth_checkins_zipf_profile():
    spec = SynthSpec(region=REGION, places=200, website_ratio=0.0,
                     checkin_scale=1000, zipf_s=1.0)
    places = generate_synthetic_city(spec, SEED)
    for cat in CATEGORY_ORDER:
        members = sorted((p.checkins for p in places if p.category is cat), reverse=True)
        expected = sorted((round(1000 / r) for r in range(1, len(members) + 1)), reverse=True)
        assert members == expected


def test_synth_clusters_heavier_tail():
    base = dict(region=REGION, places=500, website_ratio=1.0,
                cluster_spread_m=100.0)
    clustered = generate_synthetic_city(SynthSpec(clusters=2, **base), SEED)
    uniform = generate_synthetic_city(SynthSpec(clusters=0, **base), SEED)
    occ_c = square_occupancy(filter_virtual(clustered), REGION, 100.0)
    occ_u = square_occupancy(filter_virtual(uniform), REGION, 100.0)
    max_c = max(k for k, _ in occupancy_histogram(occ_c))
    max_u = max(k for k, _ in occupancy_histogram(occ_u))
    assert max_c > max_u


def test_synth_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(region=REGION, places=0, website_ratio=0.4)
    with pytest.raises(ValueError):
        SynthSpec(region=REGION, places=10, website_ratio=1.5)
    with pytest.raises(ValueError):
        SynthSpec(region=REGION, places=10, website_ratio=0.4,
                  category_mix=(0.5, 0.5, 0.5, 0.0, 0.0))
    with pytest.raises(ValueError):
        SynthSpec(region=REGION, places=10, website_ratio=0.4, clusters=-1)
    with pytest.raises(ValueError):
        SynthSpec(region=REGION, places=10, website_ratio=0.4, cluster_spread_m=0.0)
