import csv
import hashlib
import json

import pytest

from webwalk.cli import config_hash, load_config, main
from webwalk.dataset import SynthSpec, export_places, generate_synthetic_city
from webwalk.errors import ConfigError
from webwalk.geo import GeoCoordinate, Region

PIPELINE_TOML = """\
[run]
dataset = "demo"
seed = 5
threads = 1

[dataset]
places = 300
website_ratio = 0.5

[simulate]
count = 120

[analyze]
r_v_m = [50.0, 100.0]
t_v_min_s = [60.0]
l_max_km = [3.0]
raster_m = 10.0
sides_m = [100.0, 200.0]
min_sample = 5
"""


def write_config(tmp_path, text=PIPELINE_TOML, name="webwalk.toml"):
    cfg = tmp_path / name
    cfg.write_text(text)
    return str(cfg)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_config_precedence(tmp_path):
    cfg_path = write_config(tmp_path, "[run]\nseed = 7\nout = \"fromfile\"\n")
    cfg = load_config(cfg_path, {"run": {"seed": 9, "out": None}})
    assert cfg.run.seed == 9          # CLI beats file
    assert cfg.run.out == "fromfile"  # None override leaves the file value
    assert cfg.run.dataset == "synthcity"
    assert cfg.model.epsilon == 0.1


def test_config_collects_every_problem(tmp_path):
    cfg_path = write_config(
        tmp_path,
        "[dataset]\nplaces = -1\n\n[model]\nepsilon = 3.0\n\n[analyze]\nr_v_m = []\n")
    with pytest.raises(ConfigError) as err:
        load_config(cfg_path, {})
    message = str(err.value)
    assert "places" in message
    assert "epsilon" in message
    assert "r_v_m" in message


def test_config_rejects_unknown_names(tmp_path):
    cfg_path = write_config(tmp_path, "[run]\nseeed = 3\n\n[typo]\nx = 1\n")
    with pytest.raises(ConfigError) as err:
        load_config(cfg_path, {})
    assert "seeed" in str(err.value)
    assert "[typo]" in str(err.value)


def test_config_conditional_requirements():
    with pytest.raises(ConfigError, match="needs a path"):
        load_config(None, {"dataset": {"source": "import"}})
    with pytest.raises(ConfigError, match="crawl_source"):
        load_config(None, {"dataset": {"source": "crawl"}})
    with pytest.raises(ConfigError, match="replay_file"):
        load_config(None, {"simulate": {"provider": "replay"}})


def test_config_hash_tracks_content():
    a = load_config(None, {"run": {"seed": 1}})
    b = load_config(None, {"run": {"seed": 1}})
    c = load_config(None, {"run": {"seed": 2}})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


def test_usage_errors_exit_one(tmp_path, capsys):
    assert main(["ingest", "--config", str(tmp_path / "absent.toml")]) == 1
    bad_toml = tmp_path / "bad.toml"
    bad_toml.write_text("not toml [[[")
    assert main(["ingest", "--config", str(bad_toml)]) == 1
    assert main(["simulate", "--provider", "teleport"]) == 1
    assert main([]) == 1
    assert main(["bogus"]) == 1
    assert "webwalk:" in capsys.readouterr().err


def test_stage_failures_map_to_stage_codes(tmp_path, capsys):
    out = tmp_path / "run"
    missing = str(tmp_path / "nope.csv")
    assert main(["ingest", "--source", "import", "--input", missing,
                 "--out", str(out)]) == 2
    assert main(["simulate", "--out", str(out)]) == 3
    cfg = write_config(tmp_path)
    assert main(["ingest", "--config", cfg, "--out", str(out)]) == 0
    assert main(["analyze", "--config", cfg, "--out", str(out)]) == 4
    assert main(["report", "--out", str(tmp_path / "void")]) == 1
    capsys.readouterr()


def test_full_pipeline(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "run"

    assert main(["ingest", "--config", cfg, "--out", str(out)]) == 0
    echo = capsys.readouterr().out
    assert "places: 300" in echo
    stats = read_csv(out / "stats.csv")
    assert stats[0] == ["dataset", "scope", "places", "checkins", "ratio"]
    total = next(r for r in stats if r[1] == "total")
    assert total[2] == "300"
    virtual = next(r for r in stats if r[1] == "virtual")
    assert float(virtual[4]) == pytest.approx(0.5, abs=0.01)

    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    echo = capsys.readouterr().out
    assert "stationary: Home=" in echo
    assert len(read_csv(out / "movements.csv")) == 1 + 240
    assert len((out / "paths.jsonl").read_text().splitlines()) == 240
    cdf = read_csv(out / "path_cdf.csv")
    assert cdf[0] == ["dataset", "kind", "bin_km", "count"]
    assert {r[1] for r in cdf[1:]} == {"recurring", "nonrecurring"}
    manifest = json.loads((out / "manifest_simulate.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 5
    assert len(manifest["stationary"]) == 5
    assert manifest["config"]["run"]["dataset"] == "demo"
    assert manifest["config_hash"]

    assert main(["analyze", "--config", cfg, "--out", str(out)]) == 0
    echo = capsys.readouterr().out
    assert "overlap rows: 4 (0 below min sample)" in echo
    overlap = read_csv(out / "overlap.csv")
    assert len(overlap) == 1 + 4
    assert len(read_csv(out / "coverage.csv")) == 1 + 2
    assert (out / "occupancy.csv").exists()
    assert (out / "fits.csv").exists()

    assert main(["analyze", "--config", cfg, "--out", str(out), "--per-path"]) == 0
    capsys.readouterr()
    details = sorted(p.name for p in out.glob("details_*.csv"))
    assert "details_recurring_rv50_tv60.csv" in details
    assert "details_nonrecurring_rv100_tv60.csv" in details
    header = read_csv(out / details[0])[0]
    assert header == ["path_id", "distinct_visited", "parallel_median",
                      "parallel_max", "accumulated_s"]

    assert main(["report", "--config", cfg, "--out", str(out)]) == 0
    capsys.readouterr()
    report = (out / "report.md").read_text()
    assert "# Run summary: demo" in report
    assert "## stats.csv" in report
    assert "manifest_ingest.json" in report
    assert "## overlap.csv" in report


SMALL_TOML = """\
[run]
dataset = "tiny"
seed = 3
threads = 1

[dataset]
places = 200
website_ratio = 0.5

[simulate]
count = 60

[analyze]
r_v_m = [50.0]
t_v_min_s = [60.0]
l_max_km = [3.0]
sides_m = [100.0]
min_sample = 1
"""


def test_pipeline_reruns_byte_identical(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL_TOML)
    digests = []
    for name in ("a", "b"):
        out = tmp_path / name
        for stage in ("ingest", "simulate", "analyze"):
            assert main([stage, "--config", cfg, "--out", str(out)]) == 0
        capsys.readouterr()
        digests.append({
            f: hashlib.sha256((out / f).read_bytes()).hexdigest()
            for f in ("places.csv", "stats.csv", "movements.csv", "paths.jsonl",
                      "path_cdf.csv", "overlap.csv", "coverage.csv",
                      "occupancy.csv", "fits.csv")
        })
    assert digests[0] == digests[1]


def test_ingest_import_reports_rejects(tmp_path, capsys):
    source = tmp_path / "places.csv"
    source.write_text(
        "id,name,lat,lon,category,checkins,website\n"
        "p1,One,53.35,-6.26,Food,10,https://one.example.ie\n"
        "p2,Two,53.36,-6.25,Home,-4,\n"
        "p3,Three,53.34,-6.27,Work,2,\n")
    out = tmp_path / "run"
    rc = main(["ingest", "--source", "import", "--input", str(source),
               "--out", str(out), "--dataset-name", "imported"])
    captured = capsys.readouterr()
    assert rc == 0
    assert "rejected" in captured.err
    rows = read_csv(out / "places.csv")
    assert [r[0] for r in rows[1:]] == ["p1", "p3"]
    manifest = json.loads((out / "manifest_ingest.json").read_text())
    assert manifest["rejected_rows"] == 1


def test_ingest_crawl_source(tmp_path, capsys):
    region = Region.from_center(GeoCoordinate(53.30, -6.28), 500.0, 500.0)
    city = generate_synthetic_city(
        SynthSpec(region=region, places=60, website_ratio=0.5), 13)
    backing = tmp_path / "backing.csv"
    export_places(city, backing, "csv")
    out = tmp_path / "run"
    rc = main(["ingest", "--source", "crawl", "--input", str(backing),
               "--out", str(out)])
    capsys.readouterr()
    assert rc == 0
    assert (out / "crawl_report.csv").exists()
    assert (out / "crawl_checkpoint.jsonl").exists()
    got = [r[0] for r in read_csv(out / "places.csv")[1:]]
    assert got == sorted(p.id for p in city)
    manifest = json.loads((out / "manifest_ingest.json").read_text())
    assert manifest["cells_failed"] == 0
    assert manifest["grid_cells"] > 0
