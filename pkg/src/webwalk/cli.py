"""Command-line pipeline: ingest -> simulate -> analyze -> report.

Configuration comes from a TOML file with CLI overrides on top; every
stage writes its outputs plus a manifest (config hash, seed, version)
into the run directory, and a rerun with the same config reproduces the
files byte for byte.

Exit codes: 0 ok, 1 usage or configuration, 2 ingest failure, 3 simulate
failure, 4 analyze failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import webwalk
from webwalk.coverage import (
    coverage_percent,
    fit_power_law,
    occupancy_histogram,
    square_occupancy,
    write_coverage_csv,
    write_fit_csv,
    write_occupancy_csv,
)
from webwalk.dataset import (
    FilePlacesProvider,
    PlaceSet,
    crawl_places,
    dataset_stats,
    export_places,
    filter_virtual,
    generate_synthetic_city,
    import_places,
    write_crawl_report,
    CATEGORY_ORDER,
    SynthSpec,
)
from webwalk.errors import AnalysisError, ConfigError
from webwalk.geo import GeoCoordinate, Region
from webwalk.mobility import (
    CategoryModel,
    MovementKind,
    build_transition_matrix,
    generate_movements,
    stationary_distribution,
    write_movements_csv,
)
from webwalk.routing import (
    SPEED_5_KMH,
    FileReplayProvider,
    GridWalkProvider,
    StraightLineProvider,
    path_length_cdf,
    read_paths_jsonl,
    route,
    write_paths_jsonl,
)
from webwalk.visits import (
    AnalysisParams,
    SweepSpec,
    run_overlap_analysis,
    write_overlap_csv,
    write_path_details_csv,
)

log = logging.getLogger("webwalk")

# per-stage seed offsets keep the stages' streams apart
_SEED_SYNTH = 0
_SEED_RECURRING = 1
_SEED_NONRECURRING = 2

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INGEST = 2
EXIT_SIMULATE = 3
EXIT_ANALYZE = 4


@dataclass(frozen=True)
class RunSection:
    dataset: str = "synthcity"
    seed: int = 42
    out: str = "results"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)


@dataclass(frozen=True)
class DatasetSection:
    source: str = "synth"
    path: str | None = None
    format: str = "csv"
    # synth
    places: int = 2000
    website_ratio: float = 0.42
    center_lat: float = 53.35
    center_lon: float = -6.26
    width_m: float = 2000.0
    height_m: float = 2000.0
    clusters: int = 3
    cluster_spread_m: float = 150.0
    # crawl
    crawl_source: str | None = None
    grid_resolution_m: float = 250.0
    radar_cap: int = 60


@dataclass(frozen=True)
class ModelSection:
    epsilon: float = 0.1


@dataclass(frozen=True)
class SimulateSection:
    count: int = 5000
    kinds: tuple[str, ...] = ("recurring", "nonrecurring")
    provider: str = "straight"
    replay_file: str | None = None
    speed_m_s: float = SPEED_5_KMH


@dataclass(frozen=True)
class AnalyzeSection:
    r_v_m: tuple[float, ...] = tuple(float(r) for r in range(25, 251, 25))
    t_v_min_s: tuple[float, ...] = (60.0,)
    l_max_km: tuple[float, ...] = (3.0,)
    raster_m: float = 10.0
    sides_m: tuple[float, ...] = tuple(float(s) for s in range(25, 251, 25))
    min_sample: int = 100
    per_path: bool = False


@dataclass(frozen=True)
class AppConfig:
    run: RunSection = field(default_factory=RunSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    analyze: AnalyzeSection = field(default_factory=AnalyzeSection)


_SECTION_TYPES = {
    "run": RunSection,
    "dataset": DatasetSection,
    "model": ModelSection,
    "simulate": SimulateSection,
    "analyze": AnalyzeSection,
}


def _build_section(cls, raw: dict, problems: list[str], name: str):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            problems.append(f"[{name}] unknown key {key!r}")
            continue
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"[{name}] {exc}")
        return cls()


def _validate(cfg: AppConfig, problems: list[str]) -> None:
    if cfg.run.seed < 0:
        problems.append("[run] seed must be >= 0")
    if cfg.run.threads < 1:
        problems.append("[run] threads must be >= 1")
    if not cfg.run.dataset:
        problems.append("[run] dataset name must be non-empty")
    if cfg.dataset.source not in ("synth", "import", "crawl"):
        problems.append(f"[dataset] unknown source {cfg.dataset.source!r}")
    if cfg.dataset.source == "import" and not cfg.dataset.path:
        problems.append("[dataset] source 'import' needs a path")
    if cfg.dataset.source == "crawl" and not cfg.dataset.crawl_source:
        problems.append("[dataset] source 'crawl' needs a crawl_source file")
    if cfg.dataset.format not in ("csv", "jsonl"):
        problems.append(f"[dataset] unknown format {cfg.dataset.format!r}")
    if cfg.dataset.places <= 0:
        problems.append("[dataset] places must be positive")
    if not 0.0 <= cfg.dataset.website_ratio <= 1.0:
        problems.append("[dataset] website_ratio must be within [0, 1]")
    if not 0.0 < cfg.model.epsilon < 1.0:
        problems.append("[model] epsilon must be in (0, 1)")
    if cfg.simulate.count < 0:
        problems.append("[simulate] count must be >= 0")
    for kind in cfg.simulate.kinds:
        if kind not in ("recurring", "nonrecurring"):
            problems.append(f"[simulate] unknown kind {kind!r}")
    if cfg.simulate.provider not in ("straight", "grid", "replay"):
        problems.append(f"[simulate] unknown provider {cfg.simulate.provider!r}")
    if cfg.simulate.provider == "replay" and not cfg.simulate.replay_file:
        problems.append("[simulate] provider 'replay' needs a replay_file")
    if not cfg.simulate.speed_m_s > 0:
        problems.append("[simulate] speed_m_s must be positive")
    for name, vals in (("r_v_m", cfg.analyze.r_v_m),
                       ("t_v_min_s", cfg.analyze.t_v_min_s),
                       ("l_max_km", cfg.analyze.l_max_km),
                       ("sides_m", cfg.analyze.sides_m)):
        if not vals or any(not float(v) > 0 for v in vals):
            problems.append(f"[analyze] {name} must be a non-empty list of positive numbers")
    if not cfg.analyze.raster_m > 0:
        problems.append("[analyze] raster_m must be positive")
    if cfg.analyze.min_sample < 1:
        problems.append("[analyze] min_sample must be >= 1")


def load_config(config_path: str | None, overrides: dict) -> AppConfig:
    """Merge defaults, the TOML file and CLI overrides, then validate the
    whole thing.  Any problem raises ConfigError listing every issue."""
    raw: dict = {}
    if config_path is not None:
        try:
            with open(config_path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {config_path}: {exc}")
    problems: list[str] = []
    for section in raw:
        if section not in _SECTION_TYPES:
            problems.append(f"unknown section [{section}]")
    for section, values in overrides.items():
        merged = dict(raw.get(section, {}))
        merged.update({k: v for k, v in values.items() if v is not None})
        raw[section] = merged
    sections = {
        name: _build_section(cls, raw.get(name, {}), problems, name)
        for name, cls in _SECTION_TYPES.items()
        if name in _SECTION_TYPES
    }
    cfg = AppConfig(**sections)
    _validate(cfg, problems)
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def config_hash(cfg: AppConfig) -> str:
    canonical = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_manifest(cfg: AppConfig, out: FsPath, command: str, extra: dict) -> None:
    # the embedded config makes any run repeatable from its manifest alone
    manifest = {
        "command": command,
        "config": dataclasses.asdict(cfg),
        "config_hash": config_hash(cfg),
        "dataset": cfg.run.dataset,
        "seed": cfg.run.seed,
        "version": webwalk.__version__,
    }
    manifest.update(extra)
    with open(out / f"manifest_{command}.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(cfg: AppConfig) -> FsPath:
    out = FsPath(cfg.run.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _synth_region(ds: DatasetSection) -> Region:
    return Region.from_center(GeoCoordinate(ds.center_lat, ds.center_lon),
                              ds.width_m, ds.height_m)


def cmd_ingest(cfg: AppConfig) -> int:
    out = _out_dir(cfg)
    ds = cfg.dataset
    manifest_extra: dict = {"source": ds.source}
    if ds.source == "synth":
        spec = SynthSpec(
            region=_synth_region(ds), places=ds.places,
            website_ratio=ds.website_ratio, clusters=ds.clusters,
            cluster_spread_m=ds.cluster_spread_m)
        places = generate_synthetic_city(spec, cfg.run.seed + _SEED_SYNTH)
    elif ds.source == "import":
        result = import_places(ds.path, ds.format)
        for diag in result.diagnostics:
            print(f"webwalk: rejected {diag}", file=sys.stderr)
        manifest_extra["rejected_rows"] = len(result.diagnostics)
        places = result.places
    else:
        backing = import_places(ds.crawl_source, ds.format).places
        if not len(backing):
            raise AnalysisError(f"crawl source {ds.crawl_source} holds no places")
        lats = [p.geo.lat for p in backing]
        lons = [p.geo.lon for p in backing]
        pad = 1e-3
        region = Region(min(lats) - pad, min(lons) - pad,
                        max(lats) + pad, max(lons) + pad)
        provider = FilePlacesProvider(backing, radar_cap=ds.radar_cap)
        crawl = crawl_places(provider, region, ds.grid_resolution_m,
                             checkpoint_path=out / "crawl_checkpoint.jsonl")
        write_crawl_report(crawl.report, out / "crawl_report.csv")
        statuses = [c.status for c in crawl.report]
        manifest_extra.update({
            "grid_cells": len(crawl.report),
            "cells_truncated": statuses.count("truncated"),
            "cells_failed": statuses.count("failed"),
        })
        places = crawl.places

    export_places(places, out / "places.csv", "csv")
    stats = dataset_stats(places)
    with open(out / "stats.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "scope", "places", "checkins", "ratio"])
        for cat in CATEGORY_ORDER:
            writer.writerow([cfg.run.dataset, cat.value, stats.category_places[cat],
                             stats.category_checkins[cat], ""])
        writer.writerow([cfg.run.dataset, "total", stats.place_count,
                         sum(stats.category_checkins.values()), ""])
        writer.writerow([cfg.run.dataset, "virtual", stats.virtual_count, "",
                         repr(stats.virtual_ratio)])
    print(f"dataset: {cfg.run.dataset}")
    print(f"places: {stats.place_count}")
    print(f"virtual: {stats.virtual_count} ({stats.virtual_ratio * 100.0:.1f}%)")
    for cat in CATEGORY_ORDER:
        print(f"{cat.value}: {stats.category_places[cat]} places, "
              f"{stats.category_checkins[cat]} checkins")
    manifest_extra.update({
        "places": stats.place_count,
        "virtual": stats.virtual_count,
    })
    _write_manifest(cfg, out, "ingest", manifest_extra)
    return EXIT_OK


def _make_provider(cfg: AppConfig):
    name = cfg.simulate.provider
    if name == "straight":
        return StraightLineProvider()
    if name == "grid":
        return GridWalkProvider()
    return FileReplayProvider.from_jsonl(cfg.simulate.replay_file)


def cmd_simulate(cfg: AppConfig) -> int:
    out = _out_dir(cfg)
    places = import_places(out / "places.csv", "csv").places
    model = CategoryModel.from_places(places)
    matrix = build_transition_matrix(model, cfg.model.epsilon)
    stationary = stationary_distribution(matrix)
    provider = _make_provider(cfg)

    movements = []
    for kind_name in cfg.simulate.kinds:
        kind = MovementKind(kind_name)
        offset = _SEED_RECURRING if kind is MovementKind.RECURRING else _SEED_NONRECURRING
        movements.extend(generate_movements(
            model, matrix, kind, cfg.simulate.count, cfg.run.seed + offset,
            workers=cfg.run.threads))

    paths = []
    for i, movement in enumerate(movements):
        p = route(provider, movement)
        paths.append(dataclasses.replace(p, path_id=f"{p.kind.value}-{i:05d}"))

    write_movements_csv(movements, out / "movements.csv")
    write_paths_jsonl(paths, out / "paths.jsonl")
    with open(out / "path_cdf.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "kind", "bin_km", "count"])
        for kind_name in cfg.simulate.kinds:
            kind_paths = [p for p in paths if p.kind.value == kind_name]
            for bin_km, count in path_length_cdf(kind_paths):
                writer.writerow([cfg.run.dataset, kind_name, repr(bin_km), count])
    mean_km = sum(p.length_km for p in paths) / len(paths) if paths else 0.0
    print(f"movements: {len(movements)}")
    print(f"paths: {len(paths)} (mean length {mean_km:.2f} km)")
    print("stationary: " + " ".join(
        f"{cat.value}={p:.3f}" for cat, p in zip(CATEGORY_ORDER, stationary.probs)))
    _write_manifest(cfg, out, "simulate", {
        "count": cfg.simulate.count,
        "epsilon": cfg.model.epsilon,
        "kinds": list(cfg.simulate.kinds),
        "provider": cfg.simulate.provider,
        "stationary": [round(p, 6) for p in stationary.probs],
    })
    return EXIT_OK


def _analysis_region(cfg: AppConfig, places: PlaceSet) -> Region:
    if cfg.dataset.source == "synth":
        return _synth_region(cfg.dataset)
    lats = [p.geo.lat for p in places]
    lons = [p.geo.lon for p in places]
    pad = 1e-3
    return Region(min(lats) - pad, min(lons) - pad, max(lats) + pad, max(lons) + pad)


def cmd_analyze(cfg: AppConfig) -> int:
    out = _out_dir(cfg)
    places = import_places(out / "places.csv", "csv").places
    locations = filter_virtual(places)
    paths = read_paths_jsonl(out / "paths.jsonl")
    an = cfg.analyze

    sweep = SweepSpec(tuple(float(v) for v in an.r_v_m),
                      tuple(float(v) for v in an.t_v_min_s),
                      tuple(float(v) for v in an.l_max_km))
    params = AnalysisParams(sweep.r_v_m[0], sweep.t_v_min_s[0], sweep.l_max_km[0],
                            cfg.simulate.speed_m_s)
    detail_sink = None
    if an.per_path:
        def detail_sink(kind: str, r_v: float, t_v: float, reports):
            name = f"details_{kind}_rv{r_v:g}_tv{t_v:g}.csv"
            write_path_details_csv(reports, out / name)
    rows = run_overlap_analysis(paths, locations, params, sweep,
                                dataset=cfg.run.dataset,
                                min_sample=an.min_sample,
                                workers=cfg.run.threads,
                                detail_sink=detail_sink)
    write_overlap_csv(rows, out / "overlap.csv")

    region = _analysis_region(cfg, places)
    coverage_rows = [coverage_percent(locations, region, float(r), an.raster_m)
                     for r in an.r_v_m]
    write_coverage_csv(coverage_rows, cfg.run.dataset, out / "coverage.csv")

    occupancies = [square_occupancy(locations, region, float(side))
                   for side in an.sides_m]
    write_occupancy_csv(occupancies, cfg.run.dataset, out / "occupancy.csv")

    fits = []
    for occ in occupancies:
        try:
            fits.append((occ.side_m, fit_power_law(occupancy_histogram(occ))))
        except AnalysisError as exc:
            log.warning("side %g m: %s", occ.side_m, exc)
    write_fit_csv(fits, cfg.run.dataset, out / "fits.csv")

    flagged = sum(1 for r in rows if r.insufficient)
    print(f"overlap rows: {len(rows)} ({flagged} below min sample)")
    print(f"coverage rows: {len(coverage_rows)}")
    print(f"occupancy sides: {len(occupancies)} (fits: {len(fits)})")
    _write_manifest(cfg, out, "analyze", {
        "insufficient_rows": flagged,
        "overlap_rows": len(rows),
        "sweep": {"r_v_m": list(sweep.r_v_m), "t_v_min_s": list(sweep.t_v_min_s),
                  "l_max_km": list(sweep.l_max_km)},
    })
    return EXIT_OK


def _table_section(path: FsPath, limit: int = 50) -> list[str]:
    lines = [f"## {path.name}", ""]
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return lines + ["(empty)", ""]
    header, body = rows[0], rows[1:]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for row in body[:limit]:
        lines.append("| " + " | ".join(row) + " |")
    if len(body) > limit:
        lines.append(f"| ... ({len(body) - limit} more rows) |")
    lines.append("")
    return lines


def cmd_report(cfg: AppConfig) -> int:
    out = FsPath(cfg.run.out)
    if not out.is_dir():
        raise ConfigError(f"no run directory at {out}")
    lines = [f"# Run summary: {cfg.run.dataset}", ""]
    for manifest in sorted(out.glob("manifest_*.json")):
        lines.append(f"## {manifest.name}")
        lines.append("")
        lines.append("```json")
        lines.append(manifest.read_text(encoding="utf-8").rstrip())
        lines.append("```")
        lines.append("")
    for table in ("stats.csv", "overlap.csv", "coverage.csv", "occupancy.csv",
                  "fits.csv", "path_cdf.csv", "crawl_report.csv"):
        path = out / table
        if path.exists():
            lines.extend(_table_section(path))
    report_path = out / "report.md"
    report_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"report: {report_path}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="webwalk",
                     description="Simulate city walks and measure their overlap "
                                 "with web-present places.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("ingest", "acquire a dataset (synth, import or crawl)"),
            ("simulate", "draw movements and build their paths"),
            ("analyze", "run the overlap, coverage and occupancy sweeps"),
            ("report", "collect manifests and tables into report.md")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--out", help="run directory (overrides [run].out)")
        p.add_argument("--seed", type=int, help="master seed (overrides [run].seed)")
        p.add_argument("--threads", type=int, help="worker processes")
        p.add_argument("--dataset-name", dest="dataset_name",
                       help="dataset label used in result rows")
        if name == "ingest":
            p.add_argument("--source", choices=("synth", "import", "crawl"))
            p.add_argument("--input", help="places file for import/crawl sources")
            p.add_argument("--places", type=int, help="synth: number of places")
        if name == "simulate":
            p.add_argument("--count", type=int, help="movements per kind")
            p.add_argument("--epsilon", type=float, help="matrix diagonal weight")
            p.add_argument("--provider", choices=("straight", "grid", "replay"))
        if name == "analyze":
            p.add_argument("--per-path", action="store_true", default=None,
                           help="also write per-path detail CSVs")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    get = lambda name: getattr(args, name, None)
    over = {
        "run": {"out": get("out"), "seed": get("seed"), "threads": get("threads"),
                "dataset": get("dataset_name")},
        "dataset": {"source": get("source"), "places": get("places")},
        "model": {"epsilon": get("epsilon")},
        "simulate": {"count": get("count"), "provider": get("provider")},
        "analyze": {"per_path": get("per_path")},
    }
    if get("input") is not None:
        if get("source") == "crawl":
            over["dataset"]["crawl_source"] = get("input")
        else:
            over["dataset"]["path"] = get("input")
    return over


_COMMANDS = {
    "ingest": (cmd_ingest, EXIT_INGEST),
    "simulate": (cmd_simulate, EXIT_SIMULATE),
    "analyze": (cmd_analyze, EXIT_ANALYZE),
    "report": (cmd_report, EXIT_USAGE),
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="webwalk: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"webwalk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    command, failure_code = _COMMANDS[args.command]
    try:
        return command(cfg)
    except ConfigError as exc:
        print(f"webwalk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"webwalk: {args.command}: {exc}", file=sys.stderr)
        return failure_code


def entrypoint() -> None:
    sys.exit(main())
