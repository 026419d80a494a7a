"""Shared plumbing: deterministic styling, CSV loading, schema checks.

Figures read the CSV files a webwalk run directory holds and nothing
else; this module owns the column contracts and the error type the
driver turns into exit codes.
"""

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be fixed first

KIND_COLORS = {"recurring": "tab:blue", "nonrecurring": "tab:orange"}

OVERLAP_SOURCE = "overlap.csv"
OVERLAP_REQUIRED = ("dataset", "kind", "r_v_m", "t_v_min_s", "l_max_km",
                    "n_paths", "med_visited", "med_of_med_parallel",
                    "med_of_max_parallel", "med_accumulated_s")


class SchemaError(Exception):
    """Input CSV does not match the schema the figure needs."""


def apply_style() -> None:
    plt.rcdefaults()
    plt.rcParams.update({
        "figure.figsize": (6.4, 4.8),
        "figure.dpi": 100,
        "savefig.dpi": 100,
        "axes.grid": True,
        "grid.alpha": 0.3,
        # reruns must produce identical bytes: salt the SVG ids, keep
        # text as text so labels stay greppable
        "svg.hashsalt": "webwalk-plots",
        "svg.fonttype": "none",
    })


def load_rows(path: Path, required) -> list[dict]:
    if not path.is_file():
        raise SchemaError(f"{path.name}: file not found in results directory")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(
                f"{path.name}: missing columns {missing}, found {header}")
        return list(reader)


def fnum(row: dict, col: str, path: Path, line: int) -> float:
    try:
        return float(row[col])
    except ValueError:
        raise SchemaError(f"{path.name} line {line}: column {col!r} "
                          f"is not numeric: {row[col]!r}") from None


def load_overlap(results_dir: Path) -> list[dict]:
    src = results_dir / OVERLAP_SOURCE
    rows = load_rows(src, OVERLAP_REQUIRED)
    out = []
    for i, row in enumerate(rows, start=2):
        parsed = {"kind": row["kind"]}
        for col in OVERLAP_REQUIRED[2:]:
            parsed[col] = fnum(row, col, src, i)
        out.append(parsed)
    return out


def radius_slice(rows: list[dict]) -> list[dict]:
    """Rows at the smallest dwell and the largest path cap, the slice
    plotted against the radius."""
    if not rows:
        return []
    t_v = min(r["t_v_min_s"] for r in rows)
    l_max = max(r["l_max_km"] for r in rows)
    return [r for r in rows if r["t_v_min_s"] == t_v and r["l_max_km"] == l_max]


def series_by_kind(rows: list[dict], xkey: str, ykey: str) -> dict[str, list]:
    """Sorted (x, y) per movement kind; NaN medians (empty samples) are
    dropped rather than plotted."""
    series: dict[str, list] = {}
    for row in rows:
        if math.isnan(row[ykey]):
            continue
        series.setdefault(row["kind"], []).append((row[xkey], row[ykey]))
    for pts in series.values():
        pts.sort()
    return series


def plot_series(ax, series: dict[str, list], label_suffix: str = "",
                **kwargs) -> None:
    for kind, pts in sorted(series.items()):
        ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o",
                color=KIND_COLORS.get(kind), label=kind + label_suffix,
                **kwargs)


def no_data(ax) -> None:
    ax.text(0.5, 0.5, "no data", transform=ax.transAxes,
            ha="center", va="center", fontsize=14, color="0.4")


def save(fig, out_path: Path) -> None:
    meta = {"Date": None} if out_path.suffix == ".svg" else None
    fig.savefig(out_path, metadata=meta)
    plt.close(fig)
