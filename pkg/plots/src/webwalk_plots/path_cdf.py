"""Cumulative path-length distribution, one curve per movement kind."""

from pathlib import Path

from webwalk_plots.common import (apply_style, fnum, load_rows, no_data,
                                  plot_series, plt, save)

SOURCE = "path_cdf.csv"
REQUIRED = ("dataset", "kind", "bin_km", "count")


def render(results_dir: Path, out_path: Path) -> None:
    src = results_dir / SOURCE
    rows = load_rows(src, REQUIRED)
    series: dict[str, list] = {}
    for i, row in enumerate(rows, start=2):
        series.setdefault(row["kind"], []).append(
            (fnum(row, "bin_km", src, i), fnum(row, "count", src, i)))
    for pts in series.values():
        pts.sort()
    apply_style()
    fig, ax = plt.subplots()
    if series:
        plot_series(ax, series)
        ax.legend()
    else:
        no_data(ax)
    ax.set_xlabel("path length bin [km]")
    ax.set_ylabel("paths no longer than bin")
    ax.set_title("Path length CDF")
    save(fig, out_path)
