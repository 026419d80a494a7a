"""Median visited virtual locations against the vicinity radius."""

from pathlib import Path

from webwalk_plots.common import (apply_style, load_overlap, no_data,
                                  plot_series, plt, radius_slice,
                                  series_by_kind, save)


def render(results_dir: Path, out_path: Path) -> None:
    rows = radius_slice(load_overlap(results_dir))
    series = series_by_kind(rows, "r_v_m", "med_visited")
    apply_style()
    fig, ax = plt.subplots()
    if series:
        plot_series(ax, series)
        ax.legend()
    else:
        no_data(ax)
    ax.set_xlabel("vicinity radius r_v [m]")
    ax.set_ylabel("median visited locations")
    ax.set_title("Visited locations vs radius")
    save(fig, out_path)
