"""Parallel-visit medians against the vicinity radius.

Two curves per kind: the median of per-path maximums (dashed) and the
median of per-path medians (solid).
"""

from pathlib import Path

from webwalk_plots.common import (apply_style, load_overlap, no_data,
                                  plot_series, plt, radius_slice,
                                  series_by_kind, save)


def render(results_dir: Path, out_path: Path) -> None:
    rows = radius_slice(load_overlap(results_dir))
    med = series_by_kind(rows, "r_v_m", "med_of_med_parallel")
    top = series_by_kind(rows, "r_v_m", "med_of_max_parallel")
    apply_style()
    fig, ax = plt.subplots()
    if med or top:
        plot_series(ax, med, label_suffix=" median")
        plot_series(ax, top, label_suffix=" max", linestyle="--")
        ax.legend()
    else:
        no_data(ax)
    ax.set_xlabel("vicinity radius r_v [m]")
    ax.set_ylabel("parallel visits")
    ax.set_title("Parallel visits vs radius")
    save(fig, out_path)
