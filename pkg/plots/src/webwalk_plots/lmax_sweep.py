"""Median accumulated visiting time against the path-length cap.

Plotted at the smallest dwell and the radius closest to 100 m among the
swept values, since the cap is the variable of interest here.
"""

from pathlib import Path

from webwalk_plots.common import (apply_style, load_overlap, no_data,
                                  plot_series, plt, series_by_kind, save)


def pick_radius(values) -> float:
    """The swept radius closest to 100 m; ties go to the smaller one."""
    return min(values, key=lambda r: (abs(r - 100.0), r))


def render(results_dir: Path, out_path: Path) -> None:
    rows = load_overlap(results_dir)
    if rows:
        t_v = min(r["t_v_min_s"] for r in rows)
        r_v = pick_radius({r["r_v_m"] for r in rows})
        rows = [r for r in rows if r["t_v_min_s"] == t_v and r["r_v_m"] == r_v]
    series = series_by_kind(rows, "l_max_km", "med_accumulated_s")
    apply_style()
    fig, ax = plt.subplots()
    if series:
        plot_series(ax, series)
        ax.legend()
        ax.set_title(f"Accumulated visiting time vs l_max (r_v = {r_v:g} m)")
    else:
        no_data(ax)
        ax.set_title("Accumulated visiting time vs l_max")
    ax.set_xlabel("path length cap l_max [km]")
    ax.set_ylabel("median accumulated visiting time [s]")
    save(fig, out_path)
