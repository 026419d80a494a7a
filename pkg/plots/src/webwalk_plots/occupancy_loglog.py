"""Occupancy histogram on log-log axes with the fitted power law.

The fit comes from fits.csv when the run directory has one; the figure
never refits, it displays what the analysis computed.
"""

from pathlib import Path

import numpy as np

from webwalk_plots.common import (SchemaError, apply_style, fnum, load_rows,
                                  no_data, plt, save)

SOURCE = "occupancy.csv"
REQUIRED = ("dataset", "side_m", "k", "frequency")
FIT_SOURCE = "fits.csv"
FIT_REQUIRED = ("dataset", "side_m", "slope", "intercept", "r2")


def _load_fits(results_dir: Path) -> dict[float, tuple[float, float]]:
    src = results_dir / FIT_SOURCE
    if not src.is_file():
        return {}
    fits = {}
    for i, row in enumerate(load_rows(src, FIT_REQUIRED), start=2):
        fits[fnum(row, "side_m", src, i)] = (
            fnum(row, "slope", src, i), fnum(row, "intercept", src, i))
    return fits


def render(results_dir: Path, out_path: Path) -> None:
    src = results_dir / SOURCE
    rows = load_rows(src, REQUIRED)
    by_side: dict[float, list] = {}
    for i, row in enumerate(rows, start=2):
        if row["k"] == "non_empty_ratio":
            continue
        try:
            k = int(row["k"])
        except ValueError:
            raise SchemaError(f"{src.name} line {i}: column 'k' is neither "
                              f"an occupancy count nor the ratio marker: "
                              f"{row['k']!r}") from None
        by_side.setdefault(fnum(row, "side_m", src, i), []).append(
            (k, fnum(row, "frequency", src, i)))
    fits = _load_fits(results_dir)
    apply_style()
    fig, ax = plt.subplots()
    if by_side:
        for side, pts in sorted(by_side.items()):
            pts.sort()
            ax.scatter([k for k, _ in pts], [f for _, f in pts], s=20,
                       label=f"side {side:g} m")
            if side in fits:
                slope, intercept = fits[side]
                ks = np.geomspace(pts[0][0], pts[-1][0], 50)
                ax.plot(ks, 10.0 ** intercept * ks ** slope, linewidth=1,
                        label=f"side {side:g} m fit (slope {slope:.2f})")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.legend()
    else:
        no_data(ax)
    ax.set_xlabel("locations per square k")
    ax.set_ylabel("squares with k locations")
    ax.set_title("Square occupancy")
    save(fig, out_path)
