"""Region coverage against the vicinity radius, one curve per raster."""

from pathlib import Path

from webwalk_plots.common import apply_style, fnum, load_rows, no_data, plt, save

SOURCE = "coverage.csv"
REQUIRED = ("dataset", "r_v_m", "raster_m", "percent")


def render(results_dir: Path, out_path: Path) -> None:
    src = results_dir / SOURCE
    rows = load_rows(src, REQUIRED)
    by_raster: dict[float, list] = {}
    for i, row in enumerate(rows, start=2):
        by_raster.setdefault(fnum(row, "raster_m", src, i), []).append(
            (fnum(row, "r_v_m", src, i), fnum(row, "percent", src, i)))
    apply_style()
    fig, ax = plt.subplots()
    if by_raster:
        for raster, pts in sorted(by_raster.items()):
            pts.sort()
            ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o",
                    label=f"raster {raster:g} m")
        ax.set_ylim(0.0, 100.0)
        ax.legend()
    else:
        no_data(ax)
    ax.set_xlabel("vicinity radius r_v [m]")
    ax.set_ylabel("region covered [%]")
    ax.set_title("Coverage vs radius")
    save(fig, out_path)
