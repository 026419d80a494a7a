"""Share of non-empty squares against the tiling side."""

from pathlib import Path

from webwalk_plots.common import apply_style, fnum, load_rows, no_data, plt, save

SOURCE = "occupancy.csv"
REQUIRED = ("dataset", "side_m", "k", "frequency")


def render(results_dir: Path, out_path: Path) -> None:
    src = results_dir / SOURCE
    rows = load_rows(src, REQUIRED)
    # the summary rows carry the ratio in the frequency column
    pts = [(fnum(row, "side_m", src, i), fnum(row, "frequency", src, i))
           for i, row in enumerate(rows, start=2)
           if row["k"] == "non_empty_ratio"]
    pts.sort()
    apply_style()
    fig, ax = plt.subplots()
    if pts:
        ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o",
                color="tab:green")
        ax.set_ylim(0.0, 1.0)
    else:
        no_data(ax)
    ax.set_xlabel("square side [m]")
    ax.set_ylabel("non-empty share")
    ax.set_title("Non-empty squares vs side")
    save(fig, out_path)
