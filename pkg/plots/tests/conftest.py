from pathlib import Path

import pytest

OVERLAP_HEADER = ("dataset,kind,r_v_m,t_v_min_s,l_max_km,n_paths,med_visited,"
                  "med_of_med_parallel,med_of_max_parallel,med_accumulated_s")


def _overlap_csv() -> str:
    lines = [OVERLAP_HEADER]
    for kind, bump in (("recurring", 0.0), ("nonrecurring", 2.0)):
        for r_i, r_v in enumerate((50.0, 100.0, 150.0)):
            for t_i, t_v in enumerate((60.0, 120.0)):
                for l_i, l_max in enumerate((1.0, 3.0)):
                    visited = 3.0 + 3.0 * r_i - 1.0 * t_i + l_i + bump
                    acc = 150.0 + 160.0 * r_i + 30.0 * l_i - 40.0 * t_i + 20.0 * bump
                    lines.append(
                        f"demo,{kind},{r_v},{t_v},{l_max},200,{visited},"
                        f"{1.0 + 0.5 * r_i},{2.0 + r_i},{acc}")
    # an empty combination keeps its row, medians written as nan
    lines.append("demo,recurring,200.0,60.0,3.0,0,nan,nan,nan,nan")
    return "\n".join(lines) + "\n"


def _occupancy_csv() -> str:
    lines = ["dataset,side_m,k,frequency"]
    for k in range(1, 9):
        lines.append(f"demo,100.0,{k},{1000.0 / k ** 2!r}")
    lines.append("demo,100.0,non_empty_ratio,0.42")
    lines.append("demo,50.0,1,60.0")
    lines.append("demo,50.0,2,12.0")
    lines.append("demo,50.0,non_empty_ratio,0.18")
    return "\n".join(lines) + "\n"


FILES = {
    "path_cdf.csv": ("dataset,kind,bin_km,count\n"
                     "demo,recurring,0.25,3\n"
                     "demo,recurring,0.5,10\n"
                     "demo,recurring,0.75,14\n"
                     "demo,nonrecurring,0.25,6\n"
                     "demo,nonrecurring,0.5,12\n"
                     "demo,nonrecurring,0.75,14\n"),
    "coverage.csv": ("dataset,r_v_m,raster_m,percent\n"
                     "demo,25.0,10.0,12.5\n"
                     "demo,50.0,10.0,31.0\n"
                     "demo,100.0,10.0,58.2\n"
                     "demo,150.0,10.0,74.9\n"),
    "overlap.csv": _overlap_csv(),
    "occupancy.csv": _occupancy_csv(),
    "fits.csv": ("dataset,side_m,slope,intercept,r2\n"
                 "demo,100.0,-2.0,3.0,1.0\n"),
}


def write_results(root: Path) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for name, content in FILES.items():
        (root / name).write_text(content)
    return root


@pytest.fixture
def make_results(tmp_path):
    def _make(name: str = "run") -> Path:
        return write_results(tmp_path / name)
    return _make


@pytest.fixture
def results_dir(make_results) -> Path:
    return make_results()
