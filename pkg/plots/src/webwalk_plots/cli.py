"""Driver: render figures from one webwalk run directory.

Exit codes: 0 ok (including no-data figures), 1 usage, 2 unreadable or
schema-mismatched input.
"""

import argparse
import sys
from pathlib import Path
from typing import Sequence

from webwalk_plots import (accumulated_radius, coverage_radius, lmax_sweep,
                           nonempty_ratio, occupancy_loglog, parallel_radius,
                           path_cdf, visited_radius)
from webwalk_plots.common import SchemaError

FIGURES = {
    "path-cdf": path_cdf.render,
    "coverage-vs-radius": coverage_radius.render,
    "nonempty-ratio": nonempty_ratio.render,
    "occupancy-loglog": occupancy_loglog.render,
    "visited-vs-radius": visited_radius.render,
    "parallel-vs-radius": parallel_radius.render,
    "accumulated-vs-radius": accumulated_radius.render,
    "lmax-sweep": lmax_sweep.render,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render webwalk result figures from a run directory.")
    parser.add_argument("results_dir", type=Path,
                        help="directory holding the run's CSV files")
    parser.add_argument("--only", choices=sorted(FIGURES),
                        help="render a single figure kind")
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    args = parser.parse_args(argv)
    if not args.results_dir.is_dir():
        print(f"render_figures: {args.results_dir} is not a directory",
              file=sys.stderr)
        return 1
    for kind in ([args.only] if args.only else FIGURES):
        out = args.results_dir / f"{kind}.{args.format}"
        try:
            FIGURES[kind](args.results_dir, out)
        except SchemaError as exc:
            print(f"render_figures: {kind}: {exc}", file=sys.stderr)
            return 2
        print(f"{kind} -> {out}")
    return 0


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
