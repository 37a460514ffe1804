"""Command line: render figures from a simulation run directory.

    orbitplots render --run runs/geo-lower --figs all
    orbitplots render --run runs/geo-lower --figs elements,traj3d --format pdf
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURES, render_figure
from .schema import SchemaError, load_run


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="orbitplots",
        description="Render transfer-run figures from frozen CSV artifacts.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render selected figures for one run")
    r.add_argument("--run", required=True, help="run directory with trajectory.csv")
    r.add_argument("--figs", default="all",
                   help=f"'all' or comma list from {sorted(FIGURES)}")
    r.add_argument("--out", default=None,
                   help="image directory (default <run>/figures)")
    r.add_argument("--format", default="png", choices=("png", "pdf", "svg"))
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    run_dir = Path(args.run)
    try:
        run = load_run(run_dir)
        names = sorted(FIGURES) if args.figs == "all" else \
            [n.strip() for n in args.figs.split(",") if n.strip()]
        out_dir = Path(args.out) if args.out else run_dir / "figures"
        for name in names:
            path = render_figure(run, name, out_dir, args.format)
            print(f"wrote {path}")
    except SchemaError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
