"""GMRES iteration counts with and without rescaling on the seven-ellipse layout."""
import argparse
from pathlib import Path

from bie2d import testcases
from bie2d.output import write_rows
from bie2d.studies import rescaling_study


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[1.001, 1.01, 1.1, 2.0, 10.0, 100.0])
    ap.add_argument("--M", type=int, nargs="+", default=[32, 256])
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--out", type=Path, default=Path("out/rescaling.csv"))
    args = ap.parse_args()
    cfg = testcases.seven_ellipses()
    rows = rescaling_study(cfg.build_tree(), cfg.boundary_functions(), args.sigmas, args.M, args.tol)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_rows(args.out, rows)
    print(f"{'sigma':>8} {'M':>5} {'rescaled':>9} {'unrescaled':>11}")
    for r in rows:
        print(f"{r.sigma:8g} {r.M:5d} {r.iterations_rescaled:9d} {r.iterations_unrescaled:11d}")


if __name__ == "__main__":
    main()
