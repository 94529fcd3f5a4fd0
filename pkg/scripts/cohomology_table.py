"""Dimensions behind the truncated acyclicity check, one row per (degree, weight)."""
import argparse

from ymdcrit.lattice import Window
from ymdcrit.localconst import ResourceError, build_B_tilde, truncated_cohomology


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--degree-bound", type=int, default=3)
    p.add_argument("--window", default="0,2,0,2")
    p.add_argument("--budget", type=int, default=200_000)
    args = p.parse_args()
    V = Window.parse(args.window)
    Vp = Window(V.a, V.b, V.c, V.d + 1)
    B = build_B_tilde(V, Vp, args.n)
    try:
        table = truncated_cohomology(B, args.degree_bound, budget=args.budget)
    except ResourceError as exc:
        raise SystemExit(f"resource error: {exc}")
    print(f"{'H^-k':>5} {'weight':>6} {'dim C':>7} {'rank out':>8} {'rank in':>8} {'dim H':>6}")
    for (k, w), (dim, ro, ri, h) in sorted(table.items()):
        print(f"{k:>5} {w:>6} {dim:>7} {ro:>8} {ri:>8} {h:>6}")


if __name__ == "__main__":
    main()
