"""d^2 = 0 and generator counts over a grid of windows, matrix sizes and gauges."""
import argparse
import time

from ymdcrit.dgcore import verify_d_squared
from ymdcrit.lattice import Window, build_model


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sides", default="2,3,4", help="comma-separated side lengths")
    p.add_argument("--n", default="1,2", help="comma-separated matrix sizes")
    args = p.parse_args()
    sides = [int(s) for s in args.sides.split(",")]
    print(f"{'n':>2} {'window':>14} {'model':>10} {'gens':>6} {'status':>6} {'sec':>6}")
    for n in (int(k) for k in args.n.split(",")):
        for l1 in sides:
            for l2 in sides:
                V = Window(0, l1, 0, l2)
                for axis in (None, 1, 2):
                    t = time.perf_counter()
                    model = build_model(V, n, axis)
                    rep = verify_d_squared(model.algebra)
                    kind = "plain" if axis is None else f"gf{axis}"
                    print(f"{n:>2} {str(V):>14} {kind:>10} {len(model.algebra.mvars):>6} "
                          f"{'ok' if rep.ok else 'FAIL':>6} {time.perf_counter() - t:>6.2f}", flush=True)


if __name__ == "__main__":
    main()
