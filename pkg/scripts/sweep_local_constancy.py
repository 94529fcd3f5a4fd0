"""Retract certificates along every primitive step of a family of inclusions."""
import argparse
import time

from ymdcrit.lattice import Window
from ymdcrit.localconst import Inclusion, local_constancy_chain


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--grow", type=int, default=2, help="largest enlargement per side")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    V = Window(0, 2, 0, 2)
    for g in range(args.grow + 1):
        outer = Window(-g, 2 + g, -g, 2 + g)
        t = time.perf_counter()
        rep = local_constancy_chain(Inclusion(V, outer), args.n, args.samples, args.seed)
        verified = sum(1 for r in rep.records if r.status == "pass")
        print(f"{V} -> {outer} n={args.n}: {verified} verified, {len(rep.failures())} failing, "
              f"{time.perf_counter() - t:.2f}s", flush=True)


if __name__ == "__main__":
    main()
