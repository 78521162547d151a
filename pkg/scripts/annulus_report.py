"""Annulus constants, critical radius and coercivity threshold over a grid of inner radii."""

import argparse

import numpy as np

from kelvinlab.annulus import build_annulus, coercivity_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r2", type=float, default=1.0)
    ap.add_argument("--r1", type=float, nargs="+", default=list(np.round(np.arange(0.1, 0.95, 0.1), 2)))
    a = ap.parse_args()
    print(f"{'r1':>5} {'C1':>10} {'slope_in':>10} {'slope_out':>10} {'r*':>8} {'m_thr':>6}")
    for r1 in a.r1:
        m = build_annulus(r1, a.r2)
        print(f"{r1:5.2f} {m.C1:10.6f} {m.slope_inner:10.6f} {m.slope_outer:10.6f} "
              f"{m.rstar:8.4f} {coercivity_threshold(m):6d}")


if __name__ == "__main__":
    main()
