"""Constrained maximal eigenvalue of the linearized energy for a grid of (m, beta)."""

import argparse

from kelvinlab.spectral import assemble_linearized, constrained_max_eigenvalue, constraint_set
from kelvinlab.vstate import solve_kelvin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ms", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--betas", type=float, nargs="+", default=[0.01, 0.02, 0.05])
    ap.add_argument("--n", type=int, default=512)
    a = ap.parse_args()
    print(f"{'m':>3} {'beta':>6} {'m-fold':>10} {'all modes':>10}")
    for m in a.ms:
        for b in a.betas:
            L = assemble_linearized(solve_kelvin(m, b), a.n)
            sym = constrained_max_eigenvalue(L, constraint_set(m, a.n))
            free = constrained_max_eigenvalue(L, constraint_set(m, a.n, m_fold=False))
            print(f"{m:3d} {b:6.3f} {sym:10.5f} {free:10.5f}")


if __name__ == "__main__":
    main()
