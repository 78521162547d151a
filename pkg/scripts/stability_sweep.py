"""Perturbation-size sweep on the m = 3 wave: L1 stability margin and windowed rotation drift."""

import argparse
import json

from kelvinlab.experiments import ExperimentConfig, drift_exponent, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--beta", type=float, default=0.05)
    ap.add_argument("--sizes", type=float, nargs="+", default=[5e-4, 1e-3, 2e-3])
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--dt", type=float, default=0.005)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    cfgs = [ExperimentConfig(kind="rotation-tracking", m=a.m, beta=a.beta, perturbation_size=s, T=a.T,
                             dt=a.dt, log_every=a.dt, l1_every=1.0) for s in a.sizes]
    rows = sweep(cfgs, workers=a.workers)
    for r in rows:
        print(f"size={r['perturbation_size']:.1e}  max L1={r.get('max_l1_fixed', float('nan')):.3e}  "
              f"drift={r.get('drift', float('nan')):.3e}  {r['error']}")
    if all(not r["error"] for r in rows):
        print(json.dumps({"drift_exponent": drift_exponent(a.sizes, [r["drift"] for r in rows])}))


if __name__ == "__main__":
    main()
