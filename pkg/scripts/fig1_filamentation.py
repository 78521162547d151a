"""Evolve the three-armed patch r < 2 + sin(3 theta) to t = 20 and write perimeter series and frames."""

import argparse
import json

from kelvinlab.experiments import fig1_config, run_filamentation, timestamped_dir


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=float, default=20.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--outdir", default="runs")
    a = ap.parse_args()
    rec = run_filamentation(fig1_config(T=a.T, dt=a.dt))
    out = rec.write(timestamped_dir(a.outdir, "filamentation"))
    print(json.dumps({"outdir": str(out), "wall_time": rec.wall_time, **rec.verdicts}, indent=1))


if __name__ == "__main__":
    main()
