#!/usr/bin/env python3
"""Phase classification over a plane slice of external fields
(h1, h2, 0) for the d=3 simple walk with uniform weights.  Emits one
JSON line per grid point with criterion margins and the bad-set flag."""

import argparse
import json
from pathlib import Path

import numpy as np

from polymerlab import WeightModel, simple_walk
from polymerlab.experiments import phase_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--hmax", type=float, default=12.0)
    ap.add_argument("--points", type=int, default=7,
                    help="grid points per axis")
    ap.add_argument("--n-terms", type=int, default=64)
    ap.add_argument("--out", type=str, default="results/phase_grid")
    args = ap.parse_args()

    model = WeightModel("uniform01")
    p = simple_walk(3)
    axis = np.linspace(0.0, args.hmax, args.points)
    pts = [[h1, h2, 0.0] for h1 in axis for h2 in axis]
    grid = phase_grid(model, p, args.beta, pts, args.n_terms)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "grid.jsonl", "w") as fh:
        for rec in grid:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    counts = {}
    for rec in grid:
        counts[rec["class"]] = counts.get(rec["class"], 0) + 1
    print("classified", len(grid), "points:", counts)


if __name__ == "__main__":
    main()
