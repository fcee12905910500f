#!/usr/bin/env python3
"""Lens benchmark with TD1, NTD1 and NTC2 side by side.

Writes one diagnostics CSV per scheme and prints the energy, the total
numerical dissipation and the constraint norm at the end of each run.
"""
import argparse
import dataclasses
from pathlib import Path

import numpy as np

from ternary_ch.config import build_config
from ternary_ch.experiments import run_benchmark
from ternary_ch.output import read_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-end", type=float, default=0.02)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--sigma", default="1,1,1")
    ap.add_argument("--out", default="output/lens_schemes")
    args = ap.parse_args()

    sigma = tuple(float(v) for v in args.sigma.split(","))
    base = build_config({}, "lens", t_end=args.t_end, dt=args.dt, sigma=sigma)
    for scheme in ("TD1", "NTD1", "NTC2"):
        res = run_benchmark(dataclasses.replace(base, scheme=scheme), Path(args.out) / scheme)
        header, data = read_csv(res.csv_path)
        col = {h: data[:, i] for i, h in enumerate(header)}
        tnd = col["TND"][1:]
        print(f"{scheme:5} E={col['E'][-1]:.6e}  E_trunc={col['E_trunc'][-1]:.6e}  "
              f"TND range [{np.min(tnd):+.2e}, {np.max(tnd):+.2e}]  "
              f"constraint L2={col['constraint_L2'][-1]:.2e}")


if __name__ == "__main__":
    main()
