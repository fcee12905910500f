#!/usr/bin/env python3
"""Time-convergence tables for TD1, NTD1 and NTC2 on the smooth benchmark."""
import argparse
import dataclasses
import time
from pathlib import Path

from ternary_ch.config import build_config
from ternary_ch.experiments import run_eoc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=64)
    ap.add_argument("--t-end", type=float, default=2e-4)
    ap.add_argument("--dts", default="4e-5,2e-5,1e-5")
    ap.add_argument("--ref-dt", type=float, default=1.25e-6)
    ap.add_argument("--schemes", default="TD1,NTD1,NTC2")
    ap.add_argument("--out", default="output/eoc")
    args = ap.parse_args()

    dts = [float(v) for v in args.dts.split(",")]
    base = build_config({}, "convergence_ic", t_end=args.t_end, nx=args.nx, ny=args.nx)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for scheme in args.schemes.split(","):
        t0 = time.perf_counter()
        table = run_eoc(dataclasses.replace(base, scheme=scheme), dts, args.ref_dt)
        (out / f"eoc_{scheme}.csv").write_text(table.to_csv())
        print(f"\n{scheme}  ({time.perf_counter() - t0:.1f} s)")
        print(f"{'dt':>10} {'e2(phi)':>11} {'r2':>6} {'e2(mu)':>11} {'r2':>6}")
        for r in table.rows:
            print(f"{r.dt:10.3e} {r.e2_phi:11.4e} {r.r2_phi:6.3f} {r.e2_mu:11.4e} {r.r2_mu:6.3f}")
        print(f"mean r2(phi) = {table.mean_rate('r2_phi'):.3f}, mean r2(mu) = {table.mean_rate('r2_mu'):.3f}")


if __name__ == "__main__":
    main()
