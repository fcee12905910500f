#!/usr/bin/env python3
"""Constraint violation ||sum phi_i - 1|| on the lens for several time steps."""
import argparse

import numpy as np

from ternary_ch.config import build_config
from ternary_ch.diagnostics import constraint_norms
from ternary_ch.experiments import initial_state
from ternary_ch.schemes import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dts", default="1e-4,1e-5")
    ap.add_argument("--t-end", type=float, default=0.3)
    ap.add_argument("--after", type=float, default=0.25)
    ap.add_argument("--scheme", default="NTD1")
    args = ap.parse_args()

    for dt in (float(v) for v in args.dts.split(",")):
        cfg = build_config({}, "lens", dt=dt, scheme=args.scheme)
        rows = []
        run(initial_state(cfg), cfg.params(), cfg.scheme_config(), args.t_end,
            [lambda k, prev, st: rows.append((st.t, *constraint_norms(st)))])
        a = np.array(rows)
        w = a[a[:, 0] >= args.after - 1e-12]
        print(f"dt={dt:.1e}: mean L2 after t={args.after} = {w[:, 1].mean():.4e}, "
              f"mean Linf = {w[:, 2].mean():.4e}")


if __name__ == "__main__":
    main()
