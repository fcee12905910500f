#!/usr/bin/env python3
"""Two droplets with total spreading of phase 1 (S = (-0.1, 3, 3)).

Tracks the largest value of phi_1 inside the region initially occupied by
droplet 2.  Growth of that value means phase 1 is wrapping droplet 2.
"""
import argparse

import numpy as np

from ternary_ch.config import build_config
from ternary_ch.experiments import initial_state
from ternary_ch.schemes import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-end", type=float, default=0.05)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--every", type=int, default=50)
    args = ap.parse_args()

    cfg = build_config({}, "two_bubbles", sigma=(-0.1, 3.0, 3.0), scheme="NTD1", dt=args.dt, t_end=args.t_end)
    s0 = initial_state(cfg)
    region = s0.phases[1] > 0.5
    rim = (s0.phases[1] > 0.05) & (s0.phases[1] < 0.95)

    def show(k, prev, st):
        if k % args.every == 0:
            print(f"t={st.t:.4e}  max phi_1 in droplet 2: {st.phases[0][region].max():.4f}  "
                  f"mean phi_1 on its rim: {st.phases[0][rim].mean():.4f}")

    run(s0, cfg.params(), cfg.scheme_config(), cfg.t_end, [show])


if __name__ == "__main__":
    main()
