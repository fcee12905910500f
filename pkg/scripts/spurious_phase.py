#!/usr/bin/env python3
"""Lens with phase 2 removed: how large does the spurious phase 2 grow?"""
import argparse

import numpy as np

from ternary_ch.config import build_config
from ternary_ch.experiments import initial_state
from ternary_ch.schemes import PhaseState, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--scheme", default="NTD1")
    args = ap.parse_args()

    cfg = build_config({}, "lens", scheme=args.scheme)
    s = initial_state(cfg)
    phases = np.array([s.phases[0], np.zeros(s.mesh.n_vertices), 1.0 - s.phases[0]])
    s = PhaseState(s.mesh, 0.0, phases, np.zeros_like(phases))
    run(s, cfg.params(), cfg.scheme_config(), args.steps * cfg.dt,
        [lambda k, prev, st: print(f"step {k:4d}  max|phi_2| = {np.abs(st.phases[1]).max():.4e}")])


if __name__ == "__main__":
    main()
