"""Finite-difference consistency checks for the chemistry densities.

Each check returns the largest discrepancy found so the unit tests and the
acceptance suite can share them.
"""
import numpy as np

from ternary_ch import chemistry as chem

FD_STEP = 1e-5


def _central(fun, x, h=FD_STEP):
    return (fun(x + h) - fun(x - h)) / (2.0 * h)


def sample(n=1000, seed=0, lo=-2.0, hi=3.0):
    return np.random.default_rng(seed).uniform(lo, hi, n)


def _scale(ref):
    return np.maximum(1.0, np.abs(ref))


def double_well_errors(phi=None):
    """Relative FD mismatch of f vs F and f' vs f, plain and truncated."""
    phi = sample() if phi is None else phi
    worst = 0.0
    for trunc in (False, True):
        F = lambda x: chem.potential(x, trunc)[0]  # noqa: E731
        f = lambda x: chem.potential(x, trunc)[1]  # noqa: E731
        _, fv, fpv = chem.potential(phi, trunc)
        if trunc:
            # keep the stencil on one side of the kinks at 0 and 1
            phi_ok = np.abs(phi) > 2 * FD_STEP
            phi_ok &= np.abs(phi - 1.0) > 2 * FD_STEP
        else:
            phi_ok = np.ones_like(phi, dtype=bool)
        worst = max(worst, np.max(np.abs(_central(F, phi) - fv)[phi_ok] / _scale(fv)[phi_ok]))
        worst = max(worst, np.max(np.abs(_central(f, phi) - fpv)[phi_ok] / _scale(fpv)[phi_ok]))
    return worst


def f123_errors(n=200, seed=1):
    rng = np.random.default_rng(seed)
    worst_g = worst_h = 0.0
    for _ in range(n):
        p = rng.uniform(-1.5, 1.5, 3)
        val, g = chem.f123_grad(*p)
        H = chem.f123_hessian(*p)
        for k in range(3):
            e = np.zeros(3)
            e[k] = FD_STEP
            dF = (chem.f123_grad(*(p + e))[0] - chem.f123_grad(*(p - e))[0]) / (2 * FD_STEP)
            dg = (chem.f123_grad(*(p + e))[1] - chem.f123_grad(*(p - e))[1]) / (2 * FD_STEP)
            worst_g = max(worst_g, abs(dF - g[k]) / max(1.0, abs(g[k])))
            worst_h = max(worst_h, np.max(np.abs(dg - H[:, k]) / np.maximum(1.0, np.abs(H[:, k]))))
    return worst_g, worst_h


def penalty_errors(n_phases, lam=0.3, n=100, seed=2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        p = rng.uniform(-1, 2, n_phases)
        _, grad, H = chem.penalty(p, lam)
        for k in range(n_phases):
            e = np.zeros(n_phases)
            e[k] = FD_STEP
            dP = (chem.penalty(p + e, lam)[0] - chem.penalty(p - e, lam)[0]) / (2 * FD_STEP)
            dp = (chem.penalty(p + e, lam)[1] - chem.penalty(p - e, lam)[1]) / (2 * FD_STEP)
            worst = max(worst, abs(dP - grad) / max(1.0, abs(grad)))
            worst = max(worst, abs(dp - H[k, 0]) / max(1.0, abs(H[k, 0])))
    return worst


def truncation_jumps():
    """Largest left/right mismatch of (F, f, f') of the truncated well at 0 and 1."""
    worst = 0.0
    for x in (0.0, 1.0):
        left = chem.truncated_double_well(np.nextafter(x, -np.inf))
        mid = chem.truncated_double_well(x)
        right = chem.truncated_double_well(np.nextafter(x, np.inf))
        for a, b, c in zip(left, mid, right):
            worst = max(worst, abs(a - b), abs(c - b))
    return worst
