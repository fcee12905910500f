"""Pointwise energy densities, penalization and model parameters.

Every density function accepts scalars or numpy arrays and evaluates
elementwise.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpreadingCoefficients:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if sum(v < 0 for v in vals) > 1:
            raise ConsistencyError(f"more than one negative spreading coefficient in {vals}")
        if len(vals) == 3:
            s1, s2, s3 = vals
            if s1 * s2 + s1 * s3 + s2 * s3 <= 0:
                warnings.warn(
                    f"spreading coefficients {vals} violate S1*S2 + S1*S3 + S2*S3 > 0",
                    stacklevel=3,
                )

    @property
    def total(self) -> bool:
        return any(v < 0 for v in self.values)

    @property
    def kind(self) -> str:
        return "total" if self.total else "partial"

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def sigma_from_pairwise(s12: float, s13: float, s23: float) -> SpreadingCoefficients:
    """Spreading coefficients from pairwise surface tensions."""
    if min(s12, s13, s23) < 0:
        raise ParameterError("surface tensions must be nonnegative")
    return SpreadingCoefficients((s12 + s13 - s23, s12 + s23 - s13, s13 + s23 - s12))


def pairwise_from_sigma(sigma) -> tuple[float, float, float]:
    s1, s2, s3 = sigma
    return 0.5 * (s1 + s2), 0.5 * (s1 + s3), 0.5 * (s2 + s3)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the penalized N-phase model.

    ``lam`` is the penalization parameter and ``Lambda`` the weight of the
    product potential.  ``tau`` is only consulted by the schemes when the
    stabilization mode is explicit.
    """

    epsilon: float
    lam: float
    Lambda: float
    mobility: tuple[float, ...]
    sigma: SpreadingCoefficients
    tau: tuple[float, ...] | None = None
    nu: tuple[float, ...] = field(default=(1.0, 1.0, 1.0))

    def __post_init__(self):
        if not isinstance(self.sigma, SpreadingCoefficients):
            object.__setattr__(self, "sigma", SpreadingCoefficients(tuple(self.sigma)))
        n = len(self.sigma)
        mob = tuple(float(m) for m in np.broadcast_to(self.mobility, (n,)))
        object.__setattr__(self, "mobility", mob)
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.lam <= 0:
            raise ParameterError(f"penalty lambda must be positive, got {self.lam}")
        if self.Lambda < 0:
            raise ParameterError(f"Lambda must be nonnegative, got {self.Lambda}")
        if min(mob) <= 0:
            raise ParameterError(f"mobilities must be positive, got {mob}")
        if self.tau is not None:
            tau = tuple(float(t) for t in np.broadcast_to(self.tau, (n,)))
            if min(tau) < 0:
                raise ParameterError(f"stabilizers must be nonnegative, got {tau}")
            object.__setattr__(self, "tau", tau)

    @property
    def n_phases(self) -> int:
        return len(self.sigma)


def double_well(phi):
    """Return (F, f, f') of F = phi^2 (1 - phi)^2 / 4."""
    d = phi - 0.5
    d2 = d * d
    w = phi * (1.0 - phi)
    return 0.25 * w * w, d * (d2 - 0.25), 3.0 * d2 - 0.25


def truncated_double_well(phi):
    """Double well continued by quadratics outside [0, 1]; |f'| <= 1/2."""
    phi = np.asarray(phi, dtype=float)
    F, f, fp = double_well(phi)
    hi = phi > 1.0
    lo = phi < 0.0
    F = np.where(hi, 0.25 * (phi - 1.0) ** 2, np.where(lo, 0.25 * phi**2, F))
    f = np.where(hi, 0.5 * (phi - 1.0), np.where(lo, 0.5 * phi, f))
    fp = np.where(hi | lo, 0.5, fp)
    if F.ndim == 0:
        return float(F), float(f), float(fp)
    return F, f, fp


def potential(phi, truncated: bool):
    return truncated_double_well(phi) if truncated else double_well(phi)


def product_potential(phis):
    """Value and gradient of 1/2 * prod(phi_j^2) for a list of fields."""
    phis = [np.asarray(p, dtype=float) for p in phis]
    sq = [p * p for p in phis]
    value = 0.5 * math.prod(sq)
    grad = []
    for i, p in enumerate(phis):
        others = math.prod(sq[j] for j in range(len(phis)) if j != i)
        grad.append(p * others)
    return value, grad


def product_hessian(phis):
    """Hessian of 1/2 * prod(phi_j^2) as a nested list [i][k] of arrays."""
    phis = [np.asarray(p, dtype=float) for p in phis]
    n = len(phis)
    sq = [p * p for p in phis]
    H = [[None] * n for _ in range(n)]
    for i in range(n):
        H[i][i] = math.prod(sq[j] for j in range(n) if j != i)
        for k in range(i + 1, n):
            rest = math.prod(sq[j] for j in range(n) if j not in (i, k))
            H[i][k] = H[k][i] = 2.0 * phis[i] * phis[k] * rest
    return H


def f123_grad(phi1, phi2, phi3):
    value, grad = product_potential([phi1, phi2, phi3])
    if np.ndim(value) == 0:
        return float(value), np.array([float(g) for g in grad])
    return value, np.stack(grad)


def f123_hessian(phi1, phi2, phi3) -> np.ndarray:
    H = product_hessian([phi1, phi2, phi3])
    return np.array([[np.asarray(h, dtype=float) for h in row] for row in H])


def penalty(phi, lam: float):
    """(P, p, H_P) of the quadratic penalty on sum(phi) = 1."""
    if lam <= 0:
        raise ParameterError(f"penalty lambda must be positive, got {lam}")
    phi = np.asarray(phi, dtype=float)
    s = phi.sum(axis=0) - 1.0
    n = phi.shape[0]
    return s**2 / (2.0 * lam), s / lam, np.ones((n, n)) / lam


def penalty_lower_triangular(n: int, lam: float = 1.0) -> np.ndarray:
    if n < 2:
        raise ParameterError("need at least two phases")
    return (np.eye(n) + 2.0 * np.tril(np.ones((n, n)), -1)) / (2.0 * lam)


def od2(value_at_old, slope_at_old, old, new):
    return value_at_old + 0.5 * slope_at_old * (new - old)


def tau_threshold(mobility: float, sigma: float, epsilon: float, mode: str = "TD1",
                  fprime_inf: float | None = None) -> float:
    """Smallest stabilizer of the energy-stability results.

    ``mode="TD1"`` gives 72 M S^2 / eps^2; ``mode="NTD1"`` multiplies by
    ``fprime_inf**2``, the sup-norm of f'(phi^n).
    """
    base = 72.0 * mobility * sigma**2 / epsilon**2
    if mode == "TD1":
        return base
    if mode == "NTD1":
        if fprime_inf is None:
            raise ParameterError("NTD1 threshold needs the sup-norm of f'")
        return base * fprime_inf**2
    raise ParameterError(f"unknown threshold mode {mode!r}")


@dataclass(frozen=True)
class SolvabilityReport:
    status: str  # "unconditional" | "conditional"
    phase: int | None = None
    dt_bound: float | None = None
    dt_ok: bool | None = None
    lam_bound: float | None = None
    lam_ok: bool | None = None

    @property
    def satisfied(self) -> bool:
        return self.status == "unconditional" or bool(self.dt_ok) or bool(self.lam_ok)

    def describe(self) -> str:
        if self.status == "unconditional":
            return "partial spreading: uniquely solvable for every time step"
        parts = [f"total spreading in phase {self.phase + 1}"]
        if self.dt_bound is None:
            parts.append("time-step condition inapplicable (3 eps |S| >= 4)")
        else:
            parts.append(f"dt <= {self.dt_bound:.3e}: {'yes' if self.dt_ok else 'no'}")
        parts.append(f"lambda <= {self.lam_bound:.3e}: {'yes' if self.lam_ok else 'no'}")
        return "; ".join(parts)


def solvability_guard(params: ModelParams, h: float, dt: float, C: float = 1.0) -> SolvabilityReport:
    """Evaluate the sufficient unique-solvability conditions (advisory only)."""
    sig = params.sigma.values
    if not params.sigma.total:
        return SolvabilityReport("unconditional")
    i = next(k for k, s in enumerate(sig) if s < 0)
    a = abs(sig[i])
    eps = params.epsilon
    lam_bound = C * h**2 / (eps * a)
    if 3.0 * eps * a >= 4.0:
        dt_bound, dt_ok = None, None
    else:
        dt_bound = C * h**4 * (4.0 - 3.0 * eps * a) / params.mobility[i]
        dt_ok = dt <= dt_bound
    return SolvabilityReport("conditional", i, dt_bound, dt_ok, lam_bound, params.lam <= lam_bound)
