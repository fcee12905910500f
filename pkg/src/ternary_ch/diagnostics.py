"""Energies, numerical dissipation, constraint monitors and EOC tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import chemistry as chem
from .mesh import DEFAULT_RULE, norms
from .schemes import PhaseState, chemical_potential


class UndefinedRateError(ValueError):
    pass


def _truncated_for(scheme: str, truncated: bool | None) -> bool:
    if truncated is not None:
        return truncated
    return scheme.upper() == "TD1"


def energy(state: PhaseState, params: chem.ModelParams, truncated: bool = False,
           rule: int = DEFAULT_RULE) -> float:
    """Total free energy (capillary + potential + penalty) of ``state``.

    ``truncated=True`` evaluates the energy with the truncated double well.
    """
    mesh = state.mesh
    quad = mesh.rule(rule)
    K, M = mesh.stiffness, mesh.mass
    eps = params.epsilon
    q = [quad.at_points(p) for p in state.phases]
    total = 0.0
    dens = np.zeros_like(q[0])
    for i, sig in enumerate(params.sigma.values):
        phi = state.phases[i]
        total += 0.375 * eps * sig * float(phi @ (K @ phi))
        dens = dens + sig * chem.potential(q[i], truncated)[0]
    if params.Lambda:
        dens = dens + params.Lambda * chem.product_potential(q)[0]
    total += (24.0 / eps) * quad.integrate(dens)
    s = state.phases.sum(axis=0) - 1.0
    total += float(s @ (M @ s)) / (2.0 * params.lam)
    return total


def constraint_norms(state: PhaseState) -> tuple[float, float]:
    """(L2, Linf) norms of sum(phi_i) - 1."""
    l2, _, linf = norms(state.mesh, state.phases.sum(axis=0) - 1.0)
    return l2, linf


def volumes(state: PhaseState) -> np.ndarray:
    return state.phases @ state.mesh.mass.sum(axis=0).A1


def _dt(old: PhaseState, new: PhaseState) -> float:
    dt = new.t - old.t
    if not dt > 0:
        raise ValueError(f"states are not consecutive in time (dt = {dt})")
    return dt


def numerical_dissipation(old: PhaseState, new: PhaseState, params: chem.ModelParams,
                          scheme: str, truncated: bool | None = None,
                          rule: int = DEFAULT_RULE) -> tuple[np.ndarray, float]:
    """Per-phase numerical dissipation and the total TND of one step.

    ``ND_i`` measures the gap between the linearized potential term and the
    exact increment of ``F``; TND adds the stabilizer terms
    ``tau_i ||grad(phi_i^{n+1} - phi_i^n)||^2`` and, for NTC2, the gap of the
    linearized product potential.
    """
    mesh = old.mesh
    quad = mesh.rule(rule)
    dt = _dt(old, new)
    eps = params.epsilon
    trunc = _truncated_for(scheme, truncated)
    scale = 24.0 / (eps * dt)
    q_old = [quad.at_points(p) for p in old.phases]
    q_new = [quad.at_points(p) for p in new.phases]
    nd = np.zeros(old.n_phases)
    for i, sig in enumerate(params.sigma.values):
        F0, f0, fp0 = chem.potential(q_old[i], trunc)
        F1 = chem.potential(q_new[i], trunc)[0]
        d = q_new[i] - q_old[i]
        nd[i] = scale * sig * quad.integrate((f0 + 0.5 * fp0 * d) * d - (F1 - F0))
    tnd = float(nd.sum())
    tau = new.tau or (0.0,) * old.n_phases
    K = mesh.stiffness
    for i, t in enumerate(tau):
        if t:
            d = new.phases[i] - old.phases[i]
            tnd += t * float(d @ (K @ d))
    if scheme.upper() == "NTC2" and params.Lambda:
        G0, g0 = chem.product_potential(q_old)
        G1 = chem.product_potential(q_new)[0]
        H = chem.product_hessian(q_old)
        d = [b - a for a, b in zip(q_old, q_new)]
        lin = 0.0
        for i in range(old.n_phases):
            Hd = sum(H[i][j] * d[j] for j in range(old.n_phases))
            lin = lin + (g0[i] + 0.5 * Hd) * d[i]
        tnd += scale * params.Lambda * quad.integrate(lin - (G1 - G0))
    return nd, tnd


def _dissipation_potentials(old: PhaseState, new: PhaseState, params: chem.ModelParams,
                            scheme: str, rule: int) -> np.ndarray:
    if scheme.upper() != "NTC2":
        return new.potentials
    mu_old = old.potentials if old.mu_valid else chemical_potential(old, params, False, rule)
    return 0.5 * (mu_old + new.potentials)


def energy_law_residual(old: PhaseState, new: PhaseState, params: chem.ModelParams,
                        scheme: str, truncated: bool | None = None,
                        rule: int = DEFAULT_RULE) -> float:
    """``dt E + sum c_i M_i ||grad mu_i||^2`` of one step.

    Decoupled schemes use ``c_i = 1/2`` and ``mu^{n+1}``; the truncated
    energy is used for TD1.  NTC2 uses ``c_i = 1`` and the midpoint
    potential, so that the residual equals ``-TND``.
    """
    dt = _dt(old, new)
    trunc = _truncated_for(scheme, truncated)
    dE = (energy(new, params, trunc, rule) - energy(old, params, trunc, rule)) / dt
    mu = _dissipation_potentials(old, new, params, scheme, rule)
    c = 1.0 if scheme.upper() == "NTC2" else 0.5
    K = old.mesh.stiffness
    return float(dE) + sum(c * m * float(v @ (K @ v)) for m, v in zip(params.mobility, mu))


def energy_balance(old: PhaseState, new: PhaseState, params: chem.ModelParams,
                   scheme: str, truncated: bool | None = None,
                   rule: int = DEFAULT_RULE) -> tuple[float, float]:
    """Exact discrete energy identity ``dt E + sum M_i ||grad mu_i||^2 + TND``.

    Returns ``(imbalance, scale)`` where ``scale`` is the largest of the
    three terms in absolute value, for relative comparisons.
    """
    dt = _dt(old, new)
    trunc = _truncated_for(scheme, truncated)
    dE = (energy(new, params, trunc, rule) - energy(old, params, trunc, rule)) / dt
    mu = _dissipation_potentials(old, new, params, scheme, rule)
    K = old.mesh.stiffness
    diss = sum(m * float(v @ (K @ v)) for m, v in zip(params.mobility, mu))
    _, tnd = numerical_dissipation(old, new, params, scheme, truncated, rule)
    return float(dE + diss + tnd), float(max(abs(dE), abs(diss), abs(tnd)))


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E: float
    E_trunc: float
    E_kin: float
    volumes: tuple[float, ...]
    constraint_L2: float
    constraint_Linf: float
    ND: tuple[float, ...] = ()
    TND: float = math.nan
    energy_law_residual: float = math.nan


def record(state: PhaseState, params: chem.ModelParams, scheme: str,
           previous: PhaseState | None = None, truncated: bool | None = None,
           kinetic: float = 0.0) -> DiagnosticsRecord:
    """Diagnostics of ``state``; step quantities need ``previous``."""
    c2, cinf = constraint_norms(state)
    nd, tnd, res = (), math.nan, math.nan
    if previous is not None:
        nd_arr, tnd = numerical_dissipation(previous, state, params, scheme, truncated)
        nd = tuple(float(v) for v in nd_arr)
        res = energy_law_residual(previous, state, params, scheme, truncated)
    return DiagnosticsRecord(
        t=state.t,
        E=energy(state, params, False),
        E_trunc=energy(state, params, True),
        E_kin=kinetic,
        volumes=tuple(float(v) for v in volumes(state)),
        constraint_L2=c2,
        constraint_Linf=cinf,
        ND=nd,
        TND=tnd,
        energy_law_residual=res,
    )


# --------------------------------------------------------------------------
# experimental order of convergence


def rate(e_coarse: float, e_fine: float, dt_coarse: float, dt_fine: float) -> float:
    """EOC between two adjacent time steps; nan when an error vanishes."""
    if e_coarse <= 0 or e_fine <= 0:
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(dt_coarse / dt_fine)


@dataclass(frozen=True)
class EocRow:
    dt: float
    e2_phi: float
    e1_phi: float
    e2_mu: float
    e1_mu: float
    r2_phi: float = math.nan
    r1_phi: float = math.nan
    r2_mu: float = math.nan
    r1_mu: float = math.nan


COLUMNS = ("dt", "e2_phi", "r2_phi", "e1_phi", "r1_phi", "e2_mu", "r2_mu", "e1_mu", "r1_mu")


@dataclass(frozen=True)
class EocTable:
    rows: tuple[EocRow, ...] = field(default=())

    def mean_rate(self, name: str) -> float:
        vals = [getattr(r, name) for r in self.rows[1:]]
        vals = [v for v in vals if not math.isnan(v)]
        return float(np.mean(vals)) if vals else math.nan

    def to_csv(self) -> str:
        lines = [",".join(COLUMNS)]
        for r in self.rows:
            lines.append(",".join(f"{getattr(r, c):.8e}" for c in COLUMNS))
        return "\n".join(lines) + "\n"


def eoc_from_errors(dts, errors: dict[str, list[float]]) -> EocTable:
    """Build a table from raw errors keyed by ``e2_phi``, ``e1_phi``, ``e2_mu``, ``e1_mu``."""
    dts = [float(d) for d in dts]
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("time steps must be strictly decreasing")
    keys = ("e2_phi", "e1_phi", "e2_mu", "e1_mu")
    cols = {k: list(errors.get(k, [math.nan] * len(dts))) for k in keys}
    rows = []
    for k, dt in enumerate(dts):
        vals = {key: cols[key][k] for key in keys}
        if k:
            for key in keys:
                vals["r" + key[1:]] = rate(cols[key][k - 1], cols[key][k], dts[k - 1], dt)
        rows.append(EocRow(dt, **vals))
    return EocTable(tuple(rows))


def _stacked_error(ref: np.ndarray, val: np.ndarray, M, K) -> tuple[float, float]:
    A = M + K
    d = ref - val
    num2 = sum(float(v @ (M @ v)) for v in d)
    den2 = sum(float(v @ (M @ v)) for v in ref)
    num1 = sum(float(v @ (A @ v)) for v in d)
    den1 = sum(float(v @ (A @ v)) for v in ref)
    if den2 <= 0 or den1 <= 0:
        raise UndefinedRateError("reference solution has zero norm; relative error undefined")
    return math.sqrt(num2 / den2), math.sqrt(num1 / den1)


def eoc(reference: PhaseState, runs, tol_t: float = 1e-12) -> EocTable:
    """Relative L2/H1 errors of each ``(dt, state)`` against ``reference``.

    The phases (and the potentials) are stacked into one vector before
    norming.  Rates compare adjacent rows.
    """
    runs = sorted(runs, key=lambda r: -r[0])
    M, K = reference.mesh.mass, reference.mesh.stiffness
    errs = {"e2_phi": [], "e1_phi": [], "e2_mu": [], "e1_mu": []}
    for dt, st in runs:
        if st.mesh.n_vertices != reference.mesh.n_vertices:
            raise ValueError("all runs must share the reference mesh")
        if abs(st.t - reference.t) > tol_t * max(1.0, abs(reference.t)):
            raise ValueError(f"run at dt={dt} ends at t={st.t}, reference at t={reference.t}")
        e2, e1 = _stacked_error(reference.phases, st.phases, M, K)
        errs["e2_phi"].append(e2)
        errs["e1_phi"].append(e1)
        e2, e1 = _stacked_error(reference.potentials, st.potentials, M, K)
        errs["e2_mu"].append(e2)
        errs["e1_mu"].append(e1)
    return eoc_from_errors([r[0] for r in runs], errs)
