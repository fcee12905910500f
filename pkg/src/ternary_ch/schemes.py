"""Linear time-stepping engines for the penalized N-phase Cahn-Hilliard system.

Decoupled schemes (TD1, NTD1, NCOMP) solve one 2-block system in
``(phi_i, mu_i)`` per phase, sweeping i = 1..N and reusing the phases already
advanced in the current step.  NTC2 solves one coupled 2N-block system with
block order ``(phi_1, mu_1, ..., phi_N, mu_N)``.

Every step is a pure function: it returns a new :class:`PhaseState`.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import chemistry as chem
from .linalg import BlockSystem, SolverSettings, flatten_block_system, solve
from .mesh import (
    DEFAULT_RULE,
    Mesh,
    apply_dirichlet_rows,
    assemble_load_qp,
    assemble_weighted_mass_qp,
    l2_project,
)

SCHEMES = ("TD1", "NTD1", "NTC2", "NCOMP")
TAU_MODES = ("auto", "explicit", "zero")


class StepError(RuntimeError):
    """A time step failed; ``step`` is the 1-based index of the failing step."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


class StabilityWarning(UserWarning):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Volume fractions and chemical potentials at one time level.

    ``phases`` and ``potentials`` have shape ``(N, n_vertices)`` and are
    read-only.  ``mu_valid`` tells whether ``potentials`` holds a genuine
    chemical potential (False for freshly initialized states, whose
    potentials are zero).  ``volumes`` is ``int phi_i`` at construction.
    """

    mesh: Mesh
    t: float
    phases: np.ndarray
    potentials: np.ndarray
    mu_valid: bool = False
    tau: tuple[float, ...] | None = None
    volumes: tuple[float, ...] = field(default=())

    def __post_init__(self):
        phases = _frozen(self.phases)
        if phases.ndim != 2 or phases.shape[1] != self.mesh.n_vertices:
            raise ValueError(
                f"phases must have shape (N, {self.mesh.n_vertices}), got {phases.shape}"
            )
        pots = _frozen(self.potentials)
        if pots.shape != phases.shape:
            raise ValueError(f"potentials shape {pots.shape} != phases shape {phases.shape}")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "potentials", pots)
        if not self.volumes:
            vols = tuple(float(v) for v in self.mesh.mass.sum(axis=0).A1 @ phases.T)
            object.__setattr__(self, "volumes", vols)

    @property
    def n_phases(self) -> int:
        return self.phases.shape[0]

    def replace(self, **changes) -> "PhaseState":
        changes.setdefault("volumes", ())
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SchemeConfig:
    """Time-stepping configuration.

    ``tau_mode=None`` picks the per-scheme default: ``"auto"`` for TD1, NTC2
    and truncated NCOMP, ``"zero"`` for NTD1 and plain NCOMP.
    ``dirichlet`` lists ``(phase_index, value)`` pairs imposed on the
    boundary nodes.
    """

    scheme: str = "TD1"
    dt: float = 1e-4
    tau_mode: str | None = None
    truncated: bool = False
    solver: SolverSettings = SolverSettings()
    dirichlet: tuple[tuple[int, float], ...] = ()
    rule: int = DEFAULT_RULE

    def __post_init__(self):
        scheme = self.scheme.upper()
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        object.__setattr__(self, "scheme", scheme)
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.tau_mode is not None and self.tau_mode not in TAU_MODES:
            raise ValueError(f"unknown tau mode {self.tau_mode!r}; choose from {TAU_MODES}")

    @property
    def uses_truncation(self) -> bool:
        if self.scheme == "TD1":
            return True
        if self.scheme == "NCOMP":
            return self.truncated
        return False

    @property
    def effective_tau_mode(self) -> str:
        if self.tau_mode is not None:
            return self.tau_mode
        if self.scheme == "NTD1" or (self.scheme == "NCOMP" and not self.truncated):
            return "zero"
        return "auto"


def init_state(mesh: Mesh, ics: Sequence, params: chem.ModelParams | None = None,
               method: str = "l2", t0: float = 0.0) -> PhaseState:
    """Initial state from analytic ICs ``ic(x, y)`` or nodal arrays.

    ``method="l2"`` projects callables in L2 (high-order quadrature of the
    IC); ``"nodal"`` interpolates them.  Arrays are taken as nodal values.
    """
    if params is not None and len(ics) != params.n_phases:
        raise ValueError(f"{len(ics)} initial conditions for {params.n_phases} phases")
    if method not in ("l2", "nodal"):
        raise ValueError(f"unknown initialization method {method!r}")
    phases = []
    for ic in ics:
        if callable(ic):
            phases.append(l2_project(mesh, ic) if method == "l2" else mesh.interpolate(ic))
        else:
            phases.append(mesh.check_field(ic).copy())
    phases = np.array(phases)
    return PhaseState(mesh, t0, phases, np.zeros_like(phases))


# --------------------------------------------------------------------------
# stabilization


def resolve_tau(state: PhaseState, params: chem.ModelParams, config: SchemeConfig) -> np.ndarray:
    """Per-phase stabilizers for the step leaving ``state``."""
    n = state.n_phases
    mode = config.effective_tau_mode
    if mode == "zero":
        return np.zeros(n)
    sig, mob, eps = params.sigma.values, params.mobility, params.epsilon

    def threshold(i):
        if config.uses_truncation:
            return chem.tau_threshold(mob[i], sig[i], eps, "TD1")
        fp = chem.double_well(state.phases[i])[2]
        return chem.tau_threshold(mob[i], sig[i], eps, "NTD1", float(np.max(np.abs(fp))))

    if mode == "auto":
        return np.array([threshold(i) for i in range(n)])
    if params.tau is None:
        raise chem.ParameterError("tau mode 'explicit' needs params.tau")
    tau = np.array(params.tau, dtype=float)
    for i in range(n):
        need = threshold(i)
        if tau[i] < need and config.scheme != "NTC2":
            warnings.warn(
                f"tau_{i + 1} = {tau[i]:.3e} is below the stability threshold {need:.3e}",
                StabilityWarning,
                stacklevel=3,
            )
    return tau


# --------------------------------------------------------------------------
# chemical potential


def chemical_potential(state: PhaseState, params: chem.ModelParams, truncated: bool = False,
                       rule: int = DEFAULT_RULE, solver: SolverSettings | None = None) -> np.ndarray:
    """L2 representative of the variational derivative of the energy at ``state``."""
    mesh = state.mesh
    quad = mesh.rule(rule)
    M, K = mesh.mass, mesh.stiffness
    eps = params.epsilon
    q = np.array([quad.at_points(p) for p in state.phases])
    _, grad = chem.product_potential(list(q))
    s = state.phases.sum(axis=0) - 1.0
    mu = np.empty_like(state.phases)
    for i, sig in enumerate(params.sigma.values):
        f = chem.potential(q[i], truncated)[1]
        rhs = (
            0.75 * eps * sig * (K @ state.phases[i])
            + (24.0 / eps) * sig * assemble_load_qp(mesh, f, rule)
            + (24.0 / eps) * params.Lambda * assemble_load_qp(mesh, grad[i], rule)
            + (M @ s) / params.lam
        )
        mu[i] = solve(M, rhs, _tight(solver))
    return mu


def _tight(solver: SolverSettings | None) -> SolverSettings:
    s = solver or SolverSettings()
    return dataclasses.replace(s, tol=min(s.tol, 1e-12))


# --------------------------------------------------------------------------
# decoupled step


TransportHook = Callable[[int], tuple]


def decoupled_step(state: PhaseState, params: chem.ModelParams, config: SchemeConfig,
                   truncated: bool, transport: TransportHook | None = None) -> PhaseState:
    """Sequential per-phase solves shared by TD1, NTD1 and NCOMP.

    ``transport(i)`` may return ``(matrix, vector)`` added to the mu-row
    matrix block and right-hand side of phase ``i``; the NSCH substeps use it.
    """
    mesh = state.mesh
    N = state.n_phases
    if N != params.n_phases:
        raise ValueError(f"state has {N} phases, parameters describe {params.n_phases}")
    dt, eps, lam, Lam = config.dt, params.epsilon, params.lam, params.Lambda
    quad = mesh.rule(config.rule)
    M, K = mesh.mass, mesh.stiffness
    n = mesh.n_vertices
    tau = resolve_tau(state, params, config)
    dirichlet = dict(config.dirichlet)

    old = state.phases
    q_old = np.array([quad.at_points(p) for p in old])
    q_new = q_old.copy()
    sq_old = q_old**2
    sq_new = sq_old.copy()
    Ms = M @ (old.sum(axis=0) - 1.0)
    lower_sum = np.zeros(n)

    new_phi = np.empty_like(old)
    new_mu = np.empty_like(old)
    for i in range(N):
        sig = params.sigma[i]
        phi_n = old[i]
        weight = np.ones_like(sq_old[0])
        for j in range(N):
            if j != i:
                weight = weight * (sq_new[j] if j < i else sq_old[j])
        _, f, fp = chem.potential(q_old[i], truncated)
        W = assemble_weighted_mass_qp(mesh, weight, config.rule)
        Af = assemble_weighted_mass_qp(mesh, fp, config.rule)
        bf = assemble_load_qp(mesh, f, config.rule)

        cap = 0.375 * eps * sig
        A11 = ((cap + tau[i] * dt) * K + (12.0 / eps) * (Lam * W + sig * Af) + M / (2.0 * lam))
        r1 = (
            (tau[i] * dt - cap) * (K @ phi_n)
            - (12.0 / eps) * Lam * (W @ phi_n)
            - (24.0 / eps) * sig * bf
            + (12.0 / eps) * sig * (Af @ phi_n)
            - Ms / lam
            - (M @ lower_sum) / lam
            + (M @ phi_n) / (2.0 * lam)
        )
        A22 = params.mobility[i] * K
        r2 = (M @ phi_n) / dt
        if transport is not None:
            extra_A, extra_r = transport(i)
            A22 = A22 + extra_A
            r2 = r2 + extra_r

        sys = BlockSystem([n, n], rhs=[r1, r2])
        sys.add(0, 0, A11)
        sys.add(0, 1, M, -1.0)
        sys.add(1, 0, M, 1.0 / dt)
        sys.add(1, 1, A22)
        A, b = flatten_block_system(sys)
        if i in dirichlet:
            A, b = apply_dirichlet_rows(A, b, mesh.boundary_nodes, dirichlet[i])
        x = solve(A, b, config.solver)

        new_phi[i], new_mu[i] = x[:n], x[n:]
        lower_sum += new_phi[i] - phi_n
        q_new[i] = quad.at_points(new_phi[i])
        sq_new[i] = q_new[i] ** 2

    return PhaseState(mesh, state.t + dt, new_phi, new_mu, True, tuple(tau), state.volumes)


def _require_three(state: PhaseState, name: str):
    if state.n_phases != 3:
        raise ValueError(f"{name} is the three-phase scheme; use NCOMP for N = {state.n_phases}")


def td1_step(state: PhaseState, params: chem.ModelParams, config: SchemeConfig) -> PhaseState:
    _require_three(state, "TD1")
    return decoupled_step(state, params, config, truncated=True)


def ntd1_step(state: PhaseState, params: chem.ModelParams, config: SchemeConfig) -> PhaseState:
    _require_three(state, "NTD1")
    return decoupled_step(state, params, config, truncated=False)


def ncomp_step(state: PhaseState, params: chem.ModelParams, config: SchemeConfig) -> PhaseState:
    if state.n_phases < 2:
        raise ValueError("NCOMP needs at least two phases")
    return decoupled_step(state, params, config, truncated=config.truncated)


# --------------------------------------------------------------------------
# coupled second-order step


def ntc2_step(state: PhaseState, params: chem.ModelParams, config: SchemeConfig) -> PhaseState:
    """Coupled Crank-Nicolson type step with OD2 linearizations.

    The mu unknowns are midpoint values; the stored potential is
    ``2 mu^{n+1/2} - mu^n``.  A state without a valid potential gets the
    variational derivative at ``phi^n`` as ``mu^n``.
    """
    mesh = state.mesh
    N = state.n_phases
    if N != params.n_phases:
        raise ValueError(f"state has {N} phases, parameters describe {params.n_phases}")
    dt, eps, lam, Lam = config.dt, params.epsilon, params.lam, params.Lambda
    quad = mesh.rule(config.rule)
    M, K = mesh.mass, mesh.stiffness
    n = mesh.n_vertices
    tau = resolve_tau(state, params, config)
    dirichlet = dict(config.dirichlet)

    old = state.phases
    mu_old = state.potentials if state.mu_valid else chemical_potential(
        state, params, False, config.rule, config.solver)
    q = [quad.at_points(p) for p in old]
    _, grad = chem.product_potential(q)
    H = chem.product_hessian(q)
    Ms = M @ (old.sum(axis=0) - 1.0)
    Mtot = M @ old.sum(axis=0)

    sys = BlockSystem([n] * (2 * N))
    rhs = []
    for i in range(N):
        sig = params.sigma[i]
        phi_n = old[i]
        _, f, fp = chem.double_well(q[i])
        Af = assemble_weighted_mass_qp(mesh, fp, config.rule)
        cap = 0.375 * eps * sig
        r1 = (
            (tau[i] * dt - cap) * (K @ phi_n)
            - (24.0 / eps) * Lam * assemble_load_qp(mesh, grad[i], config.rule)
            - (24.0 / eps) * sig * assemble_load_qp(mesh, f, config.rule)
            + (12.0 / eps) * sig * (Af @ phi_n)
            - Ms / lam
            + Mtot / (2.0 * lam)
        )
        sys.add(2 * i, 2 * i, (cap + tau[i] * dt) * K + (12.0 / eps) * sig * Af)
        for j in range(N):
            Hij = assemble_weighted_mass_qp(mesh, H[i][j], config.rule)
            sys.add(2 * i, 2 * j, (12.0 / eps) * Lam * Hij + M / (2.0 * lam))
            r1 = r1 + (12.0 / eps) * Lam * (Hij @ old[j])
        sys.add(2 * i, 2 * i + 1, M, -1.0)
        sys.add(2 * i + 1, 2 * i, M, 1.0 / dt)
        sys.add(2 * i + 1, 2 * i + 1, K, params.mobility[i])
        rhs += [r1, (M @ phi_n) / dt]
    sys.rhs = rhs
    A, b = flatten_block_system(sys)
    for i, value in dirichlet.items():
        A, b = apply_dirichlet_rows(A, b, mesh.boundary_nodes, value, offset=2 * i * n)
    x = solve(A, b, config.solver).reshape(2 * N, n)

    new_phi = x[0::2]
    new_mu = 2.0 * x[1::2] - mu_old
    return PhaseState(mesh, state.t + dt, new_phi, new_mu, True, tuple(tau), state.volumes)


STEPPERS = {"TD1": td1_step, "NTD1": ntd1_step, "NTC2": ntc2_step, "NCOMP": ncomp_step}


def step(state: PhaseState, params: chem.ModelParams, config: SchemeConfig) -> PhaseState:
    return STEPPERS[config.scheme](state, params, config)


Callback = Callable[[int, "PhaseState | None", PhaseState], None]


def run(initial: PhaseState, params: chem.ModelParams, config: SchemeConfig, t_end: float,
        callbacks: Sequence[Callback] = (), stride: int = 1,
        stepper: Callable | None = None) -> PhaseState:
    """Advance ``initial`` to ``t_end`` with fixed steps.

    Callbacks receive ``(step_index, previous_state, state)``; they fire for
    the initial state (with ``previous_state=None``), every ``stride`` steps
    and after the final step.  The last step is shortened so that the run
    lands exactly on ``t_end``.
    """
    if stride < 1:
        raise ValueError("stride must be at least 1")
    if t_end < initial.t:
        raise ValueError(f"t_end = {t_end} precedes the initial time {initial.t}")
    stepper = stepper or step
    report = chem.solvability_guard(params, initial.mesh.h, config.dt)
    if not report.satisfied:
        warnings.warn(report.describe(), StabilityWarning, stacklevel=2)

    span = t_end - initial.t
    n_steps = max(0, math.ceil(span / config.dt - 1e-9))
    for cb in callbacks:
        cb(0, None, initial)
    state = initial
    for k in range(1, n_steps + 1):
        cfg = config
        if k == n_steps:
            last = t_end - state.t
            if abs(last - config.dt) > 1e-12 * config.dt:
                cfg = dataclasses.replace(config, dt=last)
        prev = state
        try:
            state = stepper(prev, params, cfg)
        except Exception as exc:  # noqa: BLE001 - re-raised with the step index
            raise StepError(k, exc) from exc
        if k == n_steps:
            state = state.replace(t=t_end, volumes=prev.volumes)
        if k % stride == 0 or k == n_steps:
            for cb in callbacks:
                cb(k, prev, state)
    return state
