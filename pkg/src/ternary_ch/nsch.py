"""Navier-Stokes coupling: mini-element flow step and transport-modified phase substeps.

Velocity components live in the P1-bubble space with degrees of freedom
ordered as ``[vertex values (n), bubble coefficients (ntri)]``; the pressure
is P1.  The flattened saddle-point unknown is ``[u_x, u_y, p]``.

One NSCH step runs the decoupled phase substeps with the transport term
``-(u*_i phi_i^n, grad mu_bar)``, where
``u*_i = u^n - N dt phi_i^n grad mu_i^{n+1}``, followed by the momentum
solve driven by the average of the ``u*_i``, i.e.
``u^n - dt sum_i phi_i^n grad mu_i^{n+1}``.  With these weights the total
energy (free plus kinetic) cannot increase.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from . import chemistry as chem
from .linalg import solve
from .mesh import Mesh, apply_dirichlet_rows, assemble_weighted_stiffness_qp
from .schemes import PhaseState, SchemeConfig, StepError, decoupled_step

FLOW_RULE = 5  # degree 8: exact for the convection form on mini-element fields


def rotation_profile(x, y, center=(0.0, 0.0)):
    """Solenoidal rotating field with zero normal flux on [c-1/8, c+1/8]^2."""
    a = 4.0 * np.pi * (np.asarray(x) - center[0] - 0.125)
    b = 4.0 * np.pi * (np.asarray(y) - center[1] - 0.125)
    ux = 2.0 * np.pi * np.sin(a) ** 2 * np.cos(b)
    uy = -4.0 * np.pi * np.sin(a) * np.cos(a) * np.sin(b)
    return ux, uy


class MiniSpace:
    """P1-bubble velocity space on a mesh, with quadrature tables."""

    def __init__(self, mesh: Mesh, rule: int = FLOW_RULE):
        self.mesh = mesh
        self.quad = mesh.rule(rule)
        n, nt = mesh.n_vertices, mesh.n_triangles
        self.n_vertices = n
        self.size = n + nt
        self.dofs = np.column_stack([mesh.triangles, n + np.arange(nt)])
        lam = self.quad.basis  # (nq, 3)
        bub = 27.0 * lam[:, 0] * lam[:, 1] * lam[:, 2]
        self.values = np.column_stack([lam, bub])  # (nq, 4)
        g = mesh.gradients  # (nt, 3, 2)
        nq = lam.shape[0]
        grads = np.empty((nt, nq, 4, 2))
        grads[:, :, :3, :] = g[:, None, :, :]
        prods = np.column_stack([lam[:, 1] * lam[:, 2], lam[:, 0] * lam[:, 2], lam[:, 0] * lam[:, 1]])
        grads[:, :, 3, :] = 27.0 * np.einsum("qa,tad->tqd", prods, g)
        self.grads = grads
        self.wdet = self.quad.wdet
        rows = np.repeat(self.dofs, 4, axis=1).ravel()
        cols = np.tile(self.dofs, (1, 4)).ravel()
        self._rc = (rows, cols)
        self.mass = self.assemble(np.einsum("tq,qa,qb->tab", self.wdet, self.values, self.values))
        # divergence blocks: -(div u, q) for P1 q, one per velocity component
        self.div = []
        prow = np.repeat(mesh.triangles, 4, axis=1).ravel()
        pcol = np.tile(self.dofs, (1, 3)).ravel()
        for d in range(2):
            local = -np.einsum("tq,qa,tqb->tab", self.wdet, lam, grads[..., d])
            self.div.append(sparse.coo_matrix((local.ravel(), (prow, pcol)),
                                              shape=(n, self.size)).tocsr())

    def assemble(self, local: np.ndarray) -> sparse.csr_matrix:
        rows, cols = self._rc
        A = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(self.size, self.size)).tocsr()
        A.sum_duplicates()
        return A

    def at_points(self, coef: np.ndarray) -> np.ndarray:
        return coef[self.dofs] @ self.values.T

    def grad_at_points(self, coef: np.ndarray) -> np.ndarray:
        return np.einsum("ta,tqad->tqd", coef[self.dofs], self.grads)

    def load(self, qvalues: np.ndarray) -> np.ndarray:
        local = (self.wdet * qvalues) @ self.values
        return np.bincount(self.dofs.ravel(), weights=local.ravel(), minlength=self.size)

    def stiffness(self, qweight: np.ndarray) -> sparse.csr_matrix:
        return self.assemble(np.einsum("tq,tqad,tqbd->tab", self.wdet * qweight, self.grads, self.grads))

    def convection(self, wx: np.ndarray, wy: np.ndarray) -> sparse.csr_matrix:
        """Matrix of c(w, u, v) = ((w . grad) u, v) + 1/2 ((div w) u, v); rows test v."""
        w = np.stack([self.at_points(wx), self.at_points(wy)], axis=-1)
        div = self.grad_at_points(wx)[..., 0] + self.grad_at_points(wy)[..., 1]
        adv = np.einsum("tqd,tqbd->tqb", w, self.grads)
        local = np.einsum("tq,qa,tqb->tab", self.wdet, self.values, adv)
        local += 0.5 * np.einsum("tq,qa,qb->tab", self.wdet * div, self.values, self.values)
        return self.assemble(local)


def mini_space(mesh: Mesh) -> MiniSpace:
    cached = mesh.__dict__.get("_mini")
    if cached is None:
        cached = mesh.__dict__["_mini"] = MiniSpace(mesh)
    return cached


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FlowState:
    """Velocity ``(2, n + ntri)`` on the mini element and P1 pressure."""

    mesh: Mesh
    velocity: np.ndarray
    pressure: np.ndarray

    def __post_init__(self):
        size = self.mesh.n_vertices + self.mesh.n_triangles
        u = _frozen(self.velocity)
        if u.shape != (2, size):
            raise ValueError(f"velocity must have shape (2, {size}), got {u.shape}")
        object.__setattr__(self, "velocity", u)
        object.__setattr__(self, "pressure", _frozen(self.mesh.check_field(self.pressure)))

    @property
    def vertex_velocity(self) -> np.ndarray:
        """Nodal velocity (n, 2); bubbles vanish at vertices."""
        return self.velocity[:, : self.mesh.n_vertices].T

    def kinetic_energy(self) -> float:
        Mu = mini_space(self.mesh).mass
        return 0.5 * sum(float(c @ (Mu @ c)) for c in self.velocity)

    def divergence_residual(self) -> float:
        """Max over P1 test functions of |(div u, q)|."""
        sp = mini_space(self.mesh)
        r = sp.div[0] @ self.velocity[0] + sp.div[1] @ self.velocity[1]
        return float(np.max(np.abs(r)))


def init_flow(mesh: Mesh, profile: Callable | None = None, zero_boundary: bool = False) -> FlowState:
    """Flow state with vertex values interpolated from ``profile(x, y)``."""
    size = mesh.n_vertices + mesh.n_triangles
    u = np.zeros((2, size))
    if profile is not None:
        ux, uy = profile(mesh.vertices[:, 0], mesh.vertices[:, 1])
        u[0, : mesh.n_vertices] = ux
        u[1, : mesh.n_vertices] = uy
        if zero_boundary:
            u[:, mesh.boundary_nodes] = 0.0
    return FlowState(mesh, u, np.zeros(mesh.n_vertices))


@dataclass(frozen=True)
class NSCHConfig:
    """NSCH step options.

    ``boundary`` is ``None`` for no-slip walls or a callable ``(x, y) ->
    (ux, uy)`` of Dirichlet velocity data.  ``transport_correction=False``
    drops the implicit ``phi_i^n grad mu_i`` part of ``u*_i`` (the plain
    advected substeps).  ``frozen_flow`` keeps the velocity fixed.
    """

    phase: SchemeConfig = SchemeConfig("TD1")
    boundary: Callable | None = None
    transport_correction: bool = True
    frozen_flow: bool = False

    def __post_init__(self):
        if self.phase.scheme not in ("TD1", "NTD1", "NCOMP"):
            raise ValueError("NSCH phase substeps use a decoupled scheme (TD1, NTD1 or NCOMP)")


def viscosity(params: chem.ModelParams, qphases: Sequence[np.ndarray]) -> np.ndarray:
    nu = np.asarray(params.nu, dtype=float)
    if len(nu) != len(qphases):
        nu = np.broadcast_to(nu, (len(qphases),))
    val = sum(v * q for v, q in zip(nu, qphases))
    return np.maximum(val, nu.min() / 10.0)


def _transport(state: PhaseState, flow: FlowState, params, config: NSCHConfig, i: int):
    mesh = state.mesh
    sp = mini_space(mesh)
    quad = sp.quad
    phi_q = quad.at_points(state.phases[i])
    u = np.stack([sp.at_points(flow.velocity[0]), sp.at_points(flow.velocity[1])], axis=-1)
    # (u^n phi^n, grad psi_a); gradients of P1 functions are constant per triangle
    flux = np.einsum("tq,tqd->td", sp.wdet * phi_q, u)
    local = np.einsum("td,tad->ta", flux, mesh.gradients)
    load = np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)
    if config.transport_correction:
        N = state.n_phases
        A = assemble_weighted_stiffness_qp(mesh, N * config.phase.dt * phi_q**2, FLOW_RULE)
    else:
        A = sparse.csr_matrix((mesh.n_vertices, mesh.n_vertices))
    return A, load


def nsch_phase_substeps(state: PhaseState, flow: FlowState, params: chem.ModelParams,
                        config: NSCHConfig) -> PhaseState:
    if flow.mesh is not state.mesh:
        raise ValueError("flow and phase states must share one mesh")
    truncated = config.phase.uses_truncation
    hook = partial(_transport, state, flow, params, config)
    return decoupled_step(state, params, config.phase, truncated, transport=hook)


def nsch_flow_step(flow: FlowState, old: PhaseState, new: PhaseState, params: chem.ModelParams,
                   config: NSCHConfig) -> FlowState:
    """Momentum and continuity solve for ``u^{n+1}``, ``p^{n+1}``.

    The forcing is ``sum_i phi_i^n grad mu_i^{n+1}`` taken from the phase
    substeps; convection and viscosity are frozen at ``u^n`` and ``phi^n``.
    """
    mesh = flow.mesh
    sp = mini_space(mesh)
    quad = sp.quad
    dt = config.phase.dt
    n, nu_size = mesh.n_vertices, sp.size

    q_phi = [quad.at_points(p) for p in old.phases]
    S = sp.mass / dt + sp.convection(*flow.velocity) + sp.stiffness(viscosity(params, q_phi))
    force = np.zeros(quad.wdet.shape + (2,))
    for i in range(old.n_phases):
        gmu = np.einsum("ta,tad->td", new.potentials[i][mesh.triangles], mesh.gradients)
        force += q_phi[i][..., None] * gmu[:, None, :]
    rhs = [sp.mass @ flow.velocity[d] / dt - sp.load(force[..., d]) for d in range(2)]

    Bx, By = sp.div
    A = sparse.bmat([[S, None, Bx.T], [None, S, By.T], [Bx, By, None]], format="csr")
    b = np.concatenate([rhs[0], rhs[1], np.zeros(n)])

    bnodes = mesh.boundary_nodes
    if config.boundary is None:
        gx = gy = np.zeros(len(bnodes))
    else:
        xy = mesh.vertices[bnodes]
        gx, gy = (np.broadcast_to(np.asarray(v, dtype=float), (len(bnodes),))
                  for v in config.boundary(xy[:, 0], xy[:, 1]))
    A, b = apply_dirichlet_rows(A, b, bnodes, gx, offset=0)
    A, b = apply_dirichlet_rows(A, b, bnodes, gy, offset=nu_size)
    A, b = apply_dirichlet_rows(A, b, [0], 0.0, offset=2 * nu_size)
    x = solve(A, b, config.phase.solver)

    u = x[: 2 * nu_size].reshape(2, nu_size)
    p = x[2 * nu_size:]
    p = p - float(np.sum(mesh.mass @ p)) / mesh.area
    return FlowState(mesh, u, p)


def nsch_step(state: PhaseState, flow: FlowState, params: chem.ModelParams,
              config: NSCHConfig) -> tuple[PhaseState, FlowState]:
    new = nsch_phase_substeps(state, flow, params, config)
    if config.frozen_flow:
        return new, flow
    return new, nsch_flow_step(flow, state, new, params, config)


def total_energy(state: PhaseState, flow: FlowState, params: chem.ModelParams,
                 truncated: bool) -> float:
    from .diagnostics import energy

    return energy(state, params, truncated) + flow.kinetic_energy()


def run_nsch(state: PhaseState, flow: FlowState, params: chem.ModelParams, config: NSCHConfig,
             t_end: float, callbacks: Sequence[Callable] = (), stride: int = 1):
    """Fixed-step NSCH integration; callbacks get ``(k, prev, state, flow)``."""
    if stride < 1:
        raise ValueError("stride must be at least 1")
    dt = config.phase.dt
    n_steps = max(0, math.ceil((t_end - state.t) / dt - 1e-9))
    for cb in callbacks:
        cb(0, None, state, flow)
    for k in range(1, n_steps + 1):
        cfg = config
        if k == n_steps and abs((t_end - state.t) - dt) > 1e-12 * dt:
            cfg = dataclasses.replace(config, phase=dataclasses.replace(config.phase, dt=t_end - state.t))
        prev = state
        try:
            state, flow = nsch_step(prev, flow, params, cfg)
        except Exception as exc:  # noqa: BLE001
            raise StepError(k, exc) from exc
        if k == n_steps:
            state = state.replace(t=t_end, volumes=prev.volumes)
        if k % stride == 0 or k == n_steps:
            for cb in callbacks:
                cb(k, prev, state, flow)
    return state, flow
