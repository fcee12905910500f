"""Structured P1 triangulations, quadrature and sparse assembly.

Vertices are numbered lexicographically (x fastest) and every cell of the
grid is split along its lower-left to upper-right diagonal.  All bilinear
forms are assembled in CSR format with ``scipy.sparse``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse


class InvalidDomainError(ValueError):
    pass


class DimensionError(ValueError):
    pass


def triangle_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss rule on the reference triangle (0,0), (1,0), (0,1).

    Uses ``n`` Gauss-Legendre points per direction of the Duffy map, which is
    exact for polynomials of total degree ``2n - 2``.  Weights sum to 1/2.

    Returns
    -------
    points : (n*n, 2) array
    weights : (n*n,) array
    """
    g, w = np.polynomial.legendre.leggauss(n)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    x = u.ravel()
    y = (v * (1.0 - u)).ravel()
    weights = (wu * wv * (1.0 - u)).ravel()
    return np.column_stack([x, y]), weights


# degree 6: exact for every nonlinear integrand of the three-phase schemes
DEFAULT_RULE = 4


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation of an axis-aligned rectangle.

    ``domain`` is ``(x0, x1, y0, y1)``.  ``triangles`` index into
    ``vertices`` with counterclockwise orientation.
    """

    domain: tuple[float, float, float, float]
    nx: int
    ny: int
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray
    h: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def area(self) -> float:
        x0, x1, y0, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    @cached_property
    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def gradients(self) -> np.ndarray:
        """Gradients of the three barycentric functions, shape (ntri, 3, 2)."""
        p = self.vertices[self.triangles]
        twice_area = 2.0 * self.triangle_areas
        g = np.empty((self.n_triangles, 3, 2))
        for a in range(3):
            b, c = (a + 1) % 3, (a + 2) % 3
            g[:, a, 0] = (p[:, b, 1] - p[:, c, 1]) / twice_area
            g[:, a, 1] = (p[:, c, 0] - p[:, b, 0]) / twice_area
        return g

    @cached_property
    def mass(self):
        return assemble_mass(self)

    @cached_property
    def stiffness(self):
        return assemble_stiffness(self)

    def rule(self, n: int = DEFAULT_RULE) -> "Quadrature":
        return _quadrature(self, n)

    @cached_property
    def _pattern(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR skeleton (indptr, indices) and the scatter map of local entries."""
        t = self.triangles
        n = self.n_vertices
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        keys, scatter = np.unique(rows * n + cols, return_inverse=True)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(keys // n, minlength=n), out=indptr[1:])
        return indptr, keys % n, scatter

    def check_field(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_vertices,):
            raise DimensionError(
                f"nodal field has shape {values.shape}, mesh has {self.n_vertices} vertices"
            )
        return values

    def interpolate(self, func) -> np.ndarray:
        """Nodal interpolant of ``func(x, y)`` (vectorized)."""
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return np.broadcast_to(np.asarray(func(x, y), dtype=float), x.shape).copy()


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Quadrature data mapped onto every triangle of a mesh.

    ``basis`` holds the P1 shape functions at the reference points (nq, 3);
    ``wdet`` the physical weights (ntri, nq) so that sum(wdet * g) integrates
    ``g`` over the domain.
    """

    points: np.ndarray
    basis: np.ndarray
    wdet: np.ndarray
    xy: np.ndarray
    triangles: np.ndarray

    def at_points(self, values: np.ndarray) -> np.ndarray:
        """Evaluate the P1 interpolant of nodal ``values`` at quadrature points."""
        return values[self.triangles] @ self.basis.T

    def integrate(self, qvalues: np.ndarray) -> float:
        return float(np.sum(self.wdet * qvalues))


def _quadrature(mesh: Mesh, n: int) -> Quadrature:
    cached = mesh.__dict__.get("_rules", {}).get(n)
    if cached is not None:
        return cached
    pts, w = triangle_rule(n)
    basis = np.column_stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]])
    wdet = 2.0 * mesh.triangle_areas[:, None] * w[None, :]
    corners = mesh.vertices[mesh.triangles]
    xy = np.einsum("qa,tad->tqd", basis, corners)
    quad = Quadrature(pts, basis, wdet, xy, mesh.triangles)
    mesh.__dict__.setdefault("_rules", {})[n] = quad
    return quad


def build_structured_mesh(domain, nx: int, ny: int) -> Mesh:
    """Triangulate ``domain = (x0, x1, y0, y1)`` with ``2 * nx * ny`` triangles."""
    x0, x1, y0, y1 = (float(v) for v in domain)
    if nx < 1 or ny < 1:
        raise InvalidDomainError(f"cell counts must be positive, got nx={nx}, ny={ny}")
    if not (x1 > x0 and y1 > y0):
        raise InvalidDomainError(f"degenerate rectangle {domain}")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    on_edge = (ii == 0) | (ii == nx) | (jj == 0) | (jj == ny)
    boundary = np.flatnonzero(on_edge.ravel())
    h = max((x1 - x0) / nx, (y1 - y0) / ny)
    return Mesh((x0, x1, y0, y1), nx, ny, vertices, triangles, boundary, h)


def mesh_for_spacing(domain, h: float) -> Mesh:
    """Structured mesh whose cell size does not exceed ``h`` in either direction."""
    x0, x1, y0, y1 = domain
    nx = max(1, int(np.ceil((x1 - x0) / h - 1e-9)))
    ny = max(1, int(np.ceil((y1 - y0) / h - 1e-9)))
    return build_structured_mesh(domain, nx, ny)


def _finalize(mesh: Mesh, local: np.ndarray) -> sparse.csr_matrix:
    indptr, indices, scatter = mesh._pattern
    n = mesh.n_vertices
    data = np.bincount(scatter, weights=local.ravel(), minlength=len(indices))
    A = sparse.csr_matrix((data, indices.copy(), indptr.copy()), shape=(n, n))
    A.eliminate_zeros()
    return A


def assemble_mass(mesh: Mesh) -> sparse.csr_matrix:
    """Consistent P1 mass matrix (exact element integration)."""
    local = mesh.triangle_areas[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))
    return _finalize(mesh, local)


def assemble_stiffness(mesh: Mesh) -> sparse.csr_matrix:
    g = mesh.gradients
    local = mesh.triangle_areas[:, None, None] * np.einsum("tad,tbd->tab", g, g)
    return _finalize(mesh, local)


def assemble_weighted_stiffness_qp(mesh: Mesh, qweight: np.ndarray, n: int = DEFAULT_RULE):
    """(w grad u, grad v) for a weight given at quadrature points."""
    quad = mesh.rule(n)
    g = mesh.gradients
    scale = np.sum(quad.wdet * qweight, axis=1)
    local = scale[:, None, None] * np.einsum("tad,tbd->tab", g, g)
    return _finalize(mesh, local)


def assemble_weighted_mass_qp(mesh: Mesh, qweight: np.ndarray, n: int = DEFAULT_RULE):
    """(w u, v) for a weight given by its values at quadrature points (ntri, nq)."""
    quad = mesh.rule(n)
    N = quad.basis
    local = np.einsum("tq,qa,qb->tab", quad.wdet * qweight, N, N)
    return _finalize(mesh, local)


def assemble_weighted_mass(mesh: Mesh, weight, n: int = DEFAULT_RULE) -> sparse.csr_matrix:
    """(w_h u, v) where ``w_h`` is the P1 interpolant of a nodal weight."""
    weight = mesh.check_field(weight)
    quad = mesh.rule(n)
    return assemble_weighted_mass_qp(mesh, quad.at_points(weight), n)


def assemble_load_qp(mesh: Mesh, qvalues: np.ndarray, n: int = DEFAULT_RULE) -> np.ndarray:
    """Load vector (g, psi_a) for ``g`` given at quadrature points."""
    quad = mesh.rule(n)
    local = (quad.wdet * qvalues) @ quad.basis
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def l2_project(mesh: Mesh, func, n: int = 6, mass=None) -> np.ndarray:
    """L2 projection of an analytic ``func(x, y)`` onto P1.

    The right-hand side uses an ``n``-point collapsed rule (degree 2n-2).
    """
    from .linalg import solve_sparse

    quad = mesh.rule(n)
    vals = np.asarray(func(quad.xy[..., 0], quad.xy[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, quad.wdet.shape)
    rhs = assemble_load_qp(mesh, vals, n)
    return solve_sparse(mesh.mass if mass is None else mass, rhs, tol=1e-12)


def integrate(mesh: Mesh, values, mass=None) -> float:
    values = mesh.check_field(values)
    mass = mesh.mass if mass is None else mass
    return float(np.sum(mass @ values))


def norms(mesh: Mesh, values, mass=None, stiffness=None) -> tuple[float, float, float]:
    """Discrete (L2, H1, Linf) norms of a nodal field."""
    v = mesh.check_field(values)
    mass = mesh.mass if mass is None else mass
    stiffness = mesh.stiffness if stiffness is None else stiffness
    m = float(v @ (mass @ v))
    k = float(v @ (stiffness @ v))
    linf = float(np.max(np.abs(v))) if v.size else 0.0
    return np.sqrt(max(m, 0.0)), np.sqrt(max(m + k, 0.0)), linf


def apply_dirichlet_rows(A, b, nodes, values, offset: int = 0):
    """Replace equations ``offset + nodes`` by the identity with prescribed values.

    Returns new (A, b); the columns are left intact so the coupling to the
    remaining unknowns is kept exact.
    """
    A = sparse.csr_matrix(A, copy=True)
    b = np.array(b, dtype=float, copy=True)
    idx = np.asarray(nodes) + offset
    keep = np.ones(A.shape[0])
    keep[idx] = 0.0
    A = sparse.diags(keep) @ A
    diag = np.zeros(A.shape[0])
    diag[idx] = 1.0
    A = (A + sparse.diags(diag)).tocsr()
    A.eliminate_zeros()
    b[idx] = values
    return A, b
