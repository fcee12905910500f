import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from ternary_ch.mesh import (
    DimensionError,
    InvalidDomainError,
    assemble_load_qp,
    assemble_mass,
    assemble_stiffness,
    assemble_weighted_mass,
    assemble_weighted_mass_qp,
    assemble_weighted_stiffness_qp,
    apply_dirichlet_rows,
    build_structured_mesh,
    integrate,
    l2_project,
    mesh_for_spacing,
    norms,
    triangle_rule,
)

UNIT = (0.0, 1.0, 0.0, 1.0)


def test_smallest_mesh():
    m = build_structured_mesh(UNIT, 1, 1)
    assert m.n_vertices == 4 and m.n_triangles == 2
    assert m.triangle_areas.sum() == pytest.approx(1.0, rel=1e-14)


def test_counting_formula():
    m = build_structured_mesh(UNIT, 2, 2)
    assert (m.n_vertices, m.n_triangles) == (9, 8)


def test_lens_spacing():
    m = build_structured_mesh((-0.25, 0.25, -0.1, 0.15), 150, 75)
    assert m.h == pytest.approx(1.0 / 300, rel=1e-12)
    assert mesh_for_spacing((-0.25, 0.25, -0.1, 0.15), 1.0 / 300).nx == 150


@pytest.mark.parametrize("domain,nx,ny", [((0, 0, 0, 1), 1, 1), ((0, 1, 1, 0), 1, 1), (UNIT, 0, 2)])
def test_degenerate_rectangles_rejected(domain, nx, ny):
    with pytest.raises(InvalidDomainError):
        build_structured_mesh(domain, nx, ny)


@given(st.integers(1, 9), st.integers(1, 9),
       st.floats(-3, 3), st.floats(0.1, 5), st.floats(-3, 3), st.floats(0.1, 5))
@settings(max_examples=40, deadline=None)
def test_mesh_invariants(nx, ny, x0, wx, y0, wy):
    m = build_structured_mesh((x0, x0 + wx, y0, y0 + wy), nx, ny)
    assert m.n_vertices == (nx + 1) * (ny + 1)
    assert m.n_triangles == 2 * nx * ny
    assert np.all(m.triangle_areas > 0)
    assert m.triangle_areas.sum() == pytest.approx(wx * wy, rel=1e-12)
    assert len(m.boundary_nodes) == 2 * (nx + ny)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_collapsed_rule_exactness(n):
    pts, w = triangle_rule(n)
    assert w.sum() == pytest.approx(0.5, rel=1e-14)
    deg = 2 * n - 2
    for a in range(deg + 1):
        for b in range(deg + 1 - a):
            exact = oracle.Poly({(0, a, b): 1.0}).integrate(0.5)
            approx = np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b)
            assert approx == pytest.approx(exact, rel=1e-12, abs=1e-15)


def test_mass_matrix_examples():
    m = build_structured_mesh(UNIT, 1, 1)
    M = assemble_mass(m).toarray()
    assert M.shape == (4, 4)
    assert np.allclose(M, M.T)
    assert np.ones(4) @ M @ np.ones(4) == pytest.approx(1.0, abs=1e-14)
    nz = M[M != 0]
    assert np.all(nz > 0)


def test_stiffness_examples(unit16):
    K = assemble_stiffness(unit16)
    x, y = unit16.vertices.T
    assert np.abs(K @ np.ones(unit16.n_vertices)).max() < 1e-12
    assert x @ K @ x == pytest.approx(1.0, abs=1e-12)
    assert (x + y) @ K @ (x + y) == pytest.approx(2.0, abs=1e-12)


def test_no_stored_zeros_and_structural_symmetry(unit16):
    for A in (unit16.mass, unit16.stiffness):
        assert np.all(A.data != 0)
        P = (A != 0).astype(int)
        assert (P - P.T).nnz == 0


def test_weighted_mass_examples(unit16):
    n = unit16.n_vertices
    W1 = assemble_weighted_mass(unit16, np.ones(n))
    assert abs(W1 - unit16.mass).max() < 1e-14
    assert assemble_weighted_mass(unit16, np.zeros(n)).nnz == 0
    x = unit16.vertices[:, 0]
    one = np.ones(n)
    assert one @ assemble_weighted_mass(unit16, x) @ one == pytest.approx(0.5, abs=1e-12)


def test_weighted_mass_dimension_error(unit16):
    with pytest.raises(DimensionError):
        assemble_weighted_mass(unit16, np.ones(3))


def test_integrate_and_norms(unit64):
    x = unit64.vertices[:, 0]
    assert integrate(unit64, np.ones(unit64.n_vertices)) == pytest.approx(1.0, abs=1e-14)
    assert integrate(unit64, x) == pytest.approx(0.5, abs=1e-12)
    assert integrate(unit64, x**2) == pytest.approx(1 / 3, abs=1e-4)
    assert norms(unit64, np.zeros(unit64.n_vertices)) == (0.0, 0.0, 0.0)
    assert norms(unit64, np.ones(unit64.n_vertices)) == pytest.approx((1.0, 1.0, 1.0))
    l2, h1, linf = norms(unit64, x)
    assert l2 == pytest.approx(1 / np.sqrt(3), abs=1e-3)
    assert linf == 1.0


def test_spd_mass_and_stiffness_kernel(unit16):
    rng = np.random.default_rng(0)
    M, K = unit16.mass, unit16.stiffness
    for _ in range(100):
        v = rng.standard_normal(unit16.n_vertices)
        assert v @ M @ v > 0
        v -= (np.ones_like(v) @ M @ v) / unit16.area
        assert v @ K @ v > 0


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_weighted_mass_linearity(a, b, seed):
    m = build_structured_mesh(UNIT, 4, 3)
    rng = np.random.default_rng(seed)
    w1, w2 = rng.standard_normal((2, m.n_vertices))
    lhs = assemble_weighted_mass(m, a * w1 + b * w2)
    rhs = a * assemble_weighted_mass(m, w1) + b * assemble_weighted_mass(m, w2)
    assert abs(lhs - rhs).max() <= 1e-13 * max(1.0, abs(a) + abs(b)) * 10


def test_brute_force_oracle_entries(unit2):
    fe = oracle.DenseFE(unit2.vertices, unit2.triangles)
    rng = np.random.default_rng(3)
    w = rng.standard_normal(unit2.n_vertices)
    assert np.abs(unit2.mass.toarray() - fe.M).max() < 1e-13
    assert np.abs(unit2.stiffness.toarray() - fe.K).max() < 1e-13
    Wo = fe.weighted_mass(lambda k: fe.local(w, fe.tris[k]))
    assert np.abs(assemble_weighted_mass(unit2, w).toarray() - Wo).max() < 1e-13
    # degree-4 weight (product of two squared P1 fields) at quadrature points
    u, v = rng.standard_normal((2, unit2.n_vertices))
    q = unit2.rule()
    qw = q.at_points(u) ** 2 * q.at_points(v) ** 2
    Wo = fe.weighted_mass(lambda k: (fe.local(u, fe.tris[k]) * fe.local(u, fe.tris[k])
                                     * fe.local(v, fe.tris[k]) * fe.local(v, fe.tris[k])))
    assert np.abs(assemble_weighted_mass_qp(unit2, qw).toarray() - Wo).max() < 1e-13
    lo = fe.load(lambda k: fe.local(u, fe.tris[k]).compose(oracle.f_POLY))
    f = q.at_points(u)
    assert np.abs(assemble_load_qp(unit2, f**3 - 1.5 * f**2 + 0.5 * f) - lo).max() < 1e-13
    Ko = np.zeros((unit2.n_vertices,) * 2)
    for k, (t, area, g) in enumerate(zip(fe.tris, fe.areas, fe.grads)):
        avg = fe.local(w, t).integrate(area)
        for a in range(3):
            for b in range(3):
                Ko[t[a], t[b]] += avg * g[a] @ g[b]
    assert np.abs(assemble_weighted_stiffness_qp(unit2, q.at_points(w)).toarray() - Ko).max() < 1e-13


def test_refinement_order_of_integration():
    g = lambda x, y: np.exp(x) * np.sin(2 * y)  # noqa: E731
    exact = (np.e - 1) * (1 - np.cos(2)) / 2
    errs = []
    for n in (8, 16, 32):
        m = build_structured_mesh(UNIT, n, n)
        errs.append(abs(integrate(m, m.interpolate(g)) - exact))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9)


def test_l2_projection_reproduces_linear_and_constant(unit16):
    p = l2_project(unit16, lambda x, y: 2 * x - y + 0.5)
    x, y = unit16.vertices.T
    assert np.abs(p - (2 * x - y + 0.5)).max() < 1e-10
    assert np.abs(l2_project(unit16, lambda x, y: 0.3 + 0 * x) - 0.3).max() < 1e-11


def test_dirichlet_rows(unit2):
    A = unit2.stiffness + unit2.mass
    b = np.ones(unit2.n_vertices)
    A2, b2 = apply_dirichlet_rows(A, b, unit2.boundary_nodes, 2.0)
    x = np.linalg.solve(A2.toarray(), b2)
    assert np.allclose(x[unit2.boundary_nodes], 2.0)
