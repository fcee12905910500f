import numpy as np
import pytest

from conftest import pure_state
from ternary_ch import ModelParams, build_structured_mesh, init_state
from ternary_ch import diagnostics as diag
from ternary_ch.benchmarks import two_bubble_ics
from ternary_ch.nsch import (
    FlowState,
    NSCHConfig,
    init_flow,
    mini_space,
    nsch_flow_step,
    nsch_step,
    rotation_profile,
    run_nsch,
    total_energy,
    viscosity,
)
from ternary_ch.schemes import SchemeConfig, ntd1_step

BOX = (-0.125, 0.125, -0.125, 0.125)
PARAMS = ModelParams(epsilon=1e-2, lam=1e-4, Lambda=7.0, mobility=1e-3, sigma=(1, 1, 1), nu=(1, 1, 1))


@pytest.fixture(scope="module")
def box():
    return build_structured_mesh(BOX, 20, 20)


@pytest.fixture(scope="module")
def bubbles(box):
    return init_state(box, two_bubble_ics(1e-2), PARAMS)


def test_rotation_profile_is_solenoidal_and_tangent():
    x, y = np.random.default_rng(0).uniform(-0.125, 0.125, (2, 200))
    h = 1e-6
    div = ((rotation_profile(x + h, y)[0] - rotation_profile(x - h, y)[0])
           + (rotation_profile(x, y + h)[1] - rotation_profile(x, y - h)[1])) / (2 * h)
    assert np.abs(div).max() < 1e-4
    s = np.linspace(-0.125, 0.125, 11)
    edge = np.full_like(s, 0.125)
    assert np.abs(rotation_profile(edge, s)[0]).max() < 1e-12
    assert np.abs(rotation_profile(-edge, s)[0]).max() < 1e-12
    assert np.abs(rotation_profile(s, edge)[1]).max() < 1e-12


def test_convection_skew_symmetry(box):
    sp = mini_space(box)
    rng = np.random.default_rng(1)
    interior = np.ones(sp.size, bool)
    interior[box.boundary_nodes] = False
    for _ in range(5):
        w = rng.standard_normal((2, sp.size))
        v = rng.standard_normal(sp.size) * interior
        C = sp.convection(*w)
        assert abs(v @ C @ v) < 1e-12 * max(1.0, np.abs(C).max() * v @ v)


def test_kinetic_energy(box):
    zero = init_flow(box)
    assert zero.kinetic_energy() == 0.0
    assert init_flow(box, rotation_profile).kinetic_energy() > 0


def test_flow_state_shape_validation(box):
    with pytest.raises(ValueError):
        FlowState(box, np.zeros((2, box.n_vertices)), np.zeros(box.n_vertices))


def test_viscosity_clipped():
    p = ModelParams(1e-2, 1e-4, 7, 1e-3, (1, 1, 1), nu=(1.0, 2.0, 4.0))
    q = [np.array([1.0, 0.0, -1.0]), np.zeros(3), np.zeros(3)]
    assert viscosity(p, q) == pytest.approx([1.0, 0.1, 0.1])


def test_rest_state_stays_at_rest(box):
    st = pure_state(box, 2)
    cfg = NSCHConfig(SchemeConfig("TD1", 1e-4))
    new, flow = nsch_step(st, init_flow(box), PARAMS, cfg)
    assert np.abs(flow.velocity).max() < 1e-12
    assert np.abs(flow.pressure).max() < 1e-10
    assert np.abs(new.phases - st.phases).max() < 1e-10


def test_pure_phase_fixed_under_rotation(box):
    st = pure_state(box, 0)
    cfg = NSCHConfig(SchemeConfig("NTD1", 1e-4), boundary=rotation_profile)
    # a flow step makes the velocity discretely solenoidal
    flow = nsch_flow_step(init_flow(box, rotation_profile), st, st, PARAMS, cfg)
    assert flow.kinetic_energy() > 0.1
    new, _ = nsch_step(st, flow, PARAMS, cfg)
    assert np.abs(new.phases - st.phases).max() < 1e-10


def test_incompressibility_and_conservation_with_rotation(box, bubbles):
    cfg = NSCHConfig(SchemeConfig("TD1", 1e-4), boundary=rotation_profile)
    st, flow = bubbles, init_flow(box, rotation_profile)
    for _ in range(3):
        new, flow = nsch_step(st, flow, PARAMS, cfg)
        assert flow.divergence_residual() < 1e-10
        assert np.abs(diag.volumes(new) - diag.volumes(st)).max() <= 1e-10 * box.area
        st = new
    bx = flow.vertex_velocity[box.boundary_nodes]
    xy = box.vertices[box.boundary_nodes]
    assert np.allclose(bx, np.column_stack(rotation_profile(xy[:, 0], xy[:, 1])), atol=1e-10)


def test_zero_velocity_reduces_to_ntd1(box, bubbles):
    cfg = NSCHConfig(SchemeConfig("NTD1", 1e-4), transport_correction=False, frozen_flow=True)
    a, flow = bubbles, init_flow(box)
    b = bubbles
    for _ in range(3):
        a, flow = nsch_step(a, flow, PARAMS, cfg)
        b = ntd1_step(b, PARAMS, SchemeConfig("NTD1", 1e-4))
    assert np.abs(a.phases - b.phases).max() < 1e-10
    assert np.abs(a.potentials - b.potentials).max() < 1e-8 * np.abs(b.potentials).max()


def test_total_energy_decreases_with_walls(box, bubbles):
    cfg = NSCHConfig(SchemeConfig("TD1", 1e-4))
    st, flow = bubbles, init_flow(box, rotation_profile, zero_boundary=True)
    E = [total_energy(st, flow, PARAMS, True)]
    for _ in range(10):
        st, flow = nsch_step(st, flow, PARAMS, cfg)
        E.append(total_energy(st, flow, PARAMS, True))
    assert np.all(np.diff(E) <= 1e-12 * abs(E[0]))


def test_flow_step_rejects_mismatched_meshes(box, bubbles):
    other = build_structured_mesh(BOX, 4, 4)
    with pytest.raises(ValueError):
        nsch_step(bubbles, init_flow(other), PARAMS, NSCHConfig())


def test_config_rejects_coupled_scheme():
    with pytest.raises(ValueError):
        NSCHConfig(SchemeConfig("NTC2"))


def test_run_nsch_callbacks(box, bubbles):
    seen = []
    cfg = NSCHConfig(SchemeConfig("NTD1", 1e-4), boundary=rotation_profile)
    st, flow = run_nsch(bubbles, init_flow(box, rotation_profile), PARAMS, cfg, 2.5e-4,
                        [lambda k, prev, s, f: seen.append(k)])
    assert seen == [0, 1, 2, 3] and st.t == 2.5e-4
    assert isinstance(flow, FlowState)


def test_flow_step_direct(box, bubbles):
    cfg = NSCHConfig(SchemeConfig("TD1", 1e-4))
    flow = nsch_flow_step(init_flow(box), bubbles, bubbles, PARAMS, cfg)
    assert flow.divergence_residual() < 1e-10
    assert abs(np.sum(box.mass @ flow.pressure)) < 1e-10
