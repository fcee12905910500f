from pathlib import Path

import numpy as np
import pytest

from ternary_ch import build_structured_mesh
from ternary_ch.diagnostics import DiagnosticsRecord
from ternary_ch.output import DiagnosticsWriter, OutputError, csv_header, read_csv, read_vtk, write_fields

GOLDEN = Path(__file__).parent / "data" / "two_triangles.vtk"


@pytest.fixture
def tiny():
    return build_structured_mesh((0, 1, 0, 1), 1, 1)


def test_vtk_golden_bytes(tiny, tmp_path):
    phases = np.array([np.ones(4), np.zeros(4), np.zeros(4)])
    out = write_fields(tiny, phases, np.zeros_like(phases), tmp_path / "f.vtk", title="golden")
    assert out.read_bytes() == GOLDEN.read_bytes()


def test_composite_of_pure_phase(tiny, tmp_path):
    phases = np.array([np.ones(4), np.zeros(4), np.zeros(4)])
    data = read_vtk(write_fields(tiny, phases, path=tmp_path / "c.vtk"))
    assert np.all(data["point_data"]["composite"] == 1.0)


def test_four_phases_no_composite(tiny, tmp_path):
    data = read_vtk(write_fields(tiny, np.full((4, 4), 0.25), path=tmp_path / "n4.vtk"))
    assert "composite" not in data["point_data"]
    assert all(f"phi_{i}" in data["point_data"] for i in range(1, 5))


def test_vtk_round_trip(tmp_path):
    mesh = build_structured_mesh((-1, 2, 0, 1), 7, 3)
    rng = np.random.default_rng(0)
    phases, mus = rng.standard_normal((2, 3, mesh.n_vertices))
    vel = rng.standard_normal((mesh.n_vertices, 2))
    data = read_vtk(write_fields(mesh, phases, mus, tmp_path / "r.vtk", velocity=vel))
    assert data["points"].shape == (mesh.n_vertices, 3)
    assert np.array_equal(data["cells"], mesh.triangles)
    assert np.all(data["cell_types"] == 5)
    assert np.allclose(data["point_data"]["phi_2"], phases[1], rtol=1e-9)
    assert np.allclose(data["point_data"]["velocity"][:, :2], vel, rtol=1e-9)


def test_vtk_unwritable_path(tiny, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OutputError, match="file"):
        write_fields(tiny, np.zeros((3, 4)), path=blocker / "sub" / "f.vtk")


def test_vtk_size_mismatch(tiny, tmp_path):
    with pytest.raises(ValueError):
        write_fields(tiny, np.zeros((3, 5)), path=tmp_path / "bad.vtk")


def rec(t, n=3):
    return DiagnosticsRecord(t, 1.0, 1.0, 0.0, (0.1,) * n, 1e-4, 2e-4)


def test_csv_header_is_fixed():
    assert csv_header(3) == ["t", "E", "E_trunc", "E_kin", "vol_1", "vol_2", "vol_3",
                             "constraint_L2", "constraint_Linf", "TND", "energy_law_residual"]


def test_csv_rows_and_format(tmp_path):
    path = tmp_path / "d.csv"
    with DiagnosticsWriter(path, 3) as w:
        for k in range(4):
            w.write(rec(k * 0.1))
    text = path.read_text().splitlines()
    assert len(text) == 5
    assert text[2].split(",")[0] == "1.00000000e-01"
    header, data = read_csv(path)
    assert data.shape == (4, len(header))


def test_csv_rows_flushed_before_close(tmp_path):
    path = tmp_path / "p.csv"
    w = DiagnosticsWriter(path, 3)
    w.write(rec(0.0))
    assert len(path.read_text().splitlines()) == 2
    w.close()


def test_csv_volume_count_checked(tmp_path):
    with DiagnosticsWriter(tmp_path / "v.csv", 3) as w, pytest.raises(ValueError):
        w.write(rec(0.0, n=4))
