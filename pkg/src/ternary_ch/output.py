"""CSV diagnostics and legacy-ASCII VTK field files."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsRecord
from .mesh import Mesh


class OutputError(OSError):
    pass


def csv_header(n_phases: int) -> list[str]:
    vols = [f"vol_{i + 1}" for i in range(n_phases)]
    return ["t", "E", "E_trunc", "E_kin", *vols, "constraint_L2", "constraint_Linf",
            "TND", "energy_law_residual"]


def _num(v: float) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else f"{v:.8e}"


def csv_row(rec: DiagnosticsRecord) -> list[str]:
    vals = [rec.t, rec.E, rec.E_trunc, rec.E_kin, *rec.volumes, rec.constraint_L2,
            rec.constraint_Linf, rec.TND, rec.energy_law_residual]
    return [_num(v) for v in vals]


class DiagnosticsWriter:
    """Append-only CSV writer; every row is flushed so partial runs survive."""

    def __init__(self, path, n_phases: int):
        self.path = Path(path)
        self.n_phases = n_phases
        self.rows = 0
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", newline="")
        except OSError as exc:
            raise OutputError(f"cannot open {self.path}: {exc.strerror}") from exc
        self._fh.write(",".join(csv_header(n_phases)) + "\n")
        self._fh.flush()

    def write(self, rec: DiagnosticsRecord) -> None:
        if len(rec.volumes) != self.n_phases:
            raise ValueError(f"record has {len(rec.volumes)} volumes, header has {self.n_phases}")
        self._fh.write(",".join(csv_row(rec)) + "\n")
        self._fh.flush()
        self.rows += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_csv(path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
    return header, data


# --------------------------------------------------------------------------
# VTK


def _fmt(values) -> str:
    return "\n".join(f"{float(v):.9e}" for v in np.ravel(values))


def write_fields(mesh: Mesh, phases, potentials=None, path=None, velocity=None,
                 title: str = "ternary_ch fields") -> Path:
    """Write nodal fields as a legacy-ASCII VTK unstructured grid.

    Point data: ``phi_i``, ``mu_i``, the composite ``phi_1 + phi_3 / 2`` when
    there are three phases, and ``velocity`` (nodal, shape (n, 2)) if given.
    """
    phases = np.atleast_2d(np.asarray(phases, dtype=float))
    n = mesh.n_vertices
    if phases.shape[1] != n:
        raise ValueError(f"fields have {phases.shape[1]} nodes, mesh has {n}")
    parts = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
        "\n".join(f"{x:.9e} {y:.9e} {0.0:.9e}" for x, y in mesh.vertices),
        f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}",
        "\n".join(f"3 {a} {b} {c}" for a, b, c in mesh.triangles),
        f"CELL_TYPES {mesh.n_triangles}",
        "\n".join("5" for _ in range(mesh.n_triangles)),
        f"POINT_DATA {n}",
    ]

    def scalar(name, values):
        parts.extend([f"SCALARS {name} double 1", "LOOKUP_TABLE default", _fmt(values)])

    for i, phi in enumerate(phases):
        scalar(f"phi_{i + 1}", phi)
    if potentials is not None:
        for i, mu in enumerate(np.atleast_2d(potentials)):
            scalar(f"mu_{i + 1}", mu)
    if len(phases) == 3:
        scalar("composite", 0.5 * phases[2] + phases[0])
    if velocity is not None:
        v = np.asarray(velocity, dtype=float)
        parts.append("VECTORS velocity double")
        parts.append("\n".join(f"{a:.9e} {b:.9e} {0.0:.9e}" for a, b in v))
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_vtk(path) -> dict:
    """Minimal reader for files produced by :func:`write_fields`."""
    tokens = Path(path).read_text().split("\n")
    out = {"title": tokens[1], "point_data": {}}
    it = iter(tokens[2:])
    for line in it:
        words = line.split()
        if not words:
            continue
        key = words[0]
        if key == "POINTS":
            n = int(words[1])
            out["points"] = np.array([[float(v) for v in next(it).split()] for _ in range(n)])
        elif key == "CELLS":
            m = int(words[1])
            out["cells"] = np.array([[int(v) for v in next(it).split()[1:]] for _ in range(m)])
        elif key == "CELL_TYPES":
            out["cell_types"] = np.array([int(next(it)) for _ in range(int(words[1]))])
        elif key == "SCALARS":
            next(it)  # lookup table
            n = len(out["points"])
            out["point_data"][words[1]] = np.array([float(next(it)) for _ in range(n)])
        elif key == "VECTORS":
            n = len(out["points"])
            out["point_data"][words[1]] = np.array([[float(v) for v in next(it).split()] for _ in range(n)])
    return out
