"""Built-in benchmark catalog: domains, default parameters and initial conditions."""
from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mesh import Mesh


class UnknownBenchmarkError(KeyError):
    def __str__(self):
        return self.args[0]


def lens_ics(eps: float):
    def phi1(x, y):
        return 0.5 * (1.0 + np.tanh((2.0 / eps) * np.minimum(np.hypot(x, y) - 0.1, y)))

    def phi2(x, y):
        return 0.5 * (1.0 - np.tanh((2.0 / eps) * np.maximum(0.1 - np.hypot(x, y), y)))

    return [phi1, phi2, lambda x, y: 1.0 - phi1(x, y) - phi2(x, y)]


def two_bubble_ics(eps: float, offset: float = 0.0):
    """Two discs of radius 0.035 centred at (offset +- 0.035, 0)."""
    def disc(cx):
        return lambda x, y: 0.5 - 0.5 * np.tanh((2.0 / eps) * (np.hypot(x - cx, y) - 0.035))

    phi1, phi2 = disc(offset + 0.035), disc(offset - 0.035)
    return [phi1, phi2, lambda x, y: 1.0 - phi1(x, y) - phi2(x, y)]


def convergence_ics():
    def phi1(x, y):
        return 0.3 * np.sin(np.pi * x) * np.cos(np.pi * (y - 0.5))

    def phi2(x, y):
        return 0.15 + 0.15 * np.sin(2.0 * np.pi * x) * np.cos(np.pi * (2.0 * y - 0.5))

    return [phi1, phi2, lambda x, y: 1.0 - phi1(x, y) - phi2(x, y)]


def spinodal_ics(mesh: Mesh, n_phases: int, base: float, seed: int):
    """Nodal ``base + 0.01 * U[0, 1)`` for all but the last phase, drawn phase by phase
    in vertex order; the last phase closes the partition."""
    rng = np.random.default_rng(seed)
    phases = [base + 0.01 * rng.random(mesh.n_vertices) for _ in range(n_phases - 1)]
    phases.append(1.0 - np.sum(phases, axis=0))
    return phases


@dataclass(frozen=True)
class Benchmark:
    name: str
    description: str
    domain: tuple[float, float, float, float]
    defaults: dict = field(default_factory=dict)
    ics: Callable | None = None  # (mesh, config) -> list of callables or arrays
    flow: bool = False


_COMMON = dict(dt=1e-4, epsilon=1e-2, lam=1e-4, Lambda=7.0, mobility=1e-3, h=1.0 / 100,
               paper_h=1.0 / 300, sigma=(1.0, 1.0, 1.0), scheme="NTD1", boundary="neumann")

CATALOG: dict[str, Benchmark] = {}


def _register(b: Benchmark):
    CATALOG[b.name] = b


_register(Benchmark(
    "lens", "liquid lens between two stratified phases",
    (-0.25, 0.25, -0.1, 0.15),
    {**_COMMON, "t_end": 2.5},
    lambda mesh, cfg: lens_ics(cfg.epsilon),
))
_register(Benchmark(
    "two_bubbles", "two circular droplets suspended in a third phase",
    (-0.125, 0.125, -0.125, 0.125),
    {**_COMMON, "t_end": 0.5},
    lambda mesh, cfg: two_bubble_ics(cfg.epsilon, cfg.bubble_offset),
))
_register(Benchmark(
    "spinodal2", "three-phase spinodal decomposition from a perturbed mixture",
    (-0.125, 0.125, -0.125, 0.125),
    {**_COMMON, "t_end": 2.5},
    lambda mesh, cfg: spinodal_ics(mesh, 3, 0.33, cfg.seed),
))
_register(Benchmark(
    "spinodal4", "four-phase spinodal decomposition (N-component scheme)",
    (-0.125, 0.125, -0.125, 0.125),
    {**_COMMON, "t_end": 2.5, "sigma": (1.0, 1.0, 1.0, 4.0), "scheme": "NCOMP"},
    lambda mesh, cfg: spinodal_ics(mesh, 4, 0.25, cfg.seed),
))
_register(Benchmark(
    "bubbles_flow", "two droplets in a rotating Navier-Stokes flow",
    (-0.125, 0.125, -0.125, 0.125),
    {**_COMMON, "t_end": 0.5, "nu": (1.0, 1.0, 1.0), "boundary": "rotation"},
    lambda mesh, cfg: two_bubble_ics(cfg.epsilon, cfg.bubble_offset),
    flow=True,
))
_register(Benchmark(
    "convergence_ic", "smooth trigonometric data on the unit square for time-convergence studies",
    (0.0, 1.0, 0.0, 1.0),
    {**_COMMON, "t_end": 1e-4, "mobility": 1e-4, "epsilon": 0.02, "h": 1.0 / 64,
     "paper_h": 1.0 / 100, "dt": 1e-5},
    lambda mesh, cfg: convergence_ics(),
))


def get_benchmark(name: str) -> Benchmark:
    try:
        return CATALOG[name]
    except KeyError:
        close = difflib.get_close_matches(name, list(CATALOG), n=1)
        hint = f"; did you mean {close[0]!r}?" if close else ""
        raise UnknownBenchmarkError(f"unknown benchmark {name!r}{hint}") from None


def list_benchmarks() -> list[Benchmark]:
    return list(CATALOG.values())
