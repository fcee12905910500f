"""Plain-text run configuration.

One ``key = value`` per line; ``#`` starts a comment; ``[section]`` headers
may group keys but do not namespace them.  Lists are separated by spaces or
commas.  Every key not given falls back to the benchmark defaults.
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from pathlib import Path

from . import chemistry as chem
from .benchmarks import UnknownBenchmarkError, get_benchmark
from .linalg import SolverSettings
from .mesh import Mesh, build_structured_mesh
from .schemes import SCHEMES, TAU_MODES, SchemeConfig

OUTPUT_ENV = "TERNARY_CH_OUTPUT_DIR"
BOUNDARY_MODES = ("neumann", "dirichlet_phi3", "rotation", "noslip", "rotation_dirichlet_phi3")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    benchmark: str
    domain: tuple[float, float, float, float]
    nx: int
    ny: int
    dt: float
    t_end: float
    epsilon: float
    lam: float
    Lambda: float
    mobility: tuple[float, ...]
    sigma: tuple[float, ...]
    scheme: str = "NTD1"
    tau_mode: str | None = None
    tau: tuple[float, ...] | None = None
    truncated: bool = False
    nu: tuple[float, ...] = (1.0, 1.0, 1.0)
    seed: int = 0
    boundary: str = "neumann"
    output_dir: str = "output"
    stride: int = 1
    vtk_stride: int = 0
    init: str = "l2"
    solver: str = "direct"
    solver_tol: float = 1e-10
    transport_correction: bool = True
    bubble_offset: float = 0.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.tau_mode is not None and self.tau_mode not in TAU_MODES:
            raise ConfigError(f"unknown tau mode {self.tau_mode!r}")
        if self.boundary not in BOUNDARY_MODES:
            raise ConfigError(f"unknown boundary mode {self.boundary!r}")
        for name in ("dt", "t_end", "epsilon", "lam"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.stride < 1:
            raise ConfigError("stride must be at least 1")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("nx and ny must be positive")

    @property
    def n_phases(self) -> int:
        return len(self.sigma)

    @property
    def flow(self) -> bool:
        return get_benchmark(self.benchmark).flow

    def params(self) -> chem.ModelParams:
        try:
            return chem.ModelParams(self.epsilon, self.lam, self.Lambda, self.mobility,
                                    chem.SpreadingCoefficients(self.sigma), self.tau, self.nu)
        except (chem.ParameterError, chem.ConsistencyError) as exc:
            raise ConfigError(str(exc)) from exc

    def mesh(self) -> Mesh:
        return build_structured_mesh(self.domain, self.nx, self.ny)

    def scheme_config(self, dt: float | None = None) -> SchemeConfig:
        dirichlet = ()
        if self.boundary in ("dirichlet_phi3", "rotation_dirichlet_phi3"):
            if self.n_phases != 3:
                raise ConfigError("the phi3 = 1 boundary condition needs three phases")
            dirichlet = ((2, 1.0),)
        return SchemeConfig(self.scheme, dt or self.dt, self.tau_mode, self.truncated,
                            SolverSettings(self.solver, self.solver_tol), dirichlet)

    def resolved_output_dir(self, override: str | None = None) -> Path:
        return Path(override or os.environ.get(OUTPUT_ENV) or self.output_dir)


def _floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _scheme(text: str) -> str:
    s = text.strip().upper()
    if s not in SCHEMES:
        raise ValueError(f"unknown scheme {text!r}; choose from {', '.join(SCHEMES)}")
    return s


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError(f"expected a positive integer, got {v}")
    return v


PARSERS = {
    "benchmark": str.strip,
    "domain": _floats,
    "nx": _positive_int,
    "ny": _positive_int,
    "h": float,
    "paper_resolution": _bool,
    "dt": float,
    "t_end": float,
    "epsilon": float,
    "lambda_penalty": float,
    "Lambda": float,
    "mobility": _floats,
    "sigma": _floats,
    "sigma_pairwise": _floats,
    "scheme": _scheme,
    "tau_mode": str.strip,
    "tau": _floats,
    "truncated": _bool,
    "nu": _floats,
    "seed": int,
    "boundary": str.strip,
    "output_dir": str.strip,
    "stride": _positive_int,
    "vtk_stride": int,
    "init": str.strip,
    "solver": str.strip,
    "solver_tol": float,
    "transport_correction": _bool,
    "bubble_offset": float,
}


def read_pairs(text: str, path: str | None = None) -> dict[str, tuple[object, int]]:
    """Parse ``key = value`` lines into ``{key: (value, line_number)}``."""
    out: dict[str, tuple[object, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        try:
            out[key] = (PARSERS[key](value), lineno)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, path) from None
    return out


def build_config(pairs: dict[str, tuple[object, int]], benchmark: str | None = None,
                 path: str | None = None, **overrides) -> RunConfig:
    values = {k: v for k, (v, _) in pairs.items()}
    lines = {k: ln for k, (_, ln) in pairs.items()}
    name = benchmark or values.get("benchmark")
    if not name:
        raise ConfigError("missing required key 'benchmark'", None, path)
    try:
        bench = get_benchmark(name)
    except UnknownBenchmarkError as exc:
        raise ConfigError(str(exc), None if benchmark else lines.get("benchmark"), path) from None
    d = dict(bench.defaults)

    domain = values.get("domain", bench.domain)
    if len(domain) != 4:
        raise ConfigError("domain needs four numbers x0 x1 y0 y1", lines.get("domain"), path)
    h = values.get("h", d["paper_h"] if values.get("paper_resolution") else d["h"])
    if h <= 0:
        raise ConfigError("h must be positive", lines.get("h"), path)
    x0, x1, y0, y1 = domain
    if not (x1 > x0 and y1 > y0):
        raise ConfigError(f"degenerate domain {domain}", lines.get("domain"), path)
    nx = values.get("nx", max(1, math.ceil((x1 - x0) / h - 1e-9)))
    ny = values.get("ny", max(1, math.ceil((y1 - y0) / h - 1e-9)))

    if "sigma" in values and "sigma_pairwise" in values:
        raise ConfigError("give either sigma or sigma_pairwise, not both", lines["sigma_pairwise"], path)
    sigma = d["sigma"]
    if "sigma" in values:
        sigma = values["sigma"]
    elif "sigma_pairwise" in values:
        if len(values["sigma_pairwise"]) != 3:
            raise ConfigError("sigma_pairwise needs three tensions", lines["sigma_pairwise"], path)
        try:
            sigma = chem.sigma_from_pairwise(*values["sigma_pairwise"]).values
        except (chem.ParameterError, chem.ConsistencyError) as exc:
            raise ConfigError(str(exc), lines["sigma_pairwise"], path) from None
    n = len(sigma)

    def per_phase(key, default):
        v = values.get(key, default)
        if v is None:
            return None
        v = tuple(v) if isinstance(v, (tuple, list)) else (float(v),)
        if len(v) == 1:
            v = v * n
        if len(v) != n:
            raise ConfigError(f"{key} needs 1 or {n} values, got {len(v)}", lines.get(key), path)
        return v

    kwargs = dict(
        benchmark=name,
        domain=tuple(domain),
        nx=nx,
        ny=ny,
        dt=values.get("dt", d["dt"]),
        t_end=values.get("t_end", d["t_end"]),
        epsilon=values.get("epsilon", d["epsilon"]),
        lam=values.get("lambda_penalty", d["lam"]),
        Lambda=values.get("Lambda", d["Lambda"]),
        mobility=per_phase("mobility", d["mobility"]),
        sigma=tuple(sigma),
        scheme=values.get("scheme", d["scheme"]),
        tau_mode=values.get("tau_mode"),
        tau=per_phase("tau", None),
        truncated=values.get("truncated", False),
        nu=per_phase("nu", d.get("nu", (1.0,))),
        seed=values.get("seed", 0),
        boundary=values.get("boundary", d["boundary"]),
        output_dir=values.get("output_dir", "output"),
        stride=values.get("stride", 1),
        vtk_stride=values.get("vtk_stride", 0),
        init=values.get("init", "l2"),
        solver=values.get("solver", "direct"),
        solver_tol=values.get("solver_tol", 1e-10),
        transport_correction=values.get("transport_correction", True),
        bubble_offset=values.get("bubble_offset", 0.0),
    )
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    if kwargs["init"] not in ("l2", "nodal"):
        raise ConfigError(f"init must be 'l2' or 'nodal', got {kwargs['init']!r}", lines.get("init"), path)
    if kwargs["solver"] not in ("direct", "gmres", "bicgstab"):
        raise ConfigError(f"unknown solver {kwargs['solver']!r}", lines.get("solver"), path)
    for key, field_name in (("dt", "dt"), ("t_end", "t_end"), ("epsilon", "epsilon"),
                            ("lambda_penalty", "lam")):
        if not kwargs[field_name] > 0:
            raise ConfigError(f"{key} must be positive, got {kwargs[field_name]}", lines.get(key), path)
    if kwargs["Lambda"] < 0:
        raise ConfigError("Lambda must be nonnegative", lines.get("Lambda"), path)
    if min(kwargs["mobility"]) <= 0:
        raise ConfigError("mobilities must be positive", lines.get("mobility"), path)
    try:
        cfg = RunConfig(**kwargs)
        params = cfg.params()
    except ConfigError as exc:
        raise ConfigError(str(exc), None, path) from None
    if cfg.scheme in ("TD1", "NTD1", "NTC2") and params.n_phases != 3:
        raise ConfigError(f"{cfg.scheme} is a three-phase scheme; use NCOMP for {n} phases",
                          lines.get("scheme"), path)
    return cfg


def parse_config(path, benchmark: str | None = None, **overrides) -> RunConfig:
    """Read a configuration file; ``benchmark`` and ``overrides`` take precedence."""
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", None, path) from None
    return build_config(read_pairs(text, path), benchmark, path, **overrides)


def replace(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, **changes)
