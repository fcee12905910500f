"""Benchmark drivers shared by the CLI and the scripts."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import diagnostics as diag
from .benchmarks import get_benchmark
from .config import ConfigError, RunConfig
from .nsch import NSCHConfig, init_flow, rotation_profile, run_nsch
from .output import DiagnosticsWriter, write_fields
from .schemes import PhaseState, init_state, run

FLOW_BOUNDARIES = ("rotation", "noslip", "rotation_dirichlet_phi3")


@dataclass
class RunResult:
    state: PhaseState
    flow: object
    csv_path: Path
    rows: int
    vtk_files: list


def initial_state(cfg: RunConfig, mesh=None) -> PhaseState:
    mesh = mesh or cfg.mesh()
    bench = get_benchmark(cfg.benchmark)
    ics = bench.ics(mesh, cfg)
    if len(ics) != cfg.n_phases:
        raise ConfigError(
            f"benchmark {cfg.benchmark!r} defines {len(ics)} phases but sigma has {cfg.n_phases}")
    return init_state(mesh, ics, cfg.params(), cfg.init)


def is_flow_run(cfg: RunConfig) -> bool:
    return cfg.flow or cfg.boundary in FLOW_BOUNDARIES


def run_benchmark(cfg: RunConfig, out_dir, log=None) -> RunResult:
    """Run ``cfg`` writing ``diagnostics.csv`` and VTK snapshots into ``out_dir``."""
    out_dir = Path(out_dir)
    mesh = cfg.mesh()
    params = cfg.params()
    scfg = cfg.scheme_config()
    state0 = initial_state(cfg, mesh)
    csv_path = out_dir / "diagnostics.csv"
    vtk_files: list[Path] = []
    flow_run = is_flow_run(cfg)
    if flow_run and cfg.scheme == "NTC2":
        raise ConfigError("flow runs use a decoupled phase scheme (TD1, NTD1 or NCOMP)")

    def snapshot(k, state, flow=None):
        vel = flow.vertex_velocity if flow is not None else None
        path = out_dir / f"fields_{k:06d}.vtk"
        write_fields(mesh, state.phases, state.potentials, path, vel,
                     title=f"{cfg.benchmark} {cfg.scheme} t={state.t:.9e}")
        vtk_files.append(path)

    with DiagnosticsWriter(csv_path, cfg.n_phases) as writer:
        def on_step(k, prev, state, flow=None):
            kin = flow.kinetic_energy() if flow is not None else 0.0
            rec = diag.record(state, params, cfg.scheme, prev, scfg.uses_truncation, kin)
            writer.write(rec)
            if k == 0 or (cfg.vtk_stride > 0 and k % cfg.vtk_stride == 0):
                snapshot(k, state, flow)
            if log is not None:
                log(f"t={state.t:.6e} E={rec.E:.8e} constraint_L2={rec.constraint_L2:.3e}")

        if flow_run:
            boundary = rotation_profile if cfg.boundary.startswith("rotation") else None
            flow0 = init_flow(mesh, boundary)
            ncfg = NSCHConfig(scfg, boundary, cfg.transport_correction)
            state, flow = run_nsch(state0, flow0, params, ncfg, cfg.t_end, [on_step], cfg.stride)
        else:
            flow = None
            state = run(state0, params, scfg, cfg.t_end,
                        [lambda k, prev, st: on_step(k, prev, st)], cfg.stride)
        rows = writer.rows
    final_name = out_dir / "fields_final.vtk"
    write_fields(mesh, state.phases, state.potentials, final_name,
                 flow.vertex_velocity if flow is not None else None,
                 title=f"{cfg.benchmark} {cfg.scheme} t={state.t:.9e}")
    vtk_files.append(final_name)
    return RunResult(state, flow, csv_path, rows, vtk_files)


def run_eoc(cfg: RunConfig, dts, ref_dt: float, log=None) -> diag.EocTable:
    """Errors and rates of ``cfg.scheme`` for each time step against a fine reference."""
    dts = [float(d) for d in dts]
    if not dts:
        raise ConfigError("the time-step ladder is empty")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ConfigError("time steps must be given in strictly decreasing order")
    if not ref_dt < min(dts):
        raise ConfigError("the reference time step must be smaller than every ladder entry")
    if is_flow_run(cfg):
        raise ConfigError("convergence studies are available for the phase-field schemes only")
    params = cfg.params()
    state0 = initial_state(cfg)

    def solve_with(dt):
        if log is not None:
            log(f"running {cfg.scheme} with dt={dt:.3e} to T={cfg.t_end:.3e}")
        return run(state0, params, cfg.scheme_config(dt), cfg.t_end)

    reference = solve_with(ref_dt)
    return diag.eoc(reference, [(dt, solve_with(dt)) for dt in dts])
