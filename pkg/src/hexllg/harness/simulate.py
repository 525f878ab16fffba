"""Single-lattice simulation driver."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dynamics import IntegrationError, MonitorSeries, SimState, integrate
from ..lattice import HexLattice, build_lattice
from ..model import ModelContext
from . import io
from .config import SCHEMA_VERSION, ConfigError, RunConfig
from .initial import initial_field

NORM_TOL = 1e-9


@dataclass
class SimulationResult:
    lattice: HexLattice
    final: SimState
    monitors: MonitorSeries
    dt: float
    snapshots: list  # (t_star, path or None)
    manifest: dict


def check_coefficients(ctx: ModelContext) -> None:
    errors = []
    c = ctx.coeffs
    if np.any(c.lam < 0):
        errors.append("coeffs.lambda: negative at some nodes; the discrete energy needs lambda >= 0")
    for k in range(3):
        if np.any(c.L[k] < 0):
            errors.append(f"coeffs.L[{k}]: negative at some nodes; the discrete energy needs L >= 0")
    if errors:
        raise ConfigError(errors)


def model_for(config: RunConfig, n1: int, n2: int, h: float) -> ModelContext:
    lat = build_lattice(n1, n2, h)
    ctx = ModelContext.build(lat, config.params, config.coefficient_fields(lat.periods()))
    check_coefficients(ctx)
    return ctx


def run_simulate(config: RunConfig, out_dir=None) -> SimulationResult:
    """Integrate one lattice and write snapshots, the monitor series and a manifest.

    With ``out_dir=None`` the configured output directory is used; pass
    ``False`` to skip writing files.
    """
    if config.lattice.is_ladder:
        raise ConfigError(["lattice: simulate needs a single lattice (h), not a ladder"])
    n1, n2, h = config.lattice.level(0)
    ctx = model_for(config, n1, n2, h)
    lat = ctx.lat
    dt = config.time.step_for(h, config.params.exchange_scale)
    m0 = initial_field(config.initial, lat)

    directory = None
    if out_dir is not False:
        directory = Path(out_dir if out_dir is not None else config.outputs["directory"])
        directory.mkdir(parents=True, exist_ok=True)

    snapshots = []

    def on_sample(state: SimState) -> None:
        dev = float(np.max(np.abs(np.linalg.norm(state.m, axis=1) - 1.0)))
        if not dev <= NORM_TOL:
            raise IntegrationError(f"spin norm deviates by {dev:.2e} at a snapshot",
                                   state.t_star, state.step_count)
        path = None
        if directory is not None:
            path = directory / f"snapshot_{len(snapshots):03d}.csv"
            io.write_snapshot(path, lat, state.m)
        snapshots.append((state.t_star, path))

    final, monitors = integrate(
        m0, config.time.t_end, dt, config.integrator, config.time.monitor_stride, ctx,
        sample_times=config.time.snapshot_times, on_sample=on_sample,
    )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "lattice": {"n1": n1, "n2": n2, "h": h, "num_nodes": lat.num_nodes},
        "dt": dt,
        "steps": final.step_count,
        "t_star_end": final.t_star,
        "physical_time_end": config.params.physical_time(final.t_star),
        "snapshots": [
            {"t_star": t, "file": None if p is None else p.name} for t, p in snapshots
        ],
        "series": "series.csv",
        "max_norm_deviation": float(np.max(np.abs(np.linalg.norm(final.m, axis=1) - 1.0))),
    }
    if directory is not None:
        io.write_series(directory / "series.csv", monitors)
        io.write_json(directory / "run.json", manifest)
    return SimulationResult(lat, final, monitors, dt, snapshots, manifest)
