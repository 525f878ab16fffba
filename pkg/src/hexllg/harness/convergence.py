"""Grid-refinement study: lattice ladder against itself and against the continuum solver.

Every level is interpolated with the piecewise-linear interpolant and sampled
on one common grid of about four points per node of the finest lattice.  The
continuum reference runs on an integer refinement of that grid and is
sampled by striding, so no interpolation enters the reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..continuum import GridSpinField, continuum_integrate, continuum_params
from ..dynamics import integrate
from ..interpolation import p_interp, sample_to_grid
from . import io
from .config import SCHEMA_VERSION, ConfigError, RunConfig
from .initial import CLOSED_FORM, initial_field, sample_texture
from .simulate import model_for

GRID_DENSITY = 4


@dataclass
class ConvergenceResult:
    report: dict
    level_samples: list  # per level: (samples, nx, ny, 3)
    reference: np.ndarray  # (samples, nx, ny, 3)

    @property
    def passed(self) -> bool:
        return bool(self.report["passed"])


def _validate(config: RunConfig) -> None:
    errors = []
    spec = config.lattice
    if not spec.is_ladder:
        errors.append("lattice: convergence needs a ladder (h0, levels)")
    elif spec.levels < 3:
        errors.append(f"lattice.levels: need at least 3 levels, got {spec.levels}")
    if spec.n2 % (2 * spec.n1) != 0:
        errors.append("lattice: n2 must be a multiple of 2*n1 so the torus is rectangular")
    if config.initial.get("kind") not in CLOSED_FORM:
        errors.append(f"initial.kind: convergence needs a closed-form texture {CLOSED_FORM}")
    if config.time.dt is not None:
        errors.append("time.dt: convergence ties the step to h; use dt_rule")
    if not config.time.t_end > 0:
        errors.append("time.t_end: must be positive")
    if errors:
        raise ConfigError(errors)


def common_grid(area: float, num_nodes: int, periods: np.ndarray) -> tuple:
    """Near-square grid with about ``GRID_DENSITY`` points per node."""
    spacing = math.sqrt(area / (GRID_DENSITY * num_nodes))
    return (max(2, round(periods[0, 0] / spacing)), max(2, round(periods[1, 1] / spacing)))


def _grid_l2(a: np.ndarray, b: np.ndarray, cell: float) -> list:
    return [float(x) for x in np.sqrt(cell * np.sum((a - b) ** 2, axis=(1, 2, 3)))]


def _strictly_decreasing(rows: list) -> bool:
    return all(a > b for r1, r2 in zip(rows, rows[1:]) for a, b in zip(r1, r2))


def run_convergence(config: RunConfig, out_dir=None, log=None) -> ConvergenceResult:
    _validate(config)
    spec = config.lattice
    times = [float(t) for t in np.linspace(0.0, config.time.t_end, config.time.samples)]
    spacing = times[1] - times[0]

    finest = model_for(config, *spec.level(spec.levels - 1)).lat
    periods = finest.periods()
    nx, ny = common_grid(finest.area, finest.num_nodes, periods)
    cell = periods[0, 0] * periods[1, 1] / (nx * ny)

    levels = []
    samples = []
    for index in range(spec.levels):
        n1, n2, h = spec.level(index)
        ctx = model_for(config, n1, n2, h)
        dt_rule = config.time.step_for(h, config.params.exchange_scale)
        dt = spacing / math.ceil(spacing / dt_rule - 1e-9)
        grids = []

        def on_sample(state, lat=ctx.lat):
            grids.append(sample_to_grid(p_interp(lat, state.m), nx, ny).values)

        final, monitors = integrate(initial_field(config.initial, ctx.lat), config.time.t_end, dt,
                                    config.integrator, 10**9, ctx, sample_times=times,
                                    on_sample=on_sample)
        samples.append(np.array(grids))
        levels.append({
            "h": h, "n1": n1, "n2": n2, "dt": dt, "steps": final.step_count,
            "energy_star": [monitors.energy_star[0], monitors.energy_star[-1]],
        })
        if log:
            log(f"level {index}: h={h:g} nodes={ctx.lat.num_nodes} dt={dt:.4g} "
                f"steps={final.step_count}")

    refine = config.continuum.refine
    cparams = continuum_params(config.params, config.coefficient_fields(periods),
                               config.continuum.mapping)
    cdx = periods[0, 0] / (nx * refine)
    cdy = periods[1, 1] / (ny * refine)
    blank = GridSpinField(np.zeros((nx * refine, ny * refine, 3)), cdx, cdy)
    m_init = sample_texture(config.initial, blank.points().reshape(-1, 2), periods)
    start = blank.with_values(m_init.reshape(nx * refine, ny * refine, 3))
    stiffness = float(cparams.J_star) if cparams.J_star > 0 else 1.0
    cdt = config.continuum.c * min(cdx, cdy) ** 2 / stiffness
    cdt = spacing / math.ceil(spacing / cdt - 1e-9)
    _, snaps = continuum_integrate(start, config.time.t_end, cdt, cparams, sample_times=times)
    reference = np.array([snaps[t].values[::refine, ::refine] for t in times])
    if log:
        log(f"continuum: {nx * refine}x{ny * refine} grid, dt={cdt:.4g}")

    to_cont = [_grid_l2(s, reference, cell) for s in samples]
    to_next = [_grid_l2(a, b, cell) for a, b in zip(samples, samples[1:])]
    for i, level in enumerate(levels):
        level["l2_to_continuum"] = to_cont[i]
        level["l2_to_next"] = to_next[i] if i < len(to_next) else []

    tilt = np.degrees(np.arccos(np.clip(reference[..., 2], -1.0, 1.0))).max(axis=(1, 2))
    monotone_cont = _strictly_decreasing(to_cont)
    monotone_self = _strictly_decreasing(to_next)
    report = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "times": times,
        "grid": {"nx": nx, "ny": ny, "periods": periods.tolist()},
        "continuum": {"nx": nx * refine, "ny": ny * refine, "dt": cdt,
                      "mapping": cparams.mapping, "max_tilt_degrees": tilt.tolist()},
        "levels": levels,
        "monotone": {"to_continuum": monotone_cont, "self": monotone_self},
        "passed": bool(monotone_cont and monotone_self),
    }
    if out_dir is not False:
        directory = Path(out_dir if out_dir is not None else config.outputs["directory"])
        io.write_json(directory / "convergence.json", report)
    return ConvergenceResult(report, samples, reference)
