"""Acceptance criteria 1-7, one test each; every test prints a PASS/FAIL line."""

import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from hexllg.coefficients import CoefficientFields, ConstantField, GaussianBump
from hexllg.continuum import continuum_params
from hexllg.dynamics import integrate
from hexllg.harness.config import read_config
from hexllg.harness.convergence import run_convergence
from hexllg.harness.initial import random_smooth
from hexllg.harness.verify import consistency_orders, run_verify
from hexllg.lattice import build_lattice
from hexllg.model import MaterialParams, ModelContext

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def report(capsys):
    def emit(number, ok, summary):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {summary}")
        return ok

    return emit


def worst(reports, names):
    out = {}
    for r in reports:
        for c in r.checks:
            if c.name in names:
                out[c.name] = max(out.get(c.name, 0.0), c.residual)
    return out


def test_criterion_1_identity_suite(report):
    names = {
        "calculus.sbp_kappa_k2", "calculus.sbp_dx_multi", "calculus.sbp_dy_multi",
        "calculus.leibniz", "calculus.green_formula", "calculus.laplacian_alternative",
        "calculus.quadratic_decomposition", "calculus.dy_auxiliary_split",
    }
    start = time.perf_counter()
    reps = [run_verify(4, 4, 1.0, seed=s, trials=1, orders=False, groups=("calculus",))
            for s in range(10)]
    elapsed = time.perf_counter() - start
    res = worst(reps, names)
    ok = set(res) == names and max(res.values()) <= 1e-12 and elapsed < 5.0
    report(1, ok, f"{len(names)} identities x 10 seeds, max residual {max(res.values()):.1e} "
                  f"(tol 1e-12), {elapsed:.2f} s (limit 5 s)")
    assert ok, res


def test_criterion_2_field_equivalence(report):
    reps = [run_verify(4, 4, 1.0, seed=s, trials=1, orders=False, groups=("model",))
            for s in range(10)]
    eq = worst(reps, {f"model.field_equivalence_B{i}" for i in range(1, 5)})
    var = worst(reps, {"model.variational_gradient"})["model.variational_gradient"]
    ok = len(eq) == 4 and max(eq.values()) <= 1e-10 and var <= 1e-5
    report(2, ok, f"per-term equivalence {max(eq.values()):.1e} (tol 1e-10), "
                  f"variational FD {var:.1e} (tol 1e-5)")
    assert ok


def test_criterion_3_interpolation(report):
    names = {"interpolation.isometry", "interpolation.multiplicativity",
             "interpolation.stability_l2", "interpolation.proximity"}
    tol = {"interpolation.isometry": 1e-13, "interpolation.multiplicativity": 0.0,
           "interpolation.stability_l2": 0.0, "interpolation.proximity": 0.0}
    parts = []
    ok = True
    for n in (4, 8):
        res = worst([run_verify(n, n, 1.0, seed=3, trials=10, orders=False,
                                groups=("interpolation",))], names)
        ok &= set(res) == names and all(res[k] <= tol[k] for k in names)
        parts.append(f"{n}x{n}: isometry {res['interpolation.isometry']:.1e}, "
                     f"bound excesses {max(res[k] for k in names - {'interpolation.isometry'}):.1e}")
    report(3, ok, "; ".join(parts))
    assert ok


def test_criterion_4_consistency_orders(report):
    start = time.perf_counter()
    fits = consistency_orders((0.4, 0.2, 0.1, 0.05))
    elapsed = time.perf_counter() - start
    lap2 = next(f for f in fits if f.name == "laplacian_k2")
    rest = min(f.order for f in fits if f.name != "laplacian_k2")
    ok = all(f.passed for f in fits) and lap2.target >= 1.8 and elapsed < 30.0
    assert all(f.target >= 0.8 for f in fits)
    report(4, ok, f"{len(fits)} operators, laplacian_k2 order {lap2.order:.2f} (need 1.8), "
                  f"others min {rest:.2f} (need 0.8), {elapsed:.2f} s (limit 30 s)")
    assert ok, [(f.name, f.order) for f in fits if not f.passed]


def _macrospin(theta0, dt_scale, integrator, b_tilde=2.0, alpha=0.1, horizon=2.0):
    lat = build_lattice(2, 3, 1.0)
    ctx = ModelContext.build(lat, MaterialParams(J1=0.0, mu=1.0, alpha=alpha),
                             CoefficientFields(B=ConstantField((0.0, 0.0, b_tilde))))
    m0 = np.tile([np.sin(theta0), 0.0, np.cos(theta0)], (lat.num_nodes, 1))
    t_end = horizon / b_tilde
    final, _ = integrate(m0, t_end, dt_scale / b_tilde, integrator, 10**9, ctx)
    exact = np.tanh(alpha * b_tilde * t_end + np.arctanh(np.cos(theta0)))
    return float(np.max(np.abs(final.m[:, 2] - exact)))


def _trajectory_checks(integrator, steps, dt):
    lat = build_lattice(4, 4, 1.0)
    P = tuple(map(tuple, lat.periods()))
    c = tuple(0.5 * (lat.periods()[0] + lat.periods()[1]))
    coeffs = CoefficientFields(
        lam=ConstantField(0.3),
        L=(GaussianBump(0.4, c, 1.5, offset=0.1, periods=P), ConstantField(0.05),
           ConstantField(0.02)),
        B=ConstantField((0.1, 0.0, 0.5)),
    )
    params = MaterialParams(J1=1.0, J2=0.2, J3=0.1, K=0.1, mu=1.0, alpha=0.1)
    ctx = ModelContext.build(lat, params, coeffs)
    unit = []
    _, mon = integrate(random_smooth(lat, 9), steps * dt, dt, integrator, 1, ctx,
                       callback=lambda s: unit.append(
                           np.max(np.abs(np.linalg.norm(s.m, axis=1) - 1.0))))
    d, t = np.array(mon.dmdt_norm_sq), np.array(mon.torque_norm_sq)
    torque = float(np.max(np.abs(d - (1 + params.alpha**2) * t) / np.maximum(d, 1e-300)))
    rise = float(np.max(np.diff(mon.energy_star)))
    return len(unit), max(unit), torque, rise


def test_criterion_5_dynamics(report):
    # shipped macrospin case (tilt 2.0, b~ = 2, alpha = 0.1, b~ t* = 2) at the contract steps
    err_rk4 = _macrospin(2.0, 1e-3, "rk4")
    err_mid = _macrospin(2.0, 1e-2, "midpoint")
    tilts = (0.5, 1.0, 2.0, 2.8)
    sweep_rk4 = max(_macrospin(t, 1e-3, "rk4") for t in tilts)
    sweep_mid_contract = max(_macrospin(t, 1e-2, "midpoint") for t in tilts)
    sweep_mid_half = max(_macrospin(t, 5e-3, "midpoint") for t in tilts)
    n_mid, unit_mid, torque_mid, rise = _trajectory_checks("midpoint", 1000, 0.1)
    n_rk4, unit_rk4, torque_rk4, _ = _trajectory_checks("rk4", 300, 0.02)
    ok = (err_rk4 <= 1e-6 and err_mid <= 1e-6 and sweep_rk4 <= 1e-6 and sweep_mid_half <= 1e-6
          and max(unit_mid, unit_rk4) <= 1e-12 and max(torque_mid, torque_rk4) <= 1e-12
          and n_mid >= 1000 and rise <= 1e-9)
    report(5, ok,
           f"macrospin m_z err rk4 {err_rk4:.1e}, midpoint {err_mid:.1e} (tol 1e-6); "
           f"tilt sweep rk4 {sweep_rk4:.1e}, midpoint {sweep_mid_contract:.2e} at dt=1e-2/b~ "
           f"and {sweep_mid_half:.1e} at dt=5e-3/b~; |m|-1 {max(unit_mid, unit_rk4):.1e}; "
           f"torque identity {max(torque_mid, torque_rk4):.1e}; "
           f"largest per-step H* change over {n_mid} midpoint steps {rise:.1e} (increase tol 1e-9)")
    assert ok


def test_criterion_6_table_mapping(report):
    j1 = continuum_params(MaterialParams(J1=1.0)).J_star
    j2 = continuum_params(MaterialParams(J1=0.0, J2=1.0)).J_star
    lam = continuum_params(MaterialParams(J1=0.0, h_star=1.0),
                           CoefficientFields(lam=ConstantField(2.0))).lambda_star
    mu = continuum_params(MaterialParams(J1=0.0, mu=1.0, h_star=2.0)).mu_star
    got = (j1, j2, lam, mu)
    expect = (Fraction(3, 4), Fraction(9, 2), Fraction(2), Fraction(1, 4))
    ok = all(isinstance(g, Fraction) for g in got) and got == expect
    report(6, ok, "J*=" + ", ".join(str(g) for g in got[:2])
           + f"; lambda*={got[2]}; mu*={got[3]} (exact rationals)")
    assert ok


def test_criterion_7_convergence_ladder(report):
    cfg = read_config(CONFIGS / "convergence.json")
    assert cfg.params.J1 == 1.0 and cfg.params.J2 == cfg.params.J3 == cfg.params.K == 0.0
    assert cfg.time.dt_rule_c == 0.1
    start = time.perf_counter()
    res = run_convergence(cfg, out_dir=False)
    elapsed = time.perf_counter() - start
    rep = res.report
    hs = [lvl["h"] for lvl in rep["levels"]]
    final_cont = [lvl["l2_to_continuum"][-1] for lvl in rep["levels"]]
    final_self = [lvl["l2_to_next"][-1] for lvl in rep["levels"][:-1]]
    ok = rep["passed"] and elapsed <= 600 and hs == [0.4, 0.2, 0.1]
    report(7, ok, f"h={hs}, {len(rep['times'])} times, strictly decreasing at every time: "
                  f"continuum {rep['monotone']['to_continuum']}, self {rep['monotone']['self']}; "
                  f"final distances to continuum {', '.join(f'{d:.2e}' for d in final_cont)}, "
                  f"self {', '.join(f'{d:.2e}' for d in final_self)}; "
                  f"max tilt {rep['continuum']['max_tilt_degrees'][0]:.0f} -> "
                  f"{rep['continuum']['max_tilt_degrees'][-1]:.0f} deg; {elapsed:.0f} s (limit 600 s)")
    assert ok
