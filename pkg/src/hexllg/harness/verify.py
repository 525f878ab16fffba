"""Identity suite: every exact identity and bound, checked on seeded random fields.

Each check yields a :class:`Check` with the worst residual over all trials.
Residuals of algebraic identities are relative to the magnitude of the terms
involved; bounds report the amount by which the bound is exceeded (so a
passing bound has residual 0).
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import calculus as dc
from .. import interpolation as itp
from ..coefficients import (
    CoefficientFields,
    ConstantField,
    GaussianBump,
    SampledCoefficients,
    periodic_gaussian,
)
from ..dynamics import SimState, step_midpoint_implicit, step_rk4_projected
from ..lattice import DISTANCE, LAPLACE_NORM, N_NEIGHBORS, NU, HexLattice, build_lattice
from ..model import (
    MaterialParams,
    ModelContext,
    discrete_energy_star,
    effective_field_pde,
    effective_field_variational,
    hamiltonian,
    llg_rhs_from_field,
)
from .initial import random_smooth

TOL_ALGEBRAIC = 1e-12
TOL_FIELD = 1e-10
TOL_VARIATIONAL = 1e-5
TOL_ISOMETRY = 1e-13
TOL_ENERGY_RATE = 1e-6
TOL_DISSIPATION = 1e-9

ORDER_LADDER = (0.4, 0.2, 0.1, 0.05)
ORDER_TARGETS = {"laplacian_k2": 1.8}
ORDER_DEFAULT_TARGET = 0.8


@dataclass
class Check:
    name: str
    group: str
    residual: float
    tolerance: float
    passed: bool = True
    detail: str = ""

    def merge(self, residual: float) -> None:
        if not np.isfinite(residual) or residual > self.residual:
            self.residual = float(residual)
        self.passed = bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


@dataclass
class OrderFit:
    name: str
    steps: list
    errors: list
    order: float
    target: float
    passed: bool


@dataclass
class VerifyReport:
    lattice: dict
    seed: int
    trials: int
    corrupted: bool
    checks: list = field(default_factory=list)
    orders: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(o.passed for o in self.orders)

    def failures(self) -> list:
        return [c.name for c in self.checks if not c.passed] + [
            o.name for o in self.orders if not o.passed
        ]

    def to_dict(self) -> dict:
        return {
            "lattice": self.lattice,
            "seed": self.seed,
            "trials": self.trials,
            "corrupted_neighbors": self.corrupted,
            "passed": self.passed,
            "failures": self.failures(),
            "checks": [asdict(c) for c in self.checks],
            "orders": [asdict(o) for o in self.orders],
            "seconds": self.seconds,
        }


def _rel(diff, *terms) -> float:
    scale = max(float(np.max(np.abs(t))) for t in terms)
    return float(np.max(np.abs(diff))) / max(scale, 1e-300)


def _rel_scalar(value: float, *terms: float) -> float:
    return abs(value) / max(max(abs(t) for t in terms), 1e-300)


class _Suite:
    def __init__(self):
        self.checks: dict[str, Check] = {}

    def record(self, name: str, group: str, residual: float, tol: float, detail: str = "") -> None:
        chk = self.checks.get(name)
        if chk is None:
            chk = self.checks[name] = Check(name, group, 0.0, tol, True, detail)
        chk.merge(residual)


# ----------------------------------------------------------------- lattice


def _check_lattice(s: _Suite, lat: HexLattice) -> None:
    worst_sym = 0
    worst_sum = 0.0
    worst_dist = 0.0
    for k, nk in N_NEIGHBORS.items():
        nb = lat.neighbors[k]
        for j in range(1, nk + 1):
            jr = 1 + (j + 2) % 6 if k == 2 else j
            back = nb[nb[:, j - 1], jr - 1]
            worst_sym = max(worst_sym, int(np.sum(back != np.arange(lat.num_nodes))))
        delta = lat.min_image(lat.positions[nb] - lat.positions[:, None, :])
        worst_sum = max(worst_sum, float(np.max(np.abs(delta.sum(axis=1)))) / lat.h)
        dist = np.linalg.norm(delta, axis=-1)
        worst_dist = max(worst_dist, float(np.max(np.abs(dist - DISTANCE[k] * lat.h))) / lat.h)
    s.record("lattice.neighbor_symmetry", "lattice", worst_sym, 0,
             "count of bonds whose reverse does not return")
    s.record("lattice.offset_sum_zero", "lattice", worst_sum, TOL_ALGEBRAIC)
    s.record("lattice.neighbor_distance", "lattice", worst_dist, TOL_ALGEBRAIC)


# ---------------------------------------------------------------- calculus


def _check_calculus(s: _Suite, lat: HexLattice, rng: np.random.Generator) -> None:
    u = rng.standard_normal(lat.num_nodes)
    v = rng.standard_normal(lat.num_nodes)
    kap = lat.kappa.astype(float)
    ip = lambda a, b: dc.inner_product(lat, a, b)  # noqa: E731

    for j in range(1, 7):
        a = ip(u, kap * dc.diff(lat, v, 2, j))
        b = ip(kap * dc.diff_backward(lat, u, 2, j), v)
        s.record("calculus.sbp_kappa_k2", "calculus", _rel_scalar(a + b, a, b), TOL_ALGEBRAIC)
    for k in (1, 3):
        a = ip(u, dc.dx_multi(lat, v, k))
        b = ip(dc.dx_multi(lat, u, k), v)
        s.record("calculus.sbp_dx_multi", "calculus", _rel_scalar(a + b, a, b), TOL_ALGEBRAIC)
        a = ip(u, dc.dy_multi(lat, v, k))
        b = ip(dc.dy_multi(lat, u, k), v)
        s.record("calculus.sbp_dy_multi", "calculus", _rel_scalar(a + b, a, b), TOL_ALGEBRAIC)

    uv = u * v
    for k, nk in N_NEIGHBORS.items():
        nb = lat.neighbors[k]
        lap = dc.laplacian(lat, u, k)
        green = np.zeros_like(u)
        alt = np.zeros_like(u)
        for j in range(1, nk + 1):
            n = nb[:, j - 1]
            lhs1 = u * dc.diff(lat, v, k, j)
            lhs2 = dc.diff_backward(lat, u, k, j)[n] * v[n]
            rhs = dc.diff(lat, uv, k, j)
            s.record("calculus.leibniz", "calculus", _rel(lhs1 + lhs2 - rhs, lhs1, lhs2, rhs),
                     TOL_ALGEBRAIC)
            fwd = dc.diff(lat, u, k, j)
            bwd = dc.diff_backward(lat, u, k, j)
            s.record("calculus.backward_exchange", "calculus", _rel(fwd - bwd[n], fwd),
                     TOL_ALGEBRAIC)
            green += dc.diff(lat, bwd, k, j)
            alt += fwd
            tele = float(np.sum(fwd))
            s.record("calculus.telescoping", "calculus", abs(tele) / float(np.max(np.abs(fwd))),
                     TOL_ALGEBRAIC)
        green *= DISTANCE[k] ** 2 / (2 * LAPLACE_NORM[k])
        alt *= DISTANCE[k] / (LAPLACE_NORM[k] * lat.h)
        s.record("calculus.green_formula", "calculus", _rel(lap - green, lap, green), TOL_ALGEBRAIC)
        s.record("calculus.laplacian_alternative", "calculus", _rel(lap - alt, lap, alt),
                 TOL_ALGEBRAIC)

    for k in (1, 3):
        d_u = dc.diffs(lat, u, k)
        d_v = dc.diffs(lat, v, k)
        lhs = np.sum(d_u * d_v, axis=0)
        t1 = dc.aux_diff(lat, u, k, 1) * dc.aux_diff(lat, v, k, 0)
        t2 = dc.aux_diff_backward(lat, u, k, 1) * dc.aux_diff_backward(lat, v, k, 0)
        t3 = dc.dx_multi(lat, u, k) * dc.dx_multi(lat, v, k)
        rhs = 1.5 * (t1 + t2 + t3)
        s.record("calculus.quadratic_decomposition", "calculus", _rel(lhs - rhs, lhs, rhs),
                 TOL_ALGEBRAIC)
        dy = dc.dy_multi(lat, u, k)
        split = dc.aux_diff(lat, u, k, 1) + dc.aux_diff_backward(lat, u, k, 1)
        s.record("calculus.dy_auxiliary_split", "calculus", _rel(dy - split, dy, split),
                 TOL_ALGEBRAIC)
        dx = dc.dx_multi(lat, u, k)
        s.record("calculus.telescoping", "calculus",
                 abs(float(np.sum(dx))) / float(np.max(np.abs(dx))), TOL_ALGEBRAIC)


# ------------------------------------------------------------------- model


def _random_unit(rng, n) -> np.ndarray:
    m = rng.standard_normal((n, 3))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def _model_setup(lat: HexLattice, rng: np.random.Generator):
    P = tuple(map(tuple, lat.periods()))
    centre = tuple(0.5 * (np.array(P[0]) + np.array(P[1])))
    params = MaterialParams(
        J1=1.0 + rng.uniform(0, 0.5), J2=rng.uniform(0.1, 0.4), J3=rng.uniform(0.1, 0.4),
        K=rng.uniform(0.1, 0.3), mu=rng.uniform(0.5, 1.5), alpha=0.1,
        h_star=rng.uniform(0.5, 1.5),
    )
    width = 1.5 * lat.h
    coeffs = CoefficientFields(
        lam=ConstantField(rng.uniform(0.1, 0.5)),
        L=tuple(GaussianBump(rng.uniform(0.2, 0.6), centre, width, rng.uniform(0.05, 0.2),
                             periods=P) for _ in range(3)),
        B=GaussianBump(rng.uniform(0.2, 0.8), centre, width, 0.3,
                       direction=tuple(rng.standard_normal(3)), periods=P),
    )
    return params, coeffs


def _check_model(s: _Suite, lat: HexLattice, rng: np.random.Generator) -> None:
    params, coeffs = _model_setup(lat, rng)
    c = coeffs.sample(lat)
    m = _random_unit(rng, lat.num_nodes)
    bv = effective_field_variational(lat, m, params, c)
    bp = effective_field_pde(lat, m, params, c)
    hs2 = params.h_star**2
    pairs = {
        "B1": bp.part("B1"), "B2": bp.part("B2"),
        "B3": bp.part("B3_1") + bp.part("B3_2"), "B4": bp.part("B4"),
    }
    for name, pde in pairs.items():
        lhs = np.cross(m, bv.part(name)) / hs2
        rhs = np.cross(m, pde)
        s.record(f"model.field_equivalence_{name}", "model",
                 float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(rhs)))),
                 TOL_FIELD)

    # variational oracle: central differences of the Hamiltonian
    step = 1e-6
    fd = np.empty_like(m)
    for i in range(lat.num_nodes):
        for a in range(3):
            mp = m.copy()
            mm = m.copy()
            mp[i, a] += step
            mm[i, a] -= step
            fd[i, a] = -(hamiltonian(lat, mp, params, c, None)
                         - hamiltonian(lat, mm, params, c, None)) / (2 * step)
    s.record("model.variational_gradient", "model", _rel(fd - bv.values, bv.values),
             TOL_VARIATIONAL)

    rhs = llg_rhs_from_field(m, bp.values, params.alpha)
    s.record("model.rhs_orthogonality", "model",
             float(np.max(np.abs(np.sum(rhs * m, axis=1)))) / float(np.max(np.abs(rhs))),
             TOL_ALGEBRAIC)

    # each part is linear in its own coefficient
    zero = MaterialParams(J1=0.0, alpha=params.alpha, h_star=params.h_star)
    blank = dict(lam=np.zeros_like(c.lam), L=np.zeros_like(c.L), B=np.zeros_like(c.B))

    def only_L(k, scale):
        L = np.zeros_like(c.L)
        L[k] = scale * c.L[k]
        return SampledCoefficients(**{**blank, "L": L})

    builders = {
        "J1": ("B1", lambda f: (zero.with_(J1=f * params.J1), SampledCoefficients(**blank))),
        "J2": ("B1", lambda f: (zero.with_(J2=f * params.J2), SampledCoefficients(**blank))),
        "J3": ("B1", lambda f: (zero.with_(J3=f * params.J3), SampledCoefficients(**blank))),
        "K": ("B2", lambda f: (zero.with_(K=f * params.K), SampledCoefficients(**blank))),
        "mu": ("B4", lambda f: (zero.with_(mu=f * params.mu),
                                SampledCoefficients(**{**blank, "B": c.B}))),
        "lambda": ("B3_1", lambda f: (zero, SampledCoefficients(**{**blank, "lam": f * c.lam}))),
    }
    for k in range(3):
        builders[f"L{k + 1}"] = ("B3_2", lambda f, k=k: (zero, only_L(k, f)))
    for part, build in builders.values():
        f1 = effective_field_pde(lat, m, *build(1.0)).part(part)
        f2 = effective_field_pde(lat, m, *build(2.0)).part(part)
        s.record("model.linear_scaling", "model", _rel(f2 - 2 * f1, f2), TOL_ALGEBRAIC)

    # energy rate along a smooth unit field: d/dt H* = -(dm/dt, B*)_h
    ms = random_smooth(lat, int(rng.integers(1 << 31)), 3)
    ctx = ModelContext(lat, params, c)
    b = ctx.field(ms)
    rate = llg_rhs_from_field(ms, b, params.alpha)
    eps = 1e-5

    def along(t):
        x = ms + t * rate
        return discrete_energy_star(lat, x / np.linalg.norm(x, axis=1, keepdims=True), params, c)
    fd_rate = (along(eps) - along(-eps)) / (2 * eps)
    exact = -dc.inner_product(lat, rate, b)
    s.record("model.energy_rate", "model", _rel_scalar(fd_rate - exact, exact), TOL_ENERGY_RATE)


# ----------------------------------------------------------- interpolation


def _check_interpolation(s: _Suite, lat: HexLattice, rng: np.random.Generator) -> None:
    u = rng.standard_normal(lat.num_nodes)
    v = rng.standard_normal(lat.num_nodes)
    qu, qv = itp.q_interp(lat, u), itp.q_interp(lat, v)
    pts, w, loc = qu.quadrature(3)
    integral = float(np.sum(w * qu.at(loc) * qv.at(loc)))
    discrete = dc.inner_product(lat, u, v)
    s.record("interpolation.isometry", "interpolation",
             _rel_scalar(integral - discrete, integral, discrete, dc.norm_l2(lat, u) * dc.norm_l2(lat, v)),
             TOL_ISOMETRY)

    P = lat.periods()
    x = rng.uniform(0, 1, size=(400, 2)) @ P
    prod = itp.q_interp(lat, u * v)(x)
    s.record("interpolation.multiplicativity", "interpolation",
             float(np.max(np.abs(prod - qu(x) * qv(x)))), 0.0)

    loc_x = itp.locate(lat, x)
    corners = u[itp.cell_vertices(lat)][loc_x.node]
    lo, hi = corners.min(axis=1), corners.max(axis=1)
    pu = itp.p_interp(lat, u)
    for name, vals in (("step", qu.at(loc_x)), ("linear", pu.at(loc_x))):
        excess = np.maximum(vals - hi, lo - vals).max()
        s.record(f"interpolation.range_{name}", "interpolation", max(0.0, float(excess)), 1e-14)

    s.record("interpolation.linear_nodal", "interpolation",
             _rel(pu(lat.positions) - u, u), 1e-14)

    norm_u = dc.norm_l2(lat, u)
    d1 = math.sqrt(sum(dc.norm_l2(lat, dc.diff(lat, u, 1, j)) ** 2 for j in (1, 2, 3)))
    s.record("interpolation.stability_l2", "interpolation",
             max(0.0, itp.l2_norm(pu) - 4 * norm_u), 0.0, "excess over 4 ||u||_h")
    s.record("interpolation.stability_gradient", "interpolation",
             max(0.0, itp.gradient_l2_norm(pu) - math.sqrt(6) * d1), 0.0,
             "excess over sqrt(6) (sum_j ||D^{1,j} u||^2)^(1/2)")
    s.record("interpolation.proximity", "interpolation",
             max(0.0, itp.l2_distance(pu, qu) - lat.h * d1), 0.0,
             "excess over h (sum_j ||D^{1,j} u||^2)^(1/2)")

    m = _random_unit(rng, lat.num_nodes)
    qm = itp.q_interp(lat, m)(x)
    s.record("interpolation.step_unit_length", "interpolation",
             float(np.max(np.abs(np.linalg.norm(qm, axis=1) - 1.0))), 1e-14)


# ---------------------------------------------------------------- dynamics


def _check_dynamics(s: _Suite, lat: HexLattice, rng: np.random.Generator) -> None:
    params, coeffs = _model_setup(lat, rng)
    ctx = ModelContext.build(lat, params, coeffs)
    m0 = random_smooth(lat, int(rng.integers(1 << 31)), 3)
    dt = 0.05 * lat.h**2 / params.exchange_scale
    for name, stepper in (("rk4", step_rk4_projected), ("midpoint", step_midpoint_implicit)):
        state = SimState(0.0, m0, 0)
        energy = [ctx.energy_star(state.m)]
        worst_unit = 0.0
        worst_torque = 0.0
        for _ in range(10):
            state = stepper(state, dt, ctx)
            worst_unit = max(worst_unit, float(np.max(np.abs(np.linalg.norm(state.m, axis=1) - 1))))
            b = ctx.field(state.m)
            rate = llg_rhs_from_field(state.m, b, params.alpha)
            torque = np.cross(state.m, b)
            lhs = dc.inner_product(lat, rate, rate)
            rhs = (1 + params.alpha**2) * dc.inner_product(lat, torque, torque)
            worst_torque = max(worst_torque, _rel_scalar(lhs - rhs, lhs, rhs))
            energy.append(ctx.energy_star(state.m))
        s.record(f"dynamics.unit_length_{name}", "dynamics", worst_unit, TOL_ALGEBRAIC)
        s.record("dynamics.torque_identity", "dynamics", worst_torque, TOL_ALGEBRAIC)
        if name == "midpoint":
            s.record("dynamics.energy_dissipation_midpoint", "dynamics",
                     max(0.0, float(np.max(np.diff(energy)))), TOL_DISSIPATION,
                     "largest per-step increase of H*")


# ------------------------------------------------------------------ orders


def _fit(hs, errs) -> float:
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def consistency_orders(ladder=ORDER_LADDER, width: float = 0.7) -> list:
    """Fitted convergence orders of the lattice operators on a periodic Gaussian bump.

    The default width keeps the bump resolved at the coarsest step; narrower
    bumps put the first refinement in the pre-asymptotic range.
    """
    h0 = ladder[0]
    errors: dict[str, list] = {}
    for h in ladder:
        f = int(round(h0 / h))
        lat = build_lattice(4 * f, 8 * f, h)
        P = lat.periods()
        centre = 0.5 * (P[0] + P[1]) + np.array([0.1, 0.05])
        val, grad, lap = periodic_gaussian(lat.positions, centre, width, P)

        def add(name, approx, exact):
            errors.setdefault(name, []).append(float(np.max(np.abs(approx - exact))))

        for k in (1, 2, 3):
            add(f"laplacian_k{k}", dc.laplacian(lat, val, k), lap)
        for k, sign in ((1, 1.0), (3, -1.0)):
            add(f"dx_multi_k{k}", dc.dx_multi(lat, val, k), sign * grad[:, 0])
            add(f"dy_multi_k{k}", dc.dy_multi(lat, val, k), sign * grad[:, 1])
        kap = lat.kappa.astype(float)
        for j in range(1, 7):
            add(f"kappa_diff_k2_j{j}", kap * dc.diff(lat, val, 2, j), grad @ NU[j - 1])
    fits = []
    for name, errs in errors.items():
        order = _fit(ladder, errs)
        target = ORDER_TARGETS.get(name, ORDER_DEFAULT_TARGET)
        fits.append(OrderFit(name, list(ladder), errs, order, target, bool(order >= target)))
    return fits


# -------------------------------------------------------------------- main


def corrupt_neighbors(lat: HexLattice) -> HexLattice:
    """Negative control: rotate one column of the second-neighbour table."""
    tables = {k: np.array(v) for k, v in lat.neighbors.items()}
    tables[2][:, 0] = np.roll(tables[2][:, 0], 1)
    return lat.with_neighbors(tables)


def run_verify(n1: int = 4, n2: int = 4, h: float = 1.0, seed: int = 0, trials: int = 10,
               corrupt: bool = False, orders: bool = True,
               groups=("lattice", "calculus", "model", "interpolation", "dynamics")) -> VerifyReport:
    start = time.perf_counter()
    lat = build_lattice(n1, n2, h)
    if corrupt:
        lat = corrupt_neighbors(lat)
    suite = _Suite()
    if "lattice" in groups:
        _check_lattice(suite, lat)
    runners = [
        ("calculus", _check_calculus), ("model", _check_model),
        ("interpolation", _check_interpolation), ("dynamics", _check_dynamics),
    ]
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        for group, fn in runners:
            if group in groups:
                fn(suite, lat, rng)
    report = VerifyReport({"n1": n1, "n2": n2, "h": h}, seed, trials, corrupt,
                          list(suite.checks.values()))
    if orders:
        report.orders = consistency_orders()
    report.seconds = time.perf_counter() - start
    return report
