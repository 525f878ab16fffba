from fractions import Fraction

import numpy as np
import pytest

from hexllg.coefficients import CoefficientFields, ConstantField, GaussianBump
from hexllg.continuum import (
    ContinuumContext,
    GridSpinField,
    continuum_effective_field,
    continuum_integrate,
    continuum_params,
    grid_laplacian,
)
from hexllg.harness.initial import gaussian_tilt
from hexllg.lattice import LAPLACE_NORM, build_lattice
from hexllg.model import MaterialParams, effective_field_pde


def test_exchange_mapping_examples_exact():
    cases = [
        (MaterialParams(J1=1.0), Fraction(3, 4)),
        (MaterialParams(J1=0.0, J2=1.0), Fraction(9, 2)),
        (MaterialParams(J1=0.0, J3=1.0), Fraction(3)),
        (MaterialParams(J1=0.0, K=1.0), Fraction(3, 2)),
        (MaterialParams(J1=2.0, J2=0.5, J3=0.25, K=1.0), Fraction(3, 2) + Fraction(9, 4)
         + Fraction(3, 4) + Fraction(3, 2)),
    ]
    for p, expect in cases:
        got = continuum_params(p).J_star
        assert isinstance(got, Fraction) and got == expect


def test_exchange_weights_are_the_laplacian_normalisations():
    for k, w in zip((1, 2, 3), (Fraction(3, 4), Fraction(9, 2), Fraction(3))):
        assert LAPLACE_NORM[k] == float(w)


def test_local_coefficient_scalings_exact():
    c = continuum_params(MaterialParams(J1=0.0, h_star=1.0),
                         CoefficientFields(lam=ConstantField(2.0)))
    assert c.lambda_star == Fraction(2)
    c = continuum_params(MaterialParams(J1=0.0, mu=1.0, h_star=2.0))
    assert c.mu_star == Fraction(1, 4)
    L = CoefficientFields(L=(ConstantField(1.0), ConstantField(0.5), ConstantField(0.25)))
    c = continuum_params(MaterialParams(h_star=2.0), L)
    assert c.L_star == Fraction(7, 16)
    c = continuum_params(MaterialParams(h_star=2.0), L, mapping="discrete_limit")
    assert c.L_star == 2 * (3 + 3 + Fraction(3, 4)) / 4
    c = continuum_params(MaterialParams(h_star=0.5), CoefficientFields(lam=ConstantField(3.0)),
                         mapping="discrete_limit")
    assert c.lambda_star == 24


def test_unknown_mapping_rejected():
    with pytest.raises(ValueError):
        continuum_params(MaterialParams(), mapping="guess")


def test_varying_coefficients_become_evaluators():
    bump = GaussianBump(1.0, (1.0, 1.0), 0.5, offset=0.2)
    c = continuum_params(MaterialParams(h_star=2.0),
                         CoefficientFields(L=(bump, ConstantField(0.1), ConstantField(0.0))))
    pts = np.array([[1.0, 1.0], [3.0, 0.0]])
    expect = (bump(pts) + 0.1) / 4.0
    np.testing.assert_allclose(c.sample(pts)["L_star"], expect, rtol=1e-15)


def test_discrete_limit_mapping_matches_lattice_local_field():
    # on a uniform state every difference vanishes, leaving only local terms
    p = MaterialParams(J1=1.0, J2=0.3, J3=-0.2, K=0.4, mu=0.7, h_star=0.8)
    coeffs = CoefficientFields(lam=ConstantField(0.3),
                               L=(ConstantField(0.2), ConstantField(0.1), ConstantField(0.05)),
                               B=ConstantField((0.1, 0.2, 0.9)))
    m0 = np.array([0.6, 0.0, 0.8])
    lat = build_lattice(3, 4, 0.5)
    lattice_b = effective_field_pde(lat, np.tile(m0, (lat.num_nodes, 1)), p, coeffs).values
    grid = GridSpinField(np.tile(m0, (4, 5, 1)), 0.3, 0.3)
    for mapping, match in (("discrete_limit", True), ("table", False)):
        cont_b = continuum_effective_field(grid, continuum_params(p, coeffs, mapping))
        same = np.allclose(cont_b[0, 0], lattice_b[0], rtol=1e-13)
        assert same is match


def test_uniform_state_has_no_exchange_field():
    grid = GridSpinField(np.tile([0.0, 0.6, 0.8], (6, 7, 1)), 0.2, 0.3)
    b = continuum_effective_field(grid, continuum_params(MaterialParams(J1=5.0)))
    np.testing.assert_allclose(b, 0.0, atol=1e-12)


@pytest.mark.parametrize("n", [1, 3, 7])
def test_laplacian_symbol_on_plane_waves(n):
    nx, ny, dx, dy = 32, 20, 0.1, 0.17
    x = np.arange(nx)[:, None] * dx * np.ones((1, ny))
    y = np.arange(ny)[None, :] * dy * np.ones((nx, 1))
    kx = 2 * np.pi * n / (nx * dx)
    ky = 2 * np.pi * 2 / (ny * dy)
    u = np.cos(kx * x + ky * y)
    sym = -(2 - 2 * np.cos(kx * dx)) / dx**2 - (2 - 2 * np.cos(ky * dy)) / dy**2
    np.testing.assert_allclose(grid_laplacian(u, dx, dy), sym * u, atol=1e-9)


def test_in_plane_spiral_is_stationary():
    nx, ny, dx = 24, 4, 0.2
    k = 2 * np.pi / (nx * dx)
    x = np.arange(nx)[:, None] * dx * np.ones((1, ny))
    m = np.stack([np.cos(k * x), np.sin(k * x), np.zeros_like(x)], axis=-1)
    ctx = ContinuumContext.build(GridSpinField(m, dx, 0.3), continuum_params(MaterialParams()))
    np.testing.assert_allclose(ctx.rhs(m), 0.0, atol=1e-12)


def test_zero_field_identity():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((5, 6, 3))
    m /= np.linalg.norm(m, axis=-1, keepdims=True)
    final, _ = continuum_integrate(GridSpinField(m, 0.1, 0.1), 0.5, 0.05,
                                   continuum_params(MaterialParams(J1=0.0)))
    np.testing.assert_allclose(final.values, m, atol=1e-15)


def test_macrospin():
    p = MaterialParams(J1=1.0, mu=1.0, alpha=0.2, h_star=0.5)
    b = 0.5
    cp = continuum_params(p, CoefficientFields(B=ConstantField((0.0, 0.0, b))))
    bt = float(cp.mu_star) * b
    theta0 = 1.9
    m = np.tile([np.sin(theta0), 0.0, np.cos(theta0)], (4, 4, 1))
    t_end = 1.5
    final, _ = continuum_integrate(GridSpinField(m, 0.1, 0.1), t_end, 1e-3, cp)
    expect = np.tanh(p.alpha * bt * t_end + np.arctanh(np.cos(theta0)))
    np.testing.assert_allclose(final.values[..., 2], expect, atol=1e-9)


def _tilt_grid(n, length=4.0):
    d = length / n
    blank = GridSpinField(np.zeros((n, n, 3)), d, d)
    P = blank.periods
    m = gaussian_tilt(blank.points().reshape(-1, 2), P, (2.0, 2.0), 0.6, 1.2)
    return blank.with_values(m.reshape(n, n, 3))


def test_unit_length_and_orthogonal_rate():
    grid = _tilt_grid(16)
    cp = continuum_params(MaterialParams(J1=1.0, alpha=0.3))
    ctx = ContinuumContext.build(grid, cp)
    r = ctx.rhs(grid.values)
    assert np.max(np.abs(np.sum(r * grid.values, axis=-1))) <= 1e-13
    dev = []
    continuum_integrate(grid, 0.2, 0.005, cp,
                        callback=lambda t, m: dev.append(np.abs(np.linalg.norm(m, axis=-1) - 1).max()))
    assert len(dev) == 40 and max(dev) <= 1e-13


def test_sample_times_returned():
    grid = _tilt_grid(8)
    cp = continuum_params(MaterialParams(J1=1.0, alpha=0.3))
    final, snaps = continuum_integrate(grid, 0.3, 0.04, cp, sample_times=[0.0, 0.1, 0.3])
    assert sorted(snaps) == [0.0, 0.1, 0.3]
    np.testing.assert_array_equal(snaps[0.0].values, grid.values)
    np.testing.assert_array_equal(snaps[0.3].values, final.values)


def test_spatial_self_convergence_second_order():
    cp = continuum_params(MaterialParams(J1=1.0, alpha=0.5))
    t_end = 0.2
    finals = []
    for n in (16, 32, 64):
        grid = _tilt_grid(n)
        dt = 0.1 * grid.dx**2 / float(cp.J_star)
        dt = t_end / np.ceil(t_end / dt)
        final, _ = continuum_integrate(grid, t_end, dt, cp)
        stride = n // 16
        finals.append(final.values[::stride, ::stride])
    e1 = np.abs(finals[0] - finals[1]).max()
    e2 = np.abs(finals[1] - finals[2]).max()
    assert np.log2(e1 / e2) >= 1.9


def test_argument_checks():
    grid = _tilt_grid(4)
    cp = continuum_params(MaterialParams())
    with pytest.raises(ValueError):
        continuum_integrate(grid, 1.0, 0.0, cp)
    with pytest.raises(ValueError):
        continuum_integrate(grid.with_values(2 * grid.values), 1.0, 0.1, cp)
    with pytest.raises(ValueError):
        continuum_integrate(grid, 1.0, 0.1, cp, sample_times=[2.0])
    with pytest.raises(ValueError):
        GridSpinField(np.zeros((3, 3)), 0.1, 0.1)
