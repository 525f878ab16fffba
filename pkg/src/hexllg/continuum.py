"""Continuum LLG reference: coefficient mapping and a periodic finite-difference solver.

The continuum effective field is ``J* lap m + L* (m.e_z) e_z + lambda* (m.e_x) e_x
+ mu* B``.  Space is discretised on a periodic rectangular grid with the
5-point Laplacian (separate spacings in x and y); time is stepped by RK4
followed by renormalisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .coefficients import CoefficientFields, ConstantField, LinearCombination
from .dynamics import IntegrationError
from .lattice import N_NEIGHBORS
from .model import MaterialParams, llg_rhs_from_field

MAPPINGS = ("table", "discrete_limit")


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class ContinuumParams:
    """Continuum coefficients.

    ``L_star`` and ``lambda_star`` are :class:`~fractions.Fraction` when the
    atomistic field is constant and a point evaluator otherwise; ``B`` is
    always an evaluator.
    """

    J_star: Fraction
    L_star: object
    lambda_star: object
    mu_star: Fraction
    alpha: float
    B: Callable
    mapping: str = "table"

    def sample(self, points: np.ndarray) -> dict:
        """Evaluate the coefficient fields at ``(M, 2)`` points as floats."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)

        def scalar(v):
            if isinstance(v, Fraction):
                return np.full(len(pts), float(v))
            return np.asarray(v(pts), dtype=float).reshape(len(pts))

        return {
            "J_star": float(self.J_star),
            "L_star": scalar(self.L_star),
            "lambda_star": scalar(self.lambda_star),
            "mu_star": float(self.mu_star),
            "B": np.asarray(self.B(pts), dtype=float).reshape(len(pts), 3),
        }


def _scaled(weights_and_fields) -> object:
    """Exact sum when every field is constant, otherwise a pointwise evaluator."""
    if all(isinstance(f, ConstantField) and np.ndim(f.value) == 0 for _, f in weights_and_fields):
        return sum((w * _exact(f.value) for w, f in weights_and_fields), Fraction(0))
    return LinearCombination(tuple((float(w), f) for w, f in weights_and_fields))


def continuum_params(params: MaterialParams, coeffs: Optional[CoefficientFields] = None,
                     mapping: str = "table") -> ContinuumParams:
    """Map atomistic parameters to continuum coefficients.

    ``mapping="table"`` uses ``L* = (L1 + L2 + L3) / h*^2`` and
    ``lambda* = lambda / h*^2``.  ``mapping="discrete_limit"`` uses the
    ``h -> 0`` limit of the lattice field, ``L* = 2 (3 L1 + 6 L2 + 3 L3) / h*^2``
    and ``lambda* = 2 lambda / h*^2``.  ``J*`` and ``mu*`` agree in both.
    """
    if mapping not in MAPPINGS:
        raise ValueError(f"unknown mapping {mapping!r}; choose from {MAPPINGS}")
    if coeffs is None:
        coeffs = CoefficientFields()
    inv_h2 = 1 / _exact(params.h_star) ** 2
    J_star = (Fraction(3, 4) * _exact(params.J1) + Fraction(9, 2) * _exact(params.J2)
              + 3 * _exact(params.J3) + Fraction(3, 2) * _exact(params.K))
    if mapping == "table":
        L_w = (inv_h2, inv_h2, inv_h2)
        lam_w = inv_h2
    else:
        L_w = tuple(2 * N_NEIGHBORS[k] * inv_h2 for k in (1, 2, 3))
        lam_w = 2 * inv_h2
    return ContinuumParams(
        J_star=J_star,
        L_star=_scaled(list(zip(L_w, coeffs.L))),
        lambda_star=_scaled([(lam_w, coeffs.lam)]),
        mu_star=_exact(params.mu) * inv_h2,
        alpha=float(params.alpha),
        B=coeffs.B,
        mapping=mapping,
    )


@dataclass(frozen=True)
class GridSpinField:
    """Unit vectors ``values[i, j]`` at ``origin + (i dx, j dy)`` on a periodic grid."""

    values: np.ndarray
    dx: float
    dy: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3 or v.shape[2] != 3:
            raise ValueError(f"grid spin field must have shape (nx, ny, 3), got {v.shape}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid spacings must be positive")

    @property
    def shape(self) -> tuple:
        return self.values.shape[:2]

    @property
    def periods(self) -> np.ndarray:
        nx, ny = self.shape
        return np.array([[nx * self.dx, 0.0], [0.0, ny * self.dy]])

    def points(self) -> np.ndarray:
        nx, ny = self.shape
        i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        return np.stack([self.origin[0] + i * self.dx, self.origin[1] + j * self.dy], axis=-1)

    def with_values(self, values: np.ndarray) -> "GridSpinField":
        return GridSpinField(values, self.dx, self.dy, self.origin)

    def max_norm_deviation(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.values, axis=-1) - 1.0)))


def grid_laplacian(u: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Periodic 5-point Laplacian along the first two axes."""
    return (
        (np.roll(u, 1, axis=0) + np.roll(u, -1, axis=0) - 2.0 * u) / dx**2
        + (np.roll(u, 1, axis=1) + np.roll(u, -1, axis=1) - 2.0 * u) / dy**2
    )


@dataclass(frozen=True)
class ContinuumContext:
    """Coefficients sampled once on a fixed grid."""

    dx: float
    dy: float
    J_star: float
    L_star: np.ndarray
    lambda_star: np.ndarray
    mu_B: np.ndarray
    alpha: float

    @classmethod
    def build(cls, grid: GridSpinField, cparams: ContinuumParams) -> "ContinuumContext":
        nx, ny = grid.shape
        s = cparams.sample(grid.points().reshape(-1, 2))
        return cls(
            grid.dx, grid.dy, s["J_star"],
            s["L_star"].reshape(nx, ny), s["lambda_star"].reshape(nx, ny),
            (s["mu_star"] * s["B"]).reshape(nx, ny, 3), cparams.alpha,
        )

    def field(self, m: np.ndarray) -> np.ndarray:
        b = self.J_star * grid_laplacian(m, self.dx, self.dy) + self.mu_B
        b[..., 2] += self.L_star * m[..., 2]
        b[..., 0] += self.lambda_star * m[..., 0]
        return b

    def rhs(self, m: np.ndarray) -> np.ndarray:
        return llg_rhs_from_field(m, self.field(m), self.alpha)


def continuum_effective_field(grid_m: GridSpinField, cparams: ContinuumParams) -> np.ndarray:
    return ContinuumContext.build(grid_m, cparams).field(np.asarray(grid_m.values, dtype=float))


def _project(m: np.ndarray) -> np.ndarray:
    return m / np.linalg.norm(m, axis=-1, keepdims=True)


def continuum_integrate(initial: GridSpinField, t_end: float, dt: float, cparams: ContinuumParams,
                        sample_times=(), callback=None):
    """Projected RK4 from ``t = 0`` to ``t_end``.

    Returns the final field and a dict mapping each requested sample time to
    the field at that time.  Steps are shortened so sample times are hit
    exactly.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if not t_end >= 0:
        raise ValueError(f"t_end must be non-negative, got {t_end!r}")
    dev = initial.max_norm_deviation()
    if not dev <= 1e-9:
        raise ValueError(f"initial grid field is not unit length (deviation {dev:.2e})")
    ctx = ContinuumContext.build(initial, cparams)
    requested = {float(t) for t in sample_times}
    targets = sorted(requested | {float(t_end)})
    if targets[0] < 0 or targets[-1] > t_end:
        raise ValueError("sample times must lie in [0, t_end]")

    m = np.array(initial.values, dtype=float)
    t = 0.0
    step = 0
    samples = {}
    for target in targets:
        while t < target - 1e-12 * max(1.0, target):
            h = min(dt, target - t)
            k1 = ctx.rhs(m)
            k2 = ctx.rhs(m + 0.5 * h * k1)
            k3 = ctx.rhs(m + 0.5 * h * k2)
            k4 = ctx.rhs(m + h * k3)
            m = _project(m + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
            step += 1
            t = target if target - (t + h) <= 1e-12 * max(1.0, target) else t + h
            if not np.all(np.isfinite(m)):
                raise IntegrationError("non-finite values in continuum step", t, step)
            if callback is not None:
                callback(t, m)
        if target in requested:
            samples[target] = initial.with_values(m.copy())
    return initial.with_values(m), samples
