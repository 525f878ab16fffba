"""Spatial coefficient fields: constant, Gaussian bump and tabulated grid.

An evaluator maps an ``(M, 2)`` array of points to ``(M,)`` scalars or, for
vector-valued fields, ``(M, 3)`` vectors.  Evaluators hold no mutable state
and can be called concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lattice import HexLattice


def _images(periods: Optional[np.ndarray], reach: int) -> np.ndarray:
    if periods is None:
        return np.zeros((1, 2))
    P = np.asarray(periods, dtype=float)
    r = np.arange(-reach, reach + 1)
    a, b = np.meshgrid(r, r, indexing="ij")
    return a.reshape(-1, 1) * P[0] + b.reshape(-1, 1) * P[1]


def periodic_gaussian(points, center, width, periods=None, reach: int = 2):
    """Gaussian ``exp(-|x-c|^2 / (2 w^2))`` summed over periodic images.

    Returns ``(value, gradient, laplacian)`` with shapes ``(M,)``, ``(M, 2)``
    and ``(M,)``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    base = pts - np.asarray(center, dtype=float)
    if periods is not None:
        # reduce to the nearest image so the truncated sum is centred on it
        P = np.asarray(periods, dtype=float)
        frac = base @ np.linalg.inv(P)
        base = (frac - np.round(frac)) @ P
    w2 = float(width) ** 2
    val = np.zeros(len(pts))
    grad = np.zeros((len(pts), 2))
    lap = np.zeros(len(pts))
    for shift in _images(periods, reach):
        d = base - shift
        r2 = np.einsum("ij,ij->i", d, d)
        g = np.exp(-r2 / (2.0 * w2))
        val += g
        grad += -d / w2 * g[:, None]
        lap += (r2 / w2**2 - 2.0 / w2) * g
    return val, grad, lap


@dataclass(frozen=True)
class ConstantField:
    value: float | tuple

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        v = np.asarray(self.value, dtype=float)
        return np.broadcast_to(v, (len(pts),) + v.shape).copy()

    def to_dict(self) -> dict:
        v = self.value
        return {"kind": "constant", "value": list(v) if np.ndim(v) else v}


@dataclass(frozen=True)
class GaussianBump:
    """``offset + amplitude * exp(-|x - center|^2 / (2 width^2))`` (times ``direction``)."""

    amplitude: float
    center: tuple
    width: float
    offset: float = 0.0
    direction: Optional[tuple] = None
    periods: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"gaussian width must be positive, got {self.width!r}")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        P = None if self.periods is None else np.asarray(self.periods, dtype=float)
        g, _, _ = periodic_gaussian(points, self.center, self.width, P)
        s = self.offset + self.amplitude * g
        if self.direction is None:
            return s
        return s[:, None] * np.asarray(self.direction, dtype=float)

    def to_dict(self) -> dict:
        out = {
            "kind": "gaussian",
            "amplitude": self.amplitude,
            "center": list(self.center),
            "width": self.width,
            "offset": self.offset,
        }
        if self.direction is not None:
            out["direction"] = list(self.direction)
        return out


@dataclass(frozen=True)
class TabulatedGrid:
    """Bilinear interpolation of ``values[i, j]`` sampled at ``origin + (i dx, j dy)``.

    The table wraps periodically with periods ``nx dx`` and ``ny dy``.
    """

    origin: tuple
    dx: float
    dy: float
    values: tuple

    def __call__(self, points: np.ndarray) -> np.ndarray:
        table = np.asarray(self.values, dtype=float)
        nx, ny = table.shape[:2]
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        fx = (pts[:, 0] - self.origin[0]) / self.dx
        fy = (pts[:, 1] - self.origin[1]) / self.dy
        i0 = np.floor(fx).astype(int)
        j0 = np.floor(fy).astype(int)
        tx = fx - i0
        ty = fy - j0
        i0 %= nx
        j0 %= ny
        i1 = (i0 + 1) % nx
        j1 = (j0 + 1) % ny
        if table.ndim == 3:
            tx = tx[:, None]
            ty = ty[:, None]
        return (
            (1 - tx) * (1 - ty) * table[i0, j0]
            + tx * (1 - ty) * table[i1, j0]
            + (1 - tx) * ty * table[i0, j1]
            + tx * ty * table[i1, j1]
        )

    def to_dict(self) -> dict:
        return {
            "kind": "grid",
            "origin": list(self.origin),
            "dx": self.dx,
            "dy": self.dy,
            "values": np.asarray(self.values).tolist(),
        }


@dataclass(frozen=True)
class LinearCombination:
    """Pointwise ``sum_i scale_i * field_i(x)``."""

    terms: tuple

    def __call__(self, points: np.ndarray) -> np.ndarray:
        out = None
        for scale, fn in self.terms:
            v = scale * fn(points)
            out = v if out is None else out + v
        return out


@dataclass(frozen=True)
class SampledCoefficients:
    """Coefficient fields evaluated at lattice nodes."""

    lam: np.ndarray  # (N,)
    L: np.ndarray  # (3, N)
    B: np.ndarray  # (N, 3)


@dataclass(frozen=True)
class CoefficientFields:
    lam: object = ConstantField(0.0)
    L: Sequence = (ConstantField(0.0), ConstantField(0.0), ConstantField(0.0))
    B: object = ConstantField((0.0, 0.0, 0.0))

    def sample(self, lat: HexLattice) -> SampledCoefficients:
        pts = lat.positions
        lam = np.asarray(self.lam(pts), dtype=float).reshape(lat.num_nodes)
        L = np.stack([np.asarray(f(pts), dtype=float).reshape(lat.num_nodes) for f in self.L])
        B = np.asarray(self.B(pts), dtype=float).reshape(lat.num_nodes, 3)
        return SampledCoefficients(lam, L, B)


def as_sampled(lat: HexLattice, coeffs) -> SampledCoefficients:
    if coeffs is None:
        coeffs = CoefficientFields()
    if isinstance(coeffs, SampledCoefficients):
        if coeffs.lam.shape[0] != lat.num_nodes:
            raise ValueError("sampled coefficients do not match the lattice")
        return coeffs
    return coeffs.sample(lat)
