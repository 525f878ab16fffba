"""Difference quotients, Laplacians and the weighted inner product on the lattice.

Every operator accepts a scalar field of shape ``(N,)`` or a vector field of
shape ``(N, c)`` and acts componentwise.  Layers ``k`` and directions ``j``
are 1-based to match the neighbour tables in :mod:`hexllg.lattice`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    DISTANCE,
    GRAD_SCALE,
    LAPLACE_NORM,
    N_NEIGHBORS,
    SUBLATTICE_A,
    HexLattice,
    _check_kj,
    reverse_direction,
)


def _check_field(lat: HexLattice, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[0] != lat.num_nodes:
        raise ValueError(
            f"field has {u.shape[0]} entries but the lattice has {lat.num_nodes} nodes"
        )
    return u


def _nodewise(lat: HexLattice, s: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Broadcast a per-node scalar against ``u``."""
    return s.reshape((-1,) + (1,) * (u.ndim - 1))


def _check_multi(k: int) -> None:
    if k not in (1, 3):
        raise ValueError(f"multi-step quotients are defined for k = 1, 3 only, got {k!r}")


def diff(lat: HexLattice, u: np.ndarray, k: int, j: int) -> np.ndarray:
    """One-step forward quotient ``(u(x^{k,j}) - u(x)) / (d_k h)``."""
    _check_kj(k, j)
    u = _check_field(lat, u)
    return (u[lat.neighbors[k][:, j - 1]] - u) / (DISTANCE[k] * lat.h)


def diffs(lat: HexLattice, u: np.ndarray, k: int) -> np.ndarray:
    """All one-step quotients of layer ``k`` stacked along axis 0."""
    if k not in N_NEIGHBORS:
        raise ValueError(f"layer k must be 1, 2 or 3, got {k!r}")
    u = _check_field(lat, u)
    nb = lat.neighbors[k].T
    return (u[nb] - u[None]) / (DISTANCE[k] * lat.h)


def diff_backward(lat: HexLattice, u: np.ndarray, k: int, j: int) -> np.ndarray:
    _check_kj(k, j)
    return -diff(lat, u, k, reverse_direction(k, j))


def laplacian(lat: HexLattice, u: np.ndarray, k: int) -> np.ndarray:
    """Layer-``k`` Laplacian normalised by ``l_k h^2``."""
    if k not in N_NEIGHBORS:
        raise ValueError(f"layer k must be 1, 2 or 3, got {k!r}")
    u = _check_field(lat, u)
    nb = lat.neighbors[k]
    acc = u[nb[:, 0]].copy()
    for j in range(1, N_NEIGHBORS[k]):
        acc += u[nb[:, j]]
    acc -= N_NEIGHBORS[k] * u
    return acc / (LAPLACE_NORM[k] * lat.h**2)


def dx_multi(lat: HexLattice, u: np.ndarray, k: int) -> np.ndarray:
    """Two-step quotient; tends to ``+d/dx`` for ``k=1`` and ``-d/dx`` for ``k=3``."""
    _check_multi(k)
    kap = _nodewise(lat, lat.kappa, np.asarray(u))
    return (np.sqrt(3.0) / 3.0) * kap * (diff(lat, u, k, 3) - diff(lat, u, k, 2))


def dy_multi(lat: HexLattice, u: np.ndarray, k: int) -> np.ndarray:
    """Three-step quotient; tends to ``+d/dy`` for ``k=1`` and ``-d/dy`` for ``k=3``."""
    _check_multi(k)
    kap = _nodewise(lat, lat.kappa, np.asarray(u))
    d = diffs(lat, u, k)
    return kap * (2.0 * d[0] - d[1] - d[2]) / 3.0


def aux_diff(lat: HexLattice, u: np.ndarray, k: int, r: int) -> np.ndarray:
    _check_multi(k)
    if r not in (0, 1):
        raise ValueError(f"r must be 0 or 1, got {r!r}")
    d = diffs(lat, u, k)
    on_a = _nodewise(lat, lat.sublattice == SUBLATTICE_A, d[0])
    return np.where(on_a, (2.0 / 3.0) ** r * d[0], (1.0 / 3.0) ** r * (d[1] + d[2]))


def aux_diff_backward(lat: HexLattice, u: np.ndarray, k: int, r: int) -> np.ndarray:
    _check_multi(k)
    if r not in (0, 1):
        raise ValueError(f"r must be 0 or 1, got {r!r}")
    d = diffs(lat, u, k)
    on_a = _nodewise(lat, lat.sublattice == SUBLATTICE_A, d[0])
    return np.where(on_a, -(1.0 / 3.0) ** r * (d[1] + d[2]), -(2.0 / 3.0) ** r * d[0])


def inner_product(lat: HexLattice, u: np.ndarray, v: np.ndarray) -> float:
    """Weighted sum ``(3 sqrt(3) / 4) h^2 sum_x u(x) . v(x)``."""
    u = _check_field(lat, u)
    v = _check_field(lat, v)
    if u.shape != v.shape:
        raise ValueError(f"field shapes differ: {u.shape} vs {v.shape}")
    return float(lat.cell_area * np.sum(u * v))


def norm_l2(lat: HexLattice, u: np.ndarray) -> float:
    return float(np.sqrt(inner_product(lat, u, u)))


@dataclass(frozen=True)
class StackedGradient:
    """``g_k (D^{k,1} u, ..., D^{k,N_k} u)`` for one layer."""

    components: np.ndarray
    layer: int
    cell_area: float

    def norm_sq(self) -> float:
        return float(self.cell_area * np.sum(self.components**2))

    def dot(self, other: "StackedGradient") -> float:
        if self.layer != other.layer:
            raise ValueError("gradients from different layers")
        return float(self.cell_area * np.sum(self.components * other.components))


def gradient(lat: HexLattice, u: np.ndarray, k: int) -> StackedGradient:
    return StackedGradient(GRAD_SCALE[k] * diffs(lat, u, k), k, lat.cell_area)


def norm_h1(lat: HexLattice, u: np.ndarray) -> float:
    return float(np.sqrt(inner_product(lat, u, u) + gradient(lat, u, 1).norm_sq()))
