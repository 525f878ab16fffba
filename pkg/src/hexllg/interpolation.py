"""Step and piecewise-linear interpolation of lattice fields, plus L2 utilities.

Every node owns a trapezoidal cell.  For a node on sublattice ``A`` the cell
has vertices ``x``, ``x^{1,3}``, ``x^{2,6}`` and ``x^{1,1}``; a ``B`` node's
cell is the point reflection of that shape.  In local coordinates
``r = kappa (p - x)`` the cell is

    0 <= r_x <= sqrt(3) h / 2,   -r_x / sqrt(3) <= r_y <= h + r_x / sqrt(3).

The piecewise-linear interpolant is the bilinear (Q1) isoparametric
interpolant of the four vertex values on the reference square
``(xi, eta) in [0, 1]^2`` with

    r_x = (sqrt(3) / 2) h xi,   r_y = eta h (1 + xi) - h xi / 2,

so tensor Gauss-Legendre rules in ``(xi, eta)`` integrate products of
interpolants exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .coefficients import TabulatedGrid
from .lattice import SQRT3, HexLattice

# vertex order: A = node, B = x^{1,3}, C = x^{2,6}, D = x^{1,1}
_VERTEX_LINKS = ((1, 3), (2, 6), (1, 1))

_TOL = 1e-10


class DomainMismatchError(ValueError):
    """Two views do not cover the same periodic domain."""


def _reference_map(h: float, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Local cell coordinates of reference point ``(xi, eta)``."""
    rx = 0.5 * SQRT3 * h * xi
    ry = eta * h * (1.0 + xi) - 0.5 * h * xi
    return np.stack([rx, ry], axis=-1)


def _inverse_map(h: float, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xi = 2.0 * r[..., 0] / (SQRT3 * h)
    eta = (r[..., 1] + 0.5 * h * xi) / (h * (1.0 + xi))
    return xi, eta


def cell_vertices(lat: HexLattice) -> np.ndarray:
    """Vertex node indices ``(N, 4)`` in the order A, B, C, D."""
    nodes = np.arange(lat.num_nodes)
    cols = [nodes] + [lat.neighbors[k][:, j - 1] for k, j in _VERTEX_LINKS]
    return np.stack(cols, axis=1)


def cell_polygon(lat: HexLattice, node: int) -> np.ndarray:
    """Unwrapped vertex coordinates ``(4, 2)`` of one cell, in order A, B, C, D."""
    x = lat.positions[node]
    kap = lat.kappa[node]
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return x + kap * _reference_map(lat.h, ref[:, 0], ref[:, 1])


@dataclass(frozen=True)
class CellLocation:
    """Owning node and reference coordinates of a batch of points."""

    node: np.ndarray
    xi: np.ndarray
    eta: np.ndarray


def locate(lat: HexLattice, points: np.ndarray, chunk: int = 20000) -> CellLocation:
    """Find the cell containing each point, modulo periodicity.

    Candidates are the nodes of nearby Bravais cells.  Points on a shared
    boundary go to the candidate with the smallest flat index.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    h = lat.h
    a1, a2 = lat.bravais1, lat.bravais2
    basis_inv = np.linalg.inv(np.column_stack([a1, a2]))
    shifts = np.arange(-2, 3)
    d1, d2, sub = np.meshgrid(shifts, shifts, (0, 1), indexing="ij")
    d1, d2, sub = d1.ravel(), d2.ravel(), sub.ravel()
    n_cells = lat.n1 * lat.n2

    node = np.empty(len(pts), dtype=np.intp)
    xi = np.empty(len(pts))
    eta = np.empty(len(pts))
    for start in range(0, len(pts), chunk):
        p = pts[start:start + chunk]
        frac = p @ basis_inv.T
        base = np.floor(frac).astype(np.intp)
        c1 = base[:, :1] + d1[None]
        c2 = base[:, 1:] + d2[None]
        origin = c1[..., None] * a1 + c2[..., None] * a2
        origin[..., 1] += sub[None] * h
        kap = np.where(sub == 0, 1.0, -1.0)[None, :, None]
        r = kap * (p[:, None, :] - origin)
        rx, ry = r[..., 0], r[..., 1]
        inside = (
            (rx >= -_TOL * h)
            & (rx <= 0.5 * SQRT3 * h + _TOL * h)
            & (ry >= -rx / SQRT3 - _TOL * h)
            & (ry <= h + rx / SQRT3 + _TOL * h)
        )
        flat = sub[None] * n_cells + (c2 % lat.n2) * lat.n1 + (c1 % lat.n1)
        ranked = np.where(inside, flat, np.iinfo(np.intp).max)
        pick = np.argmin(ranked, axis=1)
        if not np.all(inside[np.arange(len(p)), pick]):
            raise RuntimeError("cell lookup failed; points outside every candidate cell")
        rows = np.arange(len(p))
        node[start:start + len(p)] = flat[rows, pick]
        x_loc, e_loc = _inverse_map(h, r[rows, pick])
        xi[start:start + len(p)] = np.clip(x_loc, 0.0, 1.0)
        eta[start:start + len(p)] = np.clip(e_loc, 0.0, 1.0)
    return CellLocation(node, xi, eta)


def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order < 1:
        raise ValueError(f"quadrature order must be at least 1, got {order!r}")
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _check_periods_compatible(pa: np.ndarray, pb: np.ndarray) -> None:
    coeff = pa @ np.linalg.inv(pb)
    rounded = np.rint(coeff)
    ok = np.allclose(coeff, rounded, atol=1e-9) and abs(abs(np.linalg.det(rounded)) - 1.0) < 1e-9
    if not ok:
        raise DomainMismatchError(
            f"periodic domains differ: periods {pa.tolist()} vs {pb.tolist()}"
        )


class _LatticeView:
    kind = "lattice"

    def __init__(self, lat: HexLattice, values):
        vals = np.asarray(values, dtype=float)
        if vals.shape[0] != lat.num_nodes:
            raise ValueError(
                f"field has {vals.shape[0]} entries but the lattice has {lat.num_nodes} nodes"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        self.lat = lat
        self.values = vals

    @property
    def periods(self) -> np.ndarray:
        return self.lat.periods()

    @property
    def num_cells(self) -> int:
        return self.lat.num_nodes

    def quadrature(self, order: int = 3):
        """Tensor Gauss points over every cell: ``(points, weights, location)``."""
        g, w = _gauss(order)
        gx, gy = np.meshgrid(g, g, indexing="ij")
        wx, wy = np.meshgrid(w, w, indexing="ij")
        gx, gy = gx.ravel(), gy.ravel()
        jac = 0.5 * SQRT3 * self.lat.h**2 * (1.0 + gx)
        q = len(gx)
        nodes = np.repeat(np.arange(self.lat.num_nodes), q)
        xi = np.tile(gx, self.lat.num_nodes)
        eta = np.tile(gy, self.lat.num_nodes)
        local = _reference_map(self.lat.h, xi, eta)
        pts = self.lat.positions[nodes] + self.lat.kappa[nodes][:, None] * local
        weights = np.tile((wx.ravel() * wy.ravel()) * jac, self.lat.num_nodes)
        return pts, weights, CellLocation(nodes, xi, eta)

    def __call__(self, points) -> np.ndarray:
        return self.at(locate(self.lat, points))

    def at(self, loc: CellLocation) -> np.ndarray:
        raise NotImplementedError


class StepView(_LatticeView):
    """Cellwise-constant interpolant: the node value on its whole cell."""

    kind = "step"

    def at(self, loc: CellLocation) -> np.ndarray:
        return self.values[loc.node]


class LinearView(_LatticeView):
    """Bilinear interpolant of the four cell-vertex values."""

    kind = "linear"

    @cached_property
    def _corners(self) -> np.ndarray:
        return self.values[cell_vertices(self.lat)]  # (N, 4, ...)

    def at(self, loc: CellLocation) -> np.ndarray:
        c = self._corners[loc.node]
        shape = (-1,) + (1,) * (c.ndim - 2)
        xi = loc.xi.reshape(shape)
        eta = loc.eta.reshape(shape)
        uA, uB, uC, uD = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
        return (
            uA
            + xi * (uB - uA)
            + eta * (uD - uA)
            + xi * eta * (uA - uB - uD + uC)
        )

    def gradient(self, points) -> np.ndarray:
        return self.gradient_at(locate(self.lat, points))

    def gradient_at(self, loc: CellLocation) -> np.ndarray:
        """Spatial gradient; last axis holds ``(d/dx, d/dy)``."""
        c = self._corners[loc.node]
        shape = (-1,) + (1,) * (c.ndim - 2)
        xi = loc.xi.reshape(shape)
        eta = loc.eta.reshape(shape)
        uA, uB, uC, uD = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
        mixed = uA - uB - uD + uC
        d_xi = (uB - uA) + eta * mixed
        d_eta = (uD - uA) + xi * mixed
        h = self.lat.h
        # inverse transpose of d(r_x, r_y)/d(xi, eta) = [[s, 0], [h(eta - 1/2), h(1 + xi)]]
        s = 0.5 * SQRT3 * h
        g_x = d_xi / s - (eta - 0.5) / (s * (1.0 + xi)) * d_eta
        g_y = d_eta / (h * (1.0 + xi))
        kap = self.lat.kappa[loc.node].reshape(shape)
        return kap[..., None] * np.stack([g_x, g_y], axis=-1)


def q_interp(lat: HexLattice, u) -> StepView:
    return StepView(lat, u)


def p_interp(lat: HexLattice, u) -> LinearView:
    return LinearView(lat, u)


@dataclass(frozen=True)
class GridField:
    """Samples on a periodic grid: ``values[i, j]`` at ``origin + i/nx P0 + j/ny P1``."""

    values: np.ndarray
    periods: np.ndarray
    origin: tuple = (0.0, 0.0)

    @property
    def shape(self) -> tuple:
        return self.values.shape[:2]

    def points(self) -> np.ndarray:
        return grid_points(self.periods, *self.shape, self.origin)


def grid_points(periods, nx: int, ny: int, origin=(0.0, 0.0)) -> np.ndarray:
    """Grid nodes ``(nx, ny, 2)`` spanning the periodic cell."""
    P = np.asarray(periods, dtype=float)
    i, j = np.meshgrid(np.arange(nx) / nx, np.arange(ny) / ny, indexing="ij")
    return np.asarray(origin, dtype=float) + i[..., None] * P[0] + j[..., None] * P[1]


class GridView:
    """Periodic bilinear interpolant of a rectangular :class:`GridField`."""

    kind = "grid"

    def __init__(self, field: GridField):
        P = np.asarray(field.periods, dtype=float)
        if abs(P[0, 1]) > 1e-12 * abs(P[0, 0]) or abs(P[1, 0]) > 1e-12 * abs(P[1, 1]):
            raise ValueError("GridView needs axis-aligned periods")
        self.field = field
        nx, ny = field.shape
        self.dx = P[0, 0] / nx
        self.dy = P[1, 1] / ny
        self._table = TabulatedGrid(tuple(field.origin), self.dx, self.dy, field.values)

    @property
    def periods(self) -> np.ndarray:
        return np.asarray(self.field.periods, dtype=float)

    @property
    def num_cells(self) -> int:
        nx, ny = self.field.shape
        return nx * ny

    def __call__(self, points) -> np.ndarray:
        return self._table(np.asarray(points, dtype=float).reshape(-1, 2))

    def quadrature(self, order: int = 3):
        g, w = _gauss(order)
        nx, ny = self.field.shape
        ox, oy = self.field.origin
        xs = (np.arange(nx)[:, None] + g[None]).ravel() * self.dx + ox
        ys = (np.arange(ny)[:, None] + g[None]).ravel() * self.dy + oy
        wx = np.tile(w, nx) * self.dx
        wy = np.tile(w, ny) * self.dy
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        W = np.outer(wx, wy)
        return np.stack([X.ravel(), Y.ravel()], axis=1), W.ravel(), None


def _evaluate(view, pts, loc, owner) -> np.ndarray:
    # views on the owner's lattice reuse its cell locations and skip the lookup
    if loc is not None and isinstance(view, _LatticeView) and view.lat is owner.lat:
        return view.at(loc)
    return view(pts)


def integrate_sq_difference(view_a, view_b, order: int = 3) -> float:
    """Quadrature of ``|A - B|^2`` over the cells of the finer of the two views."""
    _check_periods_compatible(np.asarray(view_a.periods), np.asarray(view_b.periods))
    owner = view_a if view_a.num_cells >= view_b.num_cells else view_b
    pts, w, loc = owner.quadrature(order)
    diff = _evaluate(view_a, pts, loc, owner) - _evaluate(view_b, pts, loc, owner)
    diff = diff.reshape(len(w), -1)
    return float(np.sum(w * np.sum(diff**2, axis=1)))


def l2_distance(view_a, view_b, order: int = 3) -> float:
    """L2 distance between two views of one periodic domain."""
    return float(np.sqrt(integrate_sq_difference(view_a, view_b, order)))


def l2_norm(view, order: int = 3) -> float:
    pts, w, loc = view.quadrature(order)
    vals = (view.at(loc) if loc is not None else view(pts)).reshape(len(w), -1)
    return float(np.sqrt(np.sum(w * np.sum(vals**2, axis=1))))


def gradient_l2_norm(view: LinearView, order: int = 6) -> float:
    """``||grad p_h u||_{L2}``; the integrand is rational per cell, so use a generous order."""
    pts, w, loc = view.quadrature(order)
    g = view.gradient_at(loc).reshape(len(w), -1)
    return float(np.sqrt(np.sum(w * np.sum(g**2, axis=1))))


def sample_to_grid(view, nx: int, ny: int, origin=(0.0, 0.0)) -> GridField:
    """Evaluate a view on an ``nx x ny`` grid spanning its periodic cell."""
    if nx < 2 or ny < 2:
        raise ValueError(f"grid needs nx, ny >= 2, got {nx} x {ny}")
    P = np.asarray(view.periods, dtype=float)
    pts = grid_points(P, nx, ny, origin)
    vals = np.asarray(view(pts.reshape(-1, 2)))
    return GridField(vals.reshape((nx, ny) + vals.shape[1:]), P, tuple(origin))
