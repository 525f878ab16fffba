"""Periodic honeycomb lattice with first, second and third neighbour tables.

Nodes live on two triangular sublattices.  Sublattice ``A`` (``kappa = +1``)
has its first neighbours arranged as an upright triangle, sublattice ``B``
(``kappa = -1``) as an inverted one.  Flat node indices follow

    index = sub * n1 * n2 + cell2 * n1 + cell1

and every neighbour table is an ``(N, N_k)`` integer array whose column
``j - 1`` holds the ``j``-th neighbour in layer ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SQRT3 = np.sqrt(3.0)

SUBLATTICE_A = 0
SUBLATTICE_B = 1

#: Number of neighbours per layer.
N_NEIGHBORS = {1: 3, 2: 6, 3: 3}
#: Neighbour distance in units of the bond length.
DISTANCE = {1: 1.0, 2: SQRT3, 3: 2.0}
#: Laplacian normalisation.
LAPLACE_NORM = {1: 0.75, 2: 4.5, 3: 3.0}
#: Gradient scaling.
GRAD_SCALE = {1: np.sqrt(6.0) / 3.0, 2: SQRT3 / 3.0, 3: np.sqrt(6.0) / 3.0}

# second-layer directions, nu^{j+3} = -nu^j
NU = np.array(
    [
        [-0.5, SQRT3 / 2.0],
        [-1.0, 0.0],
        [-0.5, -SQRT3 / 2.0],
        [0.5, -SQRT3 / 2.0],
        [1.0, 0.0],
        [0.5, SQRT3 / 2.0],
    ]
)

_FIRST_A = np.array([[0.0, 1.0], [-SQRT3 / 2.0, -0.5], [SQRT3 / 2.0, -0.5]])


def canonical_offsets(k: int, sub: int, h: float = 1.0) -> np.ndarray:
    """Offset vectors ``x^{k,j} - x`` for a node on sublattice ``sub``.

    Returns an ``(N_k, 2)`` array ordered by ``j``.
    """
    sign = 1.0 if sub == SUBLATTICE_A else -1.0
    if k == 1:
        return sign * h * _FIRST_A
    if k == 2:
        return sign * SQRT3 * h * NU
    if k == 3:
        return -2.0 * sign * h * _FIRST_A
    raise ValueError(f"layer k must be 1, 2 or 3, got {k!r}")


def reverse_direction(k: int, j: int) -> int:
    """Direction index of the reverse bond (1-based)."""
    if k == 2:
        return (j + 2) % 6 + 1
    return j


class NodeId(NamedTuple):
    cell1: int
    cell2: int
    sub: int


@dataclass(frozen=True, eq=False)
class HexLattice:
    """Immutable periodic honeycomb supercell of ``n1 x n2`` Bravais cells."""

    n1: int
    n2: int
    h: float
    positions: np.ndarray = field(repr=False)
    sublattice: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    neighbors: dict = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return 2 * self.n1 * self.n2

    @property
    def bravais1(self) -> np.ndarray:
        return np.array([SQRT3 * self.h, 0.0])

    @property
    def bravais2(self) -> np.ndarray:
        return np.array([SQRT3 * self.h / 2.0, 1.5 * self.h])

    @property
    def basis_offset(self) -> np.ndarray:
        return np.array([0.0, self.h])

    @property
    def cell_area(self) -> float:
        return 3.0 * SQRT3 / 4.0 * self.h**2

    @property
    def area(self) -> float:
        return self.num_nodes * self.cell_area

    @property
    def is_rectangular(self) -> bool:
        """True when the torus is generated by axis-aligned periods."""
        return self.n2 % (2 * self.n1) == 0

    def periods(self) -> np.ndarray:
        """Rows are two generators of the periodicity lattice.

        Axis-aligned generators are returned when they exist.
        """
        if self.is_rectangular:
            return np.array(
                [[self.n1 * SQRT3 * self.h, 0.0], [0.0, 1.5 * self.n2 * self.h]]
            )
        return np.array([self.n1 * self.bravais1, self.n2 * self.bravais2])

    def index(self, cell1: int, cell2: int, sub: int) -> int:
        return sub * self.n1 * self.n2 + (cell2 % self.n2) * self.n1 + cell1 % self.n1

    def node(self, index: int) -> NodeId:
        sub, rest = divmod(int(index), self.n1 * self.n2)
        cell2, cell1 = divmod(rest, self.n1)
        return NodeId(cell1, cell2, sub)

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.arange(self.num_nodes)
        rest = idx % (self.n1 * self.n2)
        return rest % self.n1, rest // self.n1

    def neighbor(self, index: int, k: int, j: int) -> int:
        _check_kj(k, j)
        return int(self.neighbors[k][index, j - 1])

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Map points into the fundamental parallelogram spanned by ``periods``."""
        P = self.periods()
        frac = np.asarray(points, dtype=float) @ np.linalg.inv(P)
        frac -= np.floor(frac)
        return frac @ P

    def min_image(self, delta: np.ndarray) -> np.ndarray:
        """Shortest periodic representative of displacement vectors."""
        P = self.periods()
        delta = np.asarray(delta, dtype=float)
        frac = delta @ np.linalg.inv(P)
        frac -= np.round(frac)
        base = frac @ P
        best = base.copy()
        best_d = np.einsum("...i,...i->...", base, base)
        for a in (-1, 0, 1):
            for b in (-1, 0, 1):
                cand = base + a * P[0] + b * P[1]
                d = np.einsum("...i,...i->...", cand, cand)
                better = d < best_d - 1e-14 * self.h**2
                best = np.where(better[..., None], cand, best)
                best_d = np.where(better, d, best_d)
        return best

    def with_neighbors(self, neighbors: dict) -> "HexLattice":
        """Copy sharing geometry but using another neighbour table.

        Used by the verification suite to build a corrupted negative control.
        """
        return HexLattice(
            self.n1, self.n2, self.h, self.positions, self.sublattice, self.kappa,
            {k: np.array(v, copy=True) for k, v in neighbors.items()},
        )


def _check_kj(k: int, j: int) -> None:
    if k not in N_NEIGHBORS:
        raise ValueError(f"layer k must be 1, 2 or 3, got {k!r}")
    if not 1 <= j <= N_NEIGHBORS[k]:
        raise ValueError(f"direction j must lie in 1..{N_NEIGHBORS[k]} for k={k}, got {j!r}")


def build_lattice(n1: int, n2: int, h: float) -> HexLattice:
    """Construct the periodic lattice and its neighbour tables.

    Neighbours are found by solving ``offset = dc1*a1 + dc2*a2 + dsub*(0, h)``
    in integers for every canonical offset and wrapping the cell indices.
    """
    if int(n1) != n1 or int(n2) != n2:
        raise ValueError("n1 and n2 must be integers")
    n1, n2 = int(n1), int(n2)
    if n1 < 2 or n2 < 3:
        raise ValueError(f"need n1 >= 2 and n2 >= 3, got n1={n1}, n2={n2}")
    if not (np.isfinite(h) and h > 0):
        raise ValueError(f"bond length h must be positive, got {h!r}")
    h = float(h)

    n_cells = n1 * n2
    idx = np.arange(2 * n_cells)
    sub = idx // n_cells
    rest = idx % n_cells
    c1 = rest % n1
    c2 = rest // n1

    a1 = np.array([SQRT3 * h, 0.0])
    a2 = np.array([SQRT3 * h / 2.0, 1.5 * h])
    positions = np.outer(c1, a1) + np.outer(c2, a2)
    positions[:, 1] += sub * h
    kappa = np.where(sub == SUBLATTICE_A, 1, -1)

    basis_inv = np.linalg.inv(np.column_stack([a1, a2]))
    neighbors = {}
    for k, nk in N_NEIGHBORS.items():
        table = np.empty((2 * n_cells, nk), dtype=np.intp)
        for s in (SUBLATTICE_A, SUBLATTICE_B):
            offs = canonical_offsets(k, s, h)
            s_new = s if k == 2 else 1 - s
            shift = offs - (s_new - s) * np.array([0.0, h])
            dc = np.rint(shift @ basis_inv.T).astype(int)
            mask = sub == s
            for j in range(nk):
                nc1 = (c1[mask] + dc[j, 0]) % n1
                nc2 = (c2[mask] + dc[j, 1]) % n2
                table[mask, j] = s_new * n_cells + nc2 * n1 + nc1
        table.setflags(write=False)
        neighbors[k] = table

    for arr in (positions, sub, kappa):
        arr.setflags(write=False)
    return HexLattice(n1, n2, h, positions, sub, kappa, neighbors)


def kappa(lat: HexLattice, node: int | NodeId) -> int:
    """Sublattice sign: +1 on ``A``, -1 on ``B``."""
    if isinstance(node, tuple):
        return 1 if node.sub == SUBLATTICE_A else -1
    return int(lat.kappa[node])
