"""Atomistic Landau-Lifshitz-Gilbert dynamics on a periodic honeycomb lattice.

Submodules: :mod:`lattice` (geometry and neighbour tables), :mod:`calculus`
(difference operators), :mod:`coefficients`, :mod:`model` (energies and
effective fields), :mod:`dynamics` (time stepping), :mod:`interpolation`
(step and piecewise-linear interpolants), :mod:`continuum` (reference
solver) and :mod:`harness` (configs, drivers, CLI).
"""

from .lattice import HexLattice, NodeId, build_lattice, kappa
from .model import MaterialParams, ModelContext

__version__ = "0.1.0"

__all__ = ["HexLattice", "NodeId", "build_lattice", "kappa", "MaterialParams", "ModelContext"]
