"""Initial spin textures.

Closed-form textures are functions of position and can be sampled on a
lattice or on a continuum grid alike.  ``random_smooth`` needs neighbour
tables and exists only on lattices.  Every generator returns unit vectors.
"""

from __future__ import annotations

import numpy as np

from ..coefficients import periodic_gaussian
from ..lattice import HexLattice

CLOSED_FORM = ("uniform", "gaussian_tilt", "meron_like")


def _normalise(m: np.ndarray) -> np.ndarray:
    return m / np.linalg.norm(m, axis=-1, keepdims=True)


def _min_image(delta: np.ndarray, periods: np.ndarray) -> np.ndarray:
    P = np.asarray(periods, dtype=float)
    frac = delta @ np.linalg.inv(P)
    frac -= np.round(frac)
    return frac @ P


def uniform(points: np.ndarray, direction) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    return np.tile(d / np.linalg.norm(d), (len(points), 1))


def gaussian_tilt(points, periods, center, width, amplitude=1.0, axis=(1.0, 0.0, 0.0)) -> np.ndarray:
    """Tilt from ``e_z`` towards the in-plane part of ``axis`` by ``amplitude * g(x)``.

    ``g`` is a unit-height Gaussian summed over periodic images.
    """
    g, _, _ = periodic_gaussian(points, center, width, periods)
    theta = amplitude * g
    a = np.array([axis[0], axis[1], 0.0], dtype=float)
    a /= np.linalg.norm(a)
    m = np.sin(theta)[:, None] * a + np.cos(theta)[:, None] * np.array([0.0, 0.0, 1.0])
    return _normalise(m)


def meron_like(points, periods, center, radius, polarity=1, vorticity=1, phase=0.0) -> np.ndarray:
    """Vortex with an out-of-plane core and an in-plane far field.

    The polar angle grows as ``(pi / 2) min(r / radius, 1)`` so the core is
    ``polarity * e_z`` and spins lie in the plane beyond ``radius``.
    """
    d = _min_image(np.asarray(points, dtype=float) - np.asarray(center, dtype=float), periods)
    r = np.hypot(d[:, 0], d[:, 1])
    phi = vorticity * np.arctan2(d[:, 1], d[:, 0]) + phase
    theta = 0.5 * np.pi * np.minimum(r / radius, 1.0)
    m = np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), polarity * np.cos(theta)],
        axis=1,
    )
    return _normalise(m)


def random_smooth(lat: HexLattice, seed: int, smoothing_passes: int = 3) -> np.ndarray:
    """Gaussian noise averaged over first neighbours ``smoothing_passes`` times."""
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((lat.num_nodes, 3))
    nb = lat.neighbors[1]
    for _ in range(smoothing_passes):
        m = _normalise(m + m[nb].sum(axis=1))
    return _normalise(m)


def sample_texture(spec: dict, points: np.ndarray, periods: np.ndarray) -> np.ndarray:
    """Evaluate a closed-form texture spec at ``(M, 2)`` points."""
    kind = spec["kind"]
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if kind == "uniform":
        return uniform(pts, spec["direction"])
    if kind == "gaussian_tilt":
        return gaussian_tilt(pts, periods, spec["center"], spec["width"],
                             spec.get("amplitude", 1.0), spec.get("axis", (1.0, 0.0, 0.0)))
    if kind == "meron_like":
        return meron_like(pts, periods, spec["center"], spec["radius"], spec.get("polarity", 1),
                          spec.get("vorticity", 1), spec.get("phase", 0.0))
    raise ValueError(f"texture {kind!r} has no closed form; choose from {CLOSED_FORM}")


def initial_field(spec: dict, lat: HexLattice) -> np.ndarray:
    """Unit spin field on ``lat`` from an initial-condition spec."""
    if spec["kind"] == "random_smooth":
        return random_smooth(lat, spec["seed"], spec.get("smoothing_passes", 3))
    return sample_texture(spec, lat.positions, lat.periods())
