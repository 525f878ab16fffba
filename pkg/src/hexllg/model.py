"""Material parameters, the lattice Hamiltonian, effective fields and the LLG rate.

Two effective fields are provided.  :func:`effective_field_variational` is the
negative gradient of :func:`hamiltonian`; :func:`effective_field_pde` rewrites
it with difference quotients and drives the time integration.  On unit spins
``m x B_l / h_star**2 == m x B*_l`` holds term by term.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import calculus as dc
from .coefficients import CoefficientFields, SampledCoefficients, as_sampled
from .lattice import DISTANCE, GRAD_SCALE, LAPLACE_NORM, N_NEIGHBORS, HexLattice

LAYERS = (1, 2, 3)


class ConfigurationError(ValueError):
    """Raised for physically inadmissible parameter or coefficient choices."""


@dataclass(frozen=True)
class MaterialParams:
    J1: float = 1.0
    J2: float = 0.0
    J3: float = 0.0
    K: float = 0.0
    mu: float = 0.0
    alpha: float = 0.1
    h_star: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        errors = []
        if not self.alpha >= 0:
            errors.append(f"alpha must be non-negative, got {self.alpha!r}")
        if not self.h_star > 0:
            errors.append(f"h_star must be positive, got {self.h_star!r}")
        if not self.gamma > 0:
            errors.append(f"gamma must be positive, got {self.gamma!r}")
        if errors:
            raise ConfigurationError("; ".join(errors))

    @property
    def J(self) -> tuple:
        return (self.J1, self.J2, self.J3)

    @property
    def exchange_scale(self) -> float:
        """``(3/4) J1 + (9/2) J2 + 3 J3 + (3/2) |K|``; sets the explicit step size."""
        return 0.75 * self.J1 + 4.5 * self.J2 + 3.0 * self.J3 + 1.5 * abs(self.K)

    def physical_time(self, t_star: float) -> float:
        """Convert rescaled time back to ``t`` via ``t* = gamma h*^2 t / (1 + alpha^2)``."""
        return t_star * (1.0 + self.alpha**2) / (self.gamma * self.h_star**2)

    def with_(self, **changes) -> "MaterialParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class EffectiveField:
    values: np.ndarray
    kind: str
    parts: dict = field(repr=False)

    def part(self, name: str) -> np.ndarray:
        return self.parts[name]


def check_spins(lat: HexLattice, m: np.ndarray, tol: float | None = 1e-8) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (lat.num_nodes, 3):
        raise ValueError(f"spin field must have shape ({lat.num_nodes}, 3), got {m.shape}")
    if tol is not None:
        dev = np.max(np.abs(np.linalg.norm(m, axis=1) - 1.0))
        if not dev <= tol:
            raise ValueError(f"spins are not unit length (max deviation {dev:.3e} > {tol:.1e})")
    return m


def _rowdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", a, b)


def hamiltonian(lat, m, params: MaterialParams, coeffs=None, unit_tol: float | None = 1e-8) -> float:
    """Parameterised energy ``(h*/h)^2 (H_e + H_b) + H_a + H_z``.

    Pair sums run over ordered pairs.  The symmetric anisotropy exchange is
    ``-sum_{i,j} L_ij m_i^z m_j^z`` with ``L_ij`` the average of the endpoint
    values; its negative gradient is the ``L`` part of the variational field.
    """
    m = check_spins(lat, m, unit_tol)
    c = as_sampled(lat, coeffs)
    mz = m[:, 2]

    h_e = 0.0
    h_l = 0.0
    for k, J in zip(LAYERS, params.J):
        nb = lat.neighbors[k]
        if J:
            h_e -= 0.5 * J * np.sum(_rowdot(m[:, None, :], m[nb]))
        Lk = c.L[k - 1]
        if np.any(Lk):
            h_l -= np.sum(0.5 * (Lk[:, None] + Lk[nb]) * mz[:, None] * mz[nb])
    h_b = 0.0
    if params.K:
        h_b = -0.5 * params.K * np.sum(_rowdot(m[:, None, :], m[lat.neighbors[1]]) ** 2)
    h_a = -np.sum(c.lam * m[:, 0] ** 2) + h_l
    h_z = -params.mu * np.sum(m * c.B)
    return float((params.h_star / lat.h) ** 2 * (h_e + h_b) + h_a + h_z)


def effective_field_variational(lat, m, params: MaterialParams, coeffs=None,
                                unit_tol: float | None = 1e-8) -> EffectiveField:
    m = check_spins(lat, m, unit_tol)
    c = as_sampled(lat, coeffs)
    scale = params.h_star**2 / lat.h**2
    mz = m[:, 2]

    b1 = np.zeros_like(m)
    b3 = np.zeros_like(m)
    for k, J in zip(LAYERS, params.J):
        nb = lat.neighbors[k]
        if J:
            b1 += scale * J * m[nb].sum(axis=1)
        Lk = c.L[k - 1]
        b3[:, 2] += np.sum((Lk[:, None] + Lk[nb]) * mz[nb], axis=1)
    b3[:, 0] += 2.0 * c.lam * m[:, 0]

    nb1 = m[lat.neighbors[1]]
    b2 = 2.0 * scale * params.K * np.sum(_rowdot(m[:, None, :], nb1)[..., None] * nb1, axis=1)
    b4 = params.mu * c.B
    parts = {"B1": b1, "B2": b2, "B3": b3, "B4": b4}
    return EffectiveField(b1 + b2 + b3 + b4, "variational", parts)


def effective_field_pde(lat, m, params: MaterialParams, coeffs=None,
                        unit_tol: float | None = 1e-8) -> EffectiveField:
    """Difference-quotient form of the effective field, split into its five parts."""
    m = check_spins(lat, m, unit_tol)
    c = as_sampled(lat, coeffs)
    hs2 = params.h_star**2
    mz = m[:, 2]

    lap = {k: dc.laplacian(lat, m, k) for k in LAYERS}
    b1 = sum(LAPLACE_NORM[k] * J * lap[k] for k, J in zip(LAYERS, params.J))

    d1 = dc.diffs(lat, m, 1)
    b2 = 2.0 * LAPLACE_NORM[1] * params.K * lap[1] + 2.0 * params.K * np.sum(
        _rowdot(m[None], d1)[..., None] * d1, axis=0
    )

    b31 = np.zeros_like(m)
    b31[:, 0] = 2.0 / hs2 * c.lam * m[:, 0]
    b31[:, 2] = 2.0 / hs2 * sum(N_NEIGHBORS[k] * c.L[k - 1] for k in LAYERS) * mz

    b32 = np.zeros_like(m)
    for k in LAYERS:
        Lk = c.L[k - 1]
        if np.any(Lk):
            b32[:, 2] += LAPLACE_NORM[k] * (Lk * lap[k][:, 2] + dc.laplacian(lat, Lk * mz, k))
    b32 *= lat.h**2 / hs2

    b4 = params.mu / hs2 * c.B
    parts = {"B1": b1, "B2": b2, "B3_1": b31, "B3_2": b32, "B4": b4}
    return EffectiveField(b1 + b2 + b31 + b32 + b4, "pde_type", parts)


def _sqrt_nonneg(name: str, values: np.ndarray) -> np.ndarray:
    if np.any(values < 0):
        raise ConfigurationError(
            f"coefficient {name} is negative at {int(np.sum(values < 0))} node(s); "
            "the discrete energy needs its square root"
        )
    return np.sqrt(values)


def energy_star_terms(lat, m, params: MaterialParams, coeffs=None,
                      unit_tol: float | None = 1e-8) -> dict:
    """Individual contributions to the discrete energy ``H*_h``."""
    m = check_spins(lat, m, unit_tol)
    c = as_sampled(lat, coeffs)
    w = lat.cell_area
    hs2 = params.h_star**2
    mz = m[:, 2]

    grads = {k: dc.gradient(lat, m, k) for k in LAYERS}
    exchange = sum(
        J * DISTANCE[k] ** 2 / (4 * GRAD_SCALE[k] ** 2) * grads[k].norm_sq()
        for k, J in zip(LAYERS, params.J)
    )

    g1 = grads[1].components
    m_dot_grad = w * np.sum(_rowdot(m[None], g1) ** 2)
    biquadratic = params.K * DISTANCE[1] ** 2 / (2 * GRAD_SCALE[1] ** 2) * (
        grads[1].norm_sq() - m_dot_grad
    )

    aniso_grad = 0.0
    aniso_cross = 0.0
    aniso_local = 0.0
    for k in LAYERS:
        Lk = c.L[k - 1]
        root = _sqrt_nonneg(f"L{k}", Lk)
        gz = grads[k].components[..., 2]
        aniso_grad += DISTANCE[k] ** 2 / (2 * GRAD_SCALE[k] ** 2) * w * np.sum((root * gz) ** 2)
        dL = dc.diffs(lat, Lk, k)
        dz = dc.diffs(lat, mz, k)
        aniso_cross += DISTANCE[k] ** 2 / 2 * w * np.sum(dL * mz * dz)
        aniso_local += N_NEIGHBORS[k] * w * np.sum((root * mz) ** 2)
    lam_root = _sqrt_nonneg("lambda", c.lam)

    return {
        "exchange": float(exchange),
        "biquadratic": float(biquadratic),
        "anisotropy_gradient": float(lat.h**2 / hs2 * aniso_grad),
        "anisotropy_cross": float(lat.h**2 / hs2 * aniso_cross),
        "anisotropy_exchange": float(-aniso_local / hs2),
        "anisotropy_single_ion": float(-w * np.sum((lam_root * m[:, 0]) ** 2) / hs2),
        "zeeman": float(-params.mu / hs2 * dc.inner_product(lat, m, c.B)),
    }


def discrete_energy_star(lat, m, params: MaterialParams, coeffs=None,
                         unit_tol: float | None = 1e-8) -> float:
    """Discrete energy ``H*_h`` whose time derivative is ``-(dm/dt, B*_eff)_h``."""
    return float(sum(energy_star_terms(lat, m, params, coeffs, unit_tol).values()))


def llg_rhs_from_field(m: np.ndarray, b: np.ndarray, alpha: float) -> np.ndarray:
    mxb = np.cross(m, b)
    return -mxb - alpha * np.cross(m, mxb)


def llg_rhs(lat, m, params: MaterialParams, coeffs=None, unit_tol: float | None = 1e-8) -> np.ndarray:
    """Rescaled-time rate ``-m x B* - alpha m x (m x B*)``."""
    b = effective_field_pde(lat, m, params, coeffs, unit_tol).values
    return llg_rhs_from_field(np.asarray(m, dtype=float), b, params.alpha)


@dataclass(frozen=True)
class ModelContext:
    """Lattice, parameters and node-sampled coefficients bundled for integration."""

    lat: HexLattice
    params: MaterialParams
    coeffs: SampledCoefficients

    @classmethod
    def build(cls, lat: HexLattice, params: MaterialParams, coeffs=None) -> "ModelContext":
        if coeffs is None:
            coeffs = CoefficientFields()
        return cls(lat, params, as_sampled(lat, coeffs))

    def field(self, m: np.ndarray) -> np.ndarray:
        # stage values inside an implicit solve are not exactly unit length
        return effective_field_pde(self.lat, m, self.params, self.coeffs, unit_tol=None).values

    def rhs(self, m: np.ndarray) -> np.ndarray:
        return llg_rhs_from_field(m, self.field(m), self.params.alpha)

    def energy_star(self, m: np.ndarray) -> float:
        return discrete_energy_star(self.lat, m, self.params, self.coeffs, unit_tol=None)
