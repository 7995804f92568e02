"""Gas model, entropy variables, Euler/viscous fluxes, and coefficient matrices.

Convention: conserved state q = [rho, rho u1, rho u2, rho u3, rho E] with
specific thermodynamic entropy

    s = R/(gamma-1) log(T/T_ref) - R log(rho/rho_ref),

entropy function S = -rho s, and entropy variables w = dS/dq,

    w = [R + c_v - s - |u|^2/(2T),  u/T,  -1/T].

The mathematical entropy flux is F_m = S u_m and the flux potential
psi_m = w . f_m - F_m reduces to R rho u_m (independent of the reference
state).  These closed forms are certified against finite-difference oracles
in the test suite rather than trusted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import numpy_backend as _npk
from .kernels.common import NPRIM


@dataclass(frozen=True)
class GasModel:
    """Calorically perfect gas with constant dynamic viscosity."""

    gamma: float = 1.4
    rgas: float = 1.0
    prandtl: float = 0.72
    mu: float = 0.0
    t_ref: float = 1.0
    rho_ref: float = 1.0

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if self.rgas <= 0.0 or self.prandtl <= 0.0:
            raise ValueError("gas constant and Prandtl number must be positive")

    @property
    def cv(self) -> float:
        return self.rgas / (self.gamma - 1.0)

    @property
    def cp(self) -> float:
        return self.gamma * self.rgas / (self.gamma - 1.0)

    @property
    def conductivity(self) -> float:
        return self.mu * self.cp / self.prandtl

    @property
    def sref(self) -> float:
        """Additive entropy offset fixed by the reference state."""
        return self.cv * np.log(self.t_ref) - self.rgas * np.log(self.rho_ref)


class AdmissibilityError(ValueError):
    """Raised when a state leaves the rho > 0, T > 0 admissible set."""


def conserved(rho, u, T, gas: GasModel) -> np.ndarray:
    """Conserved rows from primitive fields (broadcasting)."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    T = np.asarray(T, dtype=float)
    out = np.empty(np.broadcast_shapes(rho.shape, T.shape, u.shape[:-1]) + (5,))
    out[..., 0] = rho
    out[..., 1:4] = rho[..., None] * u
    k = 0.5 * np.einsum("...i,...i->...", u, u)
    out[..., 4] = rho * (gas.cv * T + k)
    return out


def primitive(q: np.ndarray, gas: GasModel, check: bool = True):
    """(rho, u, T, p) from conserved rows; validates admissibility."""
    rho = q[..., 0]
    u = q[..., 1:4] / rho[..., None]
    k = 0.5 * np.einsum("...i,...i->...", u, u)
    T = (q[..., 4] / rho - k) / gas.cv
    if check and (np.any(rho <= 0.0) or np.any(T <= 0.0) or not np.all(np.isfinite(T))):
        raise AdmissibilityError("state outside the admissible set (rho>0, T>0)")
    return rho, u, T, rho * gas.rgas * T


def specific_entropy(q: np.ndarray, gas: GasModel) -> np.ndarray:
    rho, _, T, _ = primitive(q, gas)
    return (gas.rgas / (gas.gamma - 1.0) * np.log(T / gas.t_ref)
            - gas.rgas * np.log(rho / gas.rho_ref))


def entropy_and_vars(q: np.ndarray, gas: GasModel):
    """Entropy function S = -rho s and entropy variables w = dS/dq."""
    rho, u, T, _ = primitive(q, gas)
    s = specific_entropy(q, gas)
    k = 0.5 * np.einsum("...i,...i->...", u, u)
    w = np.empty_like(q)
    w[..., 0] = gas.rgas + gas.cv - s - k / T
    w[..., 1:4] = u / T[..., None]
    w[..., 4] = -1.0 / T
    return -rho * s, w


def conserved_from_entropy_vars(w: np.ndarray, gas: GasModel) -> np.ndarray:
    """Invert the entropy-variable map (used by round-trip tests)."""
    T = -1.0 / w[..., 4]
    u = w[..., 1:4] * T[..., None]
    k = 0.5 * np.einsum("...i,...i->...", u, u)
    s = gas.rgas + gas.cv - k / T - w[..., 0]
    lnrho = ((s + gas.sref - gas.cv * np.log(T)) / -gas.rgas)
    return conserved(np.exp(lnrho), u, T, gas)


def euler_flux(q: np.ndarray, direction: int, gas: GasModel) -> np.ndarray:
    """Inviscid flux in Cartesian direction m (1-based)."""
    rho, u, T, p = primitive(q, gas)
    m = direction - 1
    um = u[..., m]
    out = np.empty_like(q)
    out[..., 0] = rho * um
    out[..., 1:4] = rho[..., None] * u * um[..., None]
    out[..., 1 + m] += p
    H = gas.cp * T + np.einsum("...i,...i->...", u, u) * 0.5
    out[..., 4] = rho * um * H
    return out


def entropy_flux_and_potential(q: np.ndarray, direction: int, gas: GasModel):
    """Entropy flux F_m = S u_m and flux potential psi_m = w.f_m - F_m."""
    rho, u, T, _ = primitive(q, gas)
    S, w = entropy_and_vars(q, gas)
    Fm = S * u[..., direction - 1]
    f = euler_flux(q, direction, gas)
    psi = np.einsum("...v,...v->...", w, f) - Fm
    return Fm, psi


def ec_flux(qL: np.ndarray, qR: np.ndarray, direction: int, gas: GasModel) -> np.ndarray:
    """Entropy-consistent two-point flux (log-mean construction)."""
    pl = _npk.prim_rows_from_conserved(qL, gas.gamma, gas.rgas)
    pr = _npk.prim_rows_from_conserved(qR, gas.gamma, gas.rgas)
    lam = np.zeros(pl.shape[:-1] + (3,))
    lam[..., direction - 1] = 1.0
    return _npk._ec_flux(pl, pr, lam, gas.gamma)


def viscous_flux(q: np.ndarray, grad_w: np.ndarray, gas: GasModel) -> np.ndarray:
    """Cartesian viscous fluxes FV[..., m, :] from entropy-variable gradients.

    grad_w[..., j, c] = d w_c / d x_j.
    """
    rho, u, T, _ = primitive(q, gas)
    return _npk.visc_flux_cart(rho, u, T, gas.mu, gas.conductivity, grad_w)


def viscous_coeff_matrices(q: np.ndarray, gas: GasModel) -> np.ndarray:
    """Coefficient blocks C[m, j] with FV_m = sum_j C_mj dw/dx_j.

    Returned as (..., 3, 3, 5, 5); assembled column-by-column through the
    flux evaluation so the matrices agree with `viscous_flux` exactly.
    """
    base = np.zeros(q.shape[:-1] + (3, 5))
    out = np.zeros(q.shape[:-1] + (3, 3, 5, 5))
    for j in range(3):
        for c in range(5):
            g = base.copy()
            g[..., j, c] = 1.0
            fv = viscous_flux(q, g, gas)
            out[..., :, j, :, c] = fv
    return out


def curvilinear_viscous_coeffs(q: np.ndarray, lam: np.ndarray, jac: np.ndarray,
                               gas: GasModel) -> np.ndarray:
    """Chat[l, a] = (1/J) sum_{m,j} lam_lm C_mj lam_aj, shape (..., 3, 3, 5, 5)."""
    cmj = viscous_coeff_matrices(q, gas)
    return np.einsum("...lm,...mjvc,...aj->...lavc", lam, cmj,
                     lam) / jac[..., None, None, None, None]


def entropy_jacobian(q: np.ndarray, gas: GasModel) -> np.ndarray:
    """Symmetric positive definite dq/dw, shape (..., 5, 5)."""
    out = np.empty(q.shape[:-1] + (5, 5))
    eye = np.eye(5)
    for c in range(5):
        out[..., :, c] = _npk.a0_apply(q, gas.gamma, gas.rgas,
                                       np.broadcast_to(eye[c], q.shape))
    return out


def max_wavespeed(q: np.ndarray, gas: GasModel, direction: np.ndarray) -> np.ndarray:
    """|u.n| + c|n| for metric-scaled directions n."""
    return _npk._max_wavespeed(q, gas.gamma, gas.rgas, direction)
