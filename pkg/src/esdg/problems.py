"""Verification problems: viscous shock, Taylor-Green vortex, free stream.

Viscous shock
-------------
With Pr = 3/4 the steady viscous shock admits an exact profile: the
normalized shock-frame velocity V(x) in (V_f, 1) satisfies

    alpha V V' = (V - 1)(V - V_f),
    V_f = ((gamma-1) M^2 + 2) / ((gamma+1) M^2),
    alpha = (2 gamma / (gamma+1)) mu / (Pr Mdot),

whose implicit solution

    x = (alpha/2) [ log|(V-1)(V-V_f)|
                    + (1+V_f)/(1-V_f) log|(V-1)/(V-V_f)| ]

is inverted by bisection to machine precision.  Mass flow and total
enthalpy are constant through the profile, which closes density and
temperature; a uniform translation with the configured shock speed gives
the time-dependent field.  Nondimensionalization: rho_inf = T_inf = 1,
R = 1 (so c_inf = sqrt(gamma)), U_inf = M c_inf, mu = rho_inf U_inf / Re.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import MeshGeometry
from .physics import GasModel, conserved


# ---------------------------------------------------------------------------
# viscous shock


@dataclass(frozen=True)
class ViscousShockParams:
    mach: float = 2.5
    reynolds: float = 10.0
    gamma: float = 1.4
    prandtl: float = 0.75
    shock_speed: float = 0.5

    @property
    def v_final(self) -> float:
        g, m2 = self.gamma, self.mach**2
        return ((g - 1.0) * m2 + 2.0) / ((g + 1.0) * m2)

    @property
    def u_upstream(self) -> float:
        return self.mach * np.sqrt(self.gamma)      # R = rho_inf = T_inf = 1

    @property
    def mass_flow(self) -> float:
        return self.u_upstream                      # rho_inf = 1

    @property
    def mu(self) -> float:
        return self.u_upstream / self.reynolds

    @property
    def alpha(self) -> float:
        return (2.0 * self.gamma / (self.gamma + 1.0)) * self.mu / (
            self.prandtl * self.mass_flow)

    def gas(self) -> GasModel:
        return GasModel(gamma=self.gamma, rgas=1.0, prandtl=self.prandtl,
                        mu=self.mu)

    def __post_init__(self):
        if not 0.0 < self.v_final < 1.0:
            raise ValueError("shock strength outside the admissible range")


def _shock_position(v: np.ndarray, params: ViscousShockParams) -> np.ndarray:
    """x(V) from the implicit profile relation."""
    vf = params.v_final
    t1 = np.log((1.0 - v) * (v - vf))
    t2 = (1.0 + vf) / (1.0 - vf) * np.log((1.0 - v) / (v - vf))
    return 0.5 * params.alpha * (t1 + t2)


def shock_profile(x: np.ndarray, params: ViscousShockParams) -> np.ndarray:
    """Invert the implicit relation for V(x) by bisection (machine precision)."""
    from .kernels import shock_profile_solve

    x = np.ascontiguousarray(np.asarray(x, dtype=float))
    return shock_profile_solve(x, params.v_final, params.alpha)


class ViscousShockProblem:
    """Exact time-dependent viscous shock (boundary provider included)."""

    def __init__(self, params: ViscousShockParams | None = None):
        self.params = params or ViscousShockParams()
        self._gas = self.params.gas()
        p = self.params
        self.h_total = self._gas.cp + 0.5 * p.u_upstream**2
        # frozen scalars for the hot boundary evaluations
        self._vf = p.v_final
        self._alpha = p.alpha
        self._ul = p.u_upstream

    @property
    def gas(self) -> GasModel:
        return self._gas

    def _profile(self, x, t):
        from .kernels import shock_profile_solve

        xi = np.ascontiguousarray(x[..., 0] - self.params.shock_speed * t)
        v = shock_profile_solve(xi, self._vf, self._alpha)
        usf = self._ul * v
        rho = 1.0 / v
        T = (self.h_total - 0.5 * usf**2) / self._gas.cp
        return v, usf, rho, T

    def state(self, x: np.ndarray, t: float) -> np.ndarray:
        v, usf, rho, T = self._profile(x, t)
        u = np.zeros(v.shape + (3,))
        u[..., 0] = usf + self.params.shock_speed
        return conserved(rho, u, T, self._gas)

    # boundary-provider interface
    def boundary_state(self, x, t):
        return self.state(x, t)

    def boundary_state_and_grad(self, x, t):
        """One profile inversion serving both the state and its gradients."""
        v, usf, rho, T = self._profile(x, t)
        u = np.zeros(v.shape + (3,))
        u[..., 0] = usf + self.params.shock_speed
        q = conserved(rho, u, T, self._gas)
        return q, self._grad_w_from_profile(v, usf, rho, T)

    def boundary_grad_w(self, x, t):
        """Exact Cartesian entropy-variable gradients (only d/dx_1 nonzero)."""
        return self._grad_w_from_profile(*self._profile(x, t))

    def _grad_w_from_profile(self, v, usf, rho, T):
        gas = self._gas
        dv = (v - 1.0) * (v - self._vf) / (self._alpha * v)
        du = self._ul * dv
        drho = -dv / v**2
        dT = -(self._ul**2) * v * dv / gas.cp
        ul = usf + self.params.shock_speed
        ds = gas.cv * dT / T - gas.rgas * drho / rho
        dk = ul * du
        k = 0.5 * ul**2
        out = np.zeros(v.shape + (3, 5))
        out[..., 0, 0] = -ds - dk / T + k * dT / T**2
        out[..., 0, 1] = du / T - ul * dT / T**2
        out[..., 0, 4] = dT / T**2
        return out

    def initial(self, x: np.ndarray) -> np.ndarray:
        return self.state(x, 0.0)


# ---------------------------------------------------------------------------
# Taylor-Green vortex


@dataclass(frozen=True)
class TaylorGreenParams:
    mach: float = 0.05
    reynolds: float = 1600.0
    gamma: float = 1.4
    prandtl: float = 0.71
    length: float = 1.0
    p0: float = 1.0
    t0: float = 1.0
    v0: float = 1.0

    @property
    def rho0(self) -> float:
        return self.gamma * self.mach**2

    @property
    def rgas(self) -> float:
        return self.p0 / (self.rho0 * self.t0)

    @property
    def mu(self) -> float:
        return self.rho0 * self.v0 * self.length / self.reynolds

    def gas(self) -> GasModel:
        return GasModel(gamma=self.gamma, rgas=self.rgas, prandtl=self.prandtl,
                        mu=self.mu, t_ref=self.t0, rho_ref=self.rho0)

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        ext = np.pi * self.length
        return -ext * np.ones(3), ext * np.ones(3)


class TaylorGreenProblem:
    """Periodic vortex initial condition (isothermal compressible setup)."""

    def __init__(self, params: TaylorGreenParams | None = None):
        self.params = params or TaylorGreenParams()
        self._gas = self.params.gas()

    @property
    def gas(self) -> GasModel:
        return self._gas

    def velocity(self, x: np.ndarray) -> np.ndarray:
        p = self.params
        L = p.length
        s1, c1 = np.sin(x[..., 0] / L), np.cos(x[..., 0] / L)
        s2, c2 = np.sin(x[..., 1] / L), np.cos(x[..., 1] / L)
        c3 = np.cos(x[..., 2] / L)
        u = np.zeros(x.shape)
        u[..., 0] = p.v0 * s1 * c2 * c3
        u[..., 1] = -p.v0 * c1 * s2 * c3
        return u

    def pressure(self, x: np.ndarray) -> np.ndarray:
        p = self.params
        L = p.length
        return p.p0 + p.rho0 * p.v0**2 / 16.0 * (
            (np.cos(2.0 * x[..., 0] / L) + np.cos(2.0 * x[..., 1] / L))
            * (np.cos(2.0 * x[..., 2] / L) + 2.0))

    def initial(self, x: np.ndarray) -> np.ndarray:
        p = self.params
        pres = self.pressure(x)
        rho = pres / (p.rgas * p.t0)        # isothermal initialization
        T = np.full_like(rho, p.t0)
        return conserved(rho, self.velocity(x), T, self._gas)


# ---------------------------------------------------------------------------
# free stream


class FreestreamProblem:
    """Constant admissible state (also usable as a boundary provider)."""

    def __init__(self, gas: GasModel, rho: float = 1.0,
                 velocity=(0.1, 0.2, -0.3), temperature: float = 1.0):
        self.gas = gas
        self.q0 = conserved(rho, np.asarray(velocity, dtype=float), temperature, gas)

    def initial(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.q0, x.shape[:-1] + (5,)).copy()

    def boundary_state(self, x, t):
        return self.initial(x)

    def boundary_grad_w(self, x, t):
        return np.zeros(x.shape[:-1] + (3, 5))


# ---------------------------------------------------------------------------
# volume-scaled error norms


def error_norms(geom: MeshGeometry, u_num: np.ndarray, u_exact: np.ndarray):
    """Volume-scaled discrete L1 / L2 / Linf norms of (u_num - u_exact).

    The L1 and L2 norms are scaled by the discrete domain volume
    Omega_c = sum 1^T M J 1; fields may have any trailing width (the error
    is normed componentwise-summed like a vector field magnitude when the
    width exceeds one).
    """
    wgt = geom.mass() * geom.jac
    diff = np.atleast_2d((u_num - u_exact).T).T
    if diff.ndim == 1:
        diff = diff[:, None]
    omega = float(np.sum(wgt))
    err_abs = np.abs(diff).sum(axis=1) if diff.shape[1] > 1 else np.abs(diff[:, 0])
    l1 = float(wgt @ err_abs) / omega
    l2 = float(np.sqrt((wgt @ (err_abs**2)) / omega))
    linf = float(np.max(err_abs))
    return l1, l2, linf
