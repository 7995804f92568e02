"""Semi-discrete right-hand sides for the compressible flow and scalar problems.

Assembly layout
---------------
Volume terms are two-point flux differencing of the entropy-consistent flux
against the derivative operator, with the constraint-solved volume metrics
paired arithmetically along each tensor line.  Interface terms couple the
face trace of each element to every node of the partner face through the
norm-compatible interpolation weights; the metric of each node pair
arithmetically averages the two elements' own surface metrics.  Together
with the element-wise metric constraint this yields discrete entropy
conservation, element-wise conservation, and free-stream preservation on
arbitrarily perturbed nonconforming meshes (verified in the test suite, not
assumed).

Viscous terms follow the gradient/flux two-step form: entropy-variable
gradients with interface penalties, contravariant fluxes through the
analytic metrics, and the mirrored divergence penalties.  Interface-penalty
and entropy-variable Lax-Friedrichs dissipation reuse the same adjoint
interpolation structure, so their entropy contraction is non-positive by
construction.

Boundary faces tagged "exact" reuse the interface machinery against ghost
data from a supplied boundary provider (state, and optionally
entropy-variable gradients for the viscous coupling).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .geometry import MeshGeometry
from .kernels.common import NPRIM
from .physics import AdmissibilityError, GasModel, entropy_and_vars, viscous_flux


@dataclass
class SchemeConfig:
    """Discretization switches.

    mode "ec" is the entropy-conservative baseline: interface dissipation and
    interior penalty are forced off.  mode "es" enables both by default.
    """

    mode: str = "es"
    dissipation: float = 1.0
    ip: bool = True
    ip_coefficient: float = 1.0
    viscous: bool = True
    a: tuple = (1.0, 0.0, 0.0)      # scalar advection speed
    b: tuple = (0.0, 0.0, 0.0)      # scalar diffusion coefficients

    def __post_init__(self):
        if self.mode not in ("ec", "es"):
            raise ValueError("mode must be 'ec' or 'es'")
        if self.mode == "ec":
            self.dissipation = 0.0
            self.ip = False


@dataclass
class RhsBreakdown:
    """RHS split into named contributions (fixed accumulation order)."""

    inviscid_volume: np.ndarray
    inviscid_interface: np.ndarray
    viscous_volume: np.ndarray
    ldg_interface: np.ndarray
    ip: np.ndarray
    boundary_sat: np.ndarray
    total: np.ndarray
    gcl_certified: bool

    PARTS = ("inviscid_volume", "inviscid_interface", "viscous_volume",
             "ldg_interface", "ip", "boundary_sat")


class SolutionField:
    """Flat per-node storage of width-1 or width-5 fields over a mesh."""

    def __init__(self, geom: MeshGeometry, width: int, data: np.ndarray | None = None):
        self.geom = geom
        self.width = width
        self.data = np.zeros((geom.ndof, width)) if data is None else data

    @classmethod
    def from_function(cls, geom: MeshGeometry, width: int, fn):
        out = cls(geom, width)
        out.data[...] = np.asarray(fn(geom.coords)).reshape(geom.ndof, width)
        return out


def _pack_int(rows):
    return np.ascontiguousarray(np.stack(rows).astype(np.int64))


def _pack_f(rows):
    return np.ascontiguousarray(np.stack(rows).astype(np.float64))


class _FaceTables:
    """Grouped interface / boundary gather tables for the face kernels."""

    def __init__(self, geom: MeshGeometry):
        self.geom = geom
        iface: dict = {}
        bface: dict = {}
        for es in range(len(geom.elem_p)):
            po = int(geom.elem_p[es])
            base = int(geom.offsets[es])
            for hf in geom.faces[es]:
                gidx = base + hf.local_idx
                if hf.partner >= 0:
                    pf = geom.faces[hf.partner][2 * hf.axis + (1 - hf.side)]
                    pp = int(geom.elem_p[hf.partner])
                    rec = iface.setdefault((po, pp), dict(
                        own=[], par=[], lho=[], lhp=[], lvf=[], jfo=[], jfp=[],
                        sigma=[], lf=[]))
                    rec["own"].append(gidx)
                    rec["par"].append(int(geom.offsets[hf.partner]) + pf.local_idx)
                    rec["lho"].append(hf.lam_hat)
                    rec["lhp"].append(pf.lam_hat)
                    rec["lvf"].append(hf.lam_vol_face)
                    rec["jfo"].append(hf.jac_face)
                    rec["jfp"].append(pf.jac_face)
                    rec["sigma"].append(hf.sigma)
                    rec["lf"].append(hf.axis)
                elif hf.boundary is not None:
                    rec = bface.setdefault(po, dict(
                        own=[], lhat=[], lvf=[], jf=[], xyz=[], sigma=[], lf=[]))
                    rec["own"].append(gidx)
                    rec["lhat"].append(hf.lam_hat)
                    rec["lvf"].append(hf.lam_vol_face)
                    rec["jf"].append(hf.jac_face)
                    rec["xyz"].append(hf.coords_face)
                    rec["sigma"].append(hf.sigma)
                    rec["lf"].append(hf.axis)

        from .geometry import _interp_2d

        self.iface = []
        for (po, pp), rec in sorted(iface.items()):
            omega = 1.0 / geom.bank.get(po).weights[-1]
            self.iface.append(dict(
                po=po, pp=pp, omega=float(omega),
                Th=np.ascontiguousarray(_interp_2d(geom.bank, geom.interp, pp, po)),
                Thp=np.ascontiguousarray(_interp_2d(geom.bank, geom.interp, po, pp)),
                own=_pack_int(rec["own"]), par=_pack_int(rec["par"]),
                lho=_pack_f(rec["lho"]), lhp=_pack_f(rec["lhp"]),
                lvf=_pack_f(rec["lvf"]), jfo=_pack_f(rec["jfo"]),
                jfp=_pack_f(rec["jfp"]),
                sigma=np.array(rec["sigma"], dtype=np.float64),
                lf=np.array(rec["lf"], dtype=np.int64),
            ))
        self.bface = []
        for po, rec in sorted(bface.items()):
            omega = 1.0 / geom.bank.get(po).weights[-1]
            self.bface.append(dict(
                po=po, omega=float(omega),
                own=_pack_int(rec["own"]),
                lhat=_pack_f(rec["lhat"]), lvf=_pack_f(rec["lvf"]),
                jf=_pack_f(rec["jf"]), xyz=_pack_f(rec["xyz"]),
                sigma=np.array(rec["sigma"], dtype=np.float64),
                lf=np.array(rec["lf"], dtype=np.int64),
            ))


class NavierStokesRhs:
    """Entropy-stable semi-discretization of the compressible equations."""

    def __init__(self, geom: MeshGeometry, gas: GasModel, scheme: SchemeConfig,
                 boundary=None):
        self.geom = geom
        self.gas = gas
        self.scheme = scheme
        self.boundary = boundary
        self.tables = _FaceTables(geom)
        self.mass = geom.mass()
        self._prim = np.empty((geom.ndof, NPRIM))
        self._w = np.empty((geom.ndof, 5))
        if any(t["own"].size for t in self.tables.bface) and boundary is None:
            raise ValueError("mesh has tagged boundary faces but no provider given")

    # -- derived state ----------------------------------------------------

    def _derived(self, q):
        K.ns_state_derived(q, self.gas.gamma, self.gas.rgas, self.gas.sref,
                           self._prim, self._w)
        T = self._prim[:, 5]
        rho = self._prim[:, 0]
        if not (np.all(np.isfinite(T)) and np.all(T > 0.0) and np.all(rho > 0.0)):
            bad = int(np.argmin(np.where(np.isfinite(T), T, -np.inf)))
            es = int(np.searchsorted(self.geom.offsets, bad, side="right")) - 1
            raise AdmissibilityError(
                f"inadmissible state in element {es} (node {bad}): "
                f"rho={rho[bad]:.4e}, T={T[bad]:.4e}")
        return self._prim, self._w

    def _ghost(self, rec, t):
        """Boundary provider data for one boundary group."""
        nf, no = rec["own"].shape
        x = rec["xyz"].reshape(-1, 3)
        both = getattr(self.boundary, "boundary_state_and_grad", None)
        if both is not None:
            gq, ggrad = both(x, t)
            gq = np.asarray(gq, dtype=float).reshape(nf, no, 5)
        else:
            gq = np.asarray(self.boundary.boundary_state(x, t), dtype=float)
            gq = gq.reshape(nf, no, 5)
            ggrad = None
            grad = getattr(self.boundary, "boundary_grad_w", None)
            if grad is not None:
                ggrad = grad(x, t)
        from .kernels.numpy_backend import prim_rows_from_conserved

        gprim = prim_rows_from_conserved(gq, self.gas.gamma, self.gas.rgas)
        _, gw = entropy_and_vars(gq, self.gas)
        if ggrad is not None:
            ggrad = np.asarray(ggrad, dtype=float).reshape(nf, no, 3, 5)
        return gq, gprim, gw, ggrad

    def _ghost_visc(self, rec, gq, ggrad):
        """Ghost contravariant normal viscous flux from exact gradients."""
        nf, no = rec["own"].shape
        if ggrad is None:
            return np.zeros((nf, no, 5))
        fv = viscous_flux(gq, ggrad, self.gas)
        return np.einsum("fnm,fnmv->fnv", rec["lhat"], fv)

    # -- main assembly -----------------------------------------------------

    def rhs(self, t, q, breakdown: bool = False):
        geom = self.geom
        gas = self.gas
        sch = self.scheme
        prim, w = self._derived(q)
        parts = {name: np.zeros((geom.ndof, 5)) for name in RhsBreakdown.PARTS}

        for p, first, count in geom.groups:
            D = geom.bank.get(p).D
            K.ns_volume_group(D, int(geom.offsets[first]), count, p + 1, prim,
                              geom.lam_vol, gas.gamma, parts["inviscid_volume"])

        for rec in self.tables.iface:
            K.ns_face_ec_group(prim, rec["own"], rec["par"], rec["Th"],
                               rec["lho"], rec["lhp"], rec["lvf"], rec["sigma"],
                               rec["omega"], gas.gamma,
                               parts["inviscid_interface"])
            if sch.dissipation > 0.0:
                K.ns_face_diss_group(w, q, rec["own"], rec["par"], rec["Th"],
                                     rec["Thp"], rec["lho"], rec["lhp"],
                                     rec["omega"], gas.gamma, gas.rgas,
                                     sch.dissipation, rec["po"] == rec["pp"],
                                     parts["inviscid_interface"])

        ghosts = []
        for rec in self.tables.bface:
            gq, gprim, gw, ggrad = self._ghost(rec, t)
            ghosts.append((gq, gprim, gw, ggrad))
            K.ns_bface_ec_group(prim, rec["own"], rec["lhat"], rec["lvf"],
                                rec["sigma"], rec["omega"], gas.gamma, gprim,
                                parts["boundary_sat"])
            if sch.dissipation > 0.0:
                K.ns_bface_diss_group(w, q, rec["own"], rec["lhat"], rec["omega"],
                                      gas.gamma, gas.rgas, sch.dissipation,
                                      gq, gw, parts["boundary_sat"])

        if sch.viscous and gas.mu > 0.0:
            theta = self.ldg_gradients(t, q, w=w, ghosts=ghosts)
            g = np.empty((geom.ndof, 3, 5))
            K.ns_viscous_flux_all(prim, theta, geom.lam_an, geom.jac, gas.mu,
                                  gas.conductivity, g)
            tmp = np.empty((geom.ndof, 5))
            for p, first, count in geom.groups:
                D = geom.bank.get(p).D
                start = int(geom.offsets[first])
                for a in range(3):
                    K.line_derivative_group(D, start, count, p + 1,
                                            np.ascontiguousarray(g[:, a, :]),
                                            tmp, False, a)
                    sl = geom.group_slice(first, count)
                    parts["viscous_volume"][sl] += tmp[sl]
            for rec in self.tables.iface:
                K.gdiv_face_group(g, rec["own"], rec["par"], rec["Th"],
                                  rec["sigma"], rec["lf"], rec["omega"],
                                  parts["ldg_interface"])
                if sch.ip:
                    K.ns_face_ip_group(w, q, rec["own"], rec["par"], rec["Th"],
                                       rec["Thp"], rec["lho"], rec["lhp"],
                                       rec["jfo"], rec["jfp"], rec["omega"],
                                       gas.mu, gas.conductivity, gas.gamma,
                                       gas.rgas, sch.ip_coefficient,
                                       rec["po"] == rec["pp"], parts["ip"])
            for rec, (gq, gprim, gw, ggrad) in zip(self.tables.bface, ghosts):
                gvisc = self._ghost_visc(rec, gq, ggrad)
                K.gdiv_bface_group(g, rec["own"], rec["sigma"], rec["lf"],
                                   rec["omega"], gvisc, parts["boundary_sat"])
                if sch.ip:
                    K.ns_bface_ip_group(w, q, rec["own"], rec["lhat"], rec["jf"],
                                        rec["omega"], gas.mu, gas.conductivity,
                                        gas.gamma, gas.rgas, sch.ip_coefficient,
                                        gq, gw, parts["boundary_sat"])

        jinv = 1.0 / self.geom.jac[:, None]
        for name in RhsBreakdown.PARTS:
            parts[name] *= jinv
        total = parts["inviscid_volume"].copy()
        for name in RhsBreakdown.PARTS[1:]:
            total += parts[name]
        if breakdown:
            return RhsBreakdown(total=total, gcl_certified=geom.gcl_certified,
                                **parts)
        return total

    def ldg_gradients(self, t, q, w=None, ghosts=None):
        """Entropy-variable gradients theta_a with interface penalties."""
        geom = self.geom
        if w is None:
            _, w = self._derived(q)
            w = w.copy()
        theta = np.empty((geom.ndof, 3, 5))
        tmp = np.empty((geom.ndof, 5))
        for p, first, count in geom.groups:
            D = geom.bank.get(p).D
            start = int(geom.offsets[first])
            for a in range(3):
                K.line_derivative_group(D, start, count, p + 1, w, tmp, False, a)
                sl = geom.group_slice(first, count)
                theta[sl, a, :] = tmp[sl]
        for rec in self.tables.iface:
            K.theta_face_group(w, rec["own"], rec["par"], rec["Th"], rec["sigma"],
                               rec["lf"], rec["omega"], theta)
        if ghosts is None:
            ghosts = []
            for rec in self.tables.bface:
                ghosts.append(self._ghost(rec, t))
        for rec, (gq, gprim, gw, ggrad) in zip(self.tables.bface, ghosts):
            K.theta_bface_group(w, rec["own"], rec["sigma"], rec["lf"],
                                rec["omega"], gw, theta)
        return theta

    # -- diagnostics --------------------------------------------------------

    def entropy_contraction(self, t, q, rhs_val=None):
        """sum_i M_i J_i w_i . (dq/dt)_i  (discrete total entropy rate)."""
        if rhs_val is None:
            rhs_val = self.rhs(t, q)
        _, w = self._derived(q)
        return float(np.einsum("i,iv,iv->", self.mass * self.geom.jac, w, rhs_val))

    def conservation_rate(self, t, q, rhs_val=None):
        """d/dt of the global conserved integrals (5,)."""
        if rhs_val is None:
            rhs_val = self.rhs(t, q)
        return np.einsum("i,iv->v", self.mass * self.geom.jac, rhs_val)

    def total_entropy(self, q):
        S, _ = entropy_and_vars(q, self.gas)
        return float(np.sum(self.mass * self.geom.jac * S))

    def kinetic_energy(self, q):
        rho = q[:, 0]
        ke = 0.5 * (q[:, 1] ** 2 + q[:, 2] ** 2 + q[:, 3] ** 2) / rho
        return float(np.sum(self.mass * self.geom.jac * ke))

    def interface_flux_mismatch(self, t, q):
        """Worst |flux_own + flux_partner| over interfaces (conservation pairing).

        The per-face flux seen by one element is the norm contraction of its
        interface terms minus the own-flux quadrature (whose counterpart
        cancels against the volume telescoping inside the element); what
        remains is the unique interface flux, which must be equal and
        opposite across the two sides.
        """
        from .kernels.numpy_backend import _own_flux

        geom = self.geom
        prim, w = self._derived(q)
        worst = 0.0
        for rec in self.tables.iface:
            nf = rec["own"].shape[0]
            for f in range(nf):
                flux = []
                for side in range(2):
                    if side == 0:
                        r, row = rec, f
                    else:
                        r = self._find_iface(rec["pp"], rec["po"])
                        row = self._partner_row(rec, r, f)
                    sub = {k: (v[row:row + 1] if isinstance(v, np.ndarray)
                               and v.ndim >= 1 and v.shape[0] == r["own"].shape[0]
                               else v)
                           for k, v in r.items()}
                    out = np.zeros((geom.ndof, 5))
                    K.ns_face_ec_group(prim, sub["own"], sub["par"], r["Th"],
                                       sub["lho"], sub["lhp"], sub["lvf"],
                                       sub["sigma"], r["omega"],
                                       self.gas.gamma, out)
                    if self.scheme.dissipation > 0:
                        K.ns_face_diss_group(w, q, sub["own"], sub["par"],
                                             r["Th"], r["Thp"], sub["lho"],
                                             sub["lhp"], r["omega"],
                                             self.gas.gamma, self.gas.rgas,
                                             self.scheme.dissipation,
                                             r["po"] == r["pp"], out)
                    total = np.einsum("i,iv->v", self.mass, out)
                    wface = self.mass[sub["own"][0]] * r["omega"]
                    fown = _own_flux(prim[sub["own"][0]], sub["lvf"][0],
                                     self.gas.gamma)
                    total -= sub["sigma"][0] * np.einsum("i,iv->v", wface, fown)
                    flux.append(total)
                worst = max(worst, float(np.max(np.abs(flux[0] + flux[1]))))
        return worst

    def _find_iface(self, po, pp):
        for rec in self.tables.iface:
            if rec["po"] == po and rec["pp"] == pp:
                return rec
        raise KeyError((po, pp))

    def _partner_row(self, rec, prec, f):
        own0 = rec["own"][f, 0]
        rows = np.where(prec["par"][:, 0] == own0)[0]
        for r in rows:
            if prec["own"][r, 0] == rec["par"][f, 0]:
                return int(r)
        raise KeyError("partner face row not found")


class ScalarRhs:
    """Split-form semi-discretization of linear convection-diffusion."""

    def __init__(self, geom: MeshGeometry, scheme: SchemeConfig, boundary=None):
        self.geom = geom
        self.scheme = scheme
        self.boundary = boundary
        self.tables = _FaceTables(geom)
        self.mass = geom.mass()
        self.a = np.asarray(scheme.a, dtype=float)
        self.b = np.asarray(scheme.b, dtype=float)
        if any(t["own"].size for t in self.tables.bface) and boundary is None:
            raise ValueError("mesh has tagged boundary faces but no provider given")

    def _ghost(self, rec, t):
        nf, no = rec["own"].shape
        x = rec["xyz"].reshape(-1, 3)
        gu = np.asarray(self.boundary.boundary_state(x, t), dtype=float)
        return gu.reshape(nf, no)

    def rhs(self, t, u, breakdown: bool = False):
        geom = self.geom
        sch = self.scheme
        parts = {name: np.zeros((geom.ndof, 1)) for name in RhsBreakdown.PARTS}
        for p, first, count in geom.groups:
            D = geom.bank.get(p).D
            start = int(geom.offsets[first])
            K.scalar_volume_group(D, start, count, p + 1, u, geom.lam_vol,
                                  self.a, parts["inviscid_volume"])
        for rec in self.tables.iface:
            K.scalar_face_ec_group(u, rec["own"], rec["par"], rec["Th"],
                                   rec["lho"], rec["lhp"], rec["lvf"],
                                   rec["sigma"], rec["omega"], self.a,
                                   parts["inviscid_interface"])
            if sch.dissipation > 0.0:
                K.scalar_face_diss_group(u, rec["own"], rec["par"], rec["Th"],
                                         rec["Thp"], rec["lho"], rec["lhp"],
                                         rec["omega"], self.a, sch.dissipation,
                                         parts["inviscid_interface"])
        ghosts = []
        for rec in self.tables.bface:
            gu = self._ghost(rec, t)
            ghosts.append(gu)
            K.scalar_bface_ec_group(u, rec["own"], rec["lhat"], rec["lvf"],
                                    rec["sigma"], rec["omega"], self.a, gu,
                                    parts["boundary_sat"])
            if sch.dissipation > 0.0:
                K.scalar_bface_diss_group(u, rec["own"], rec["lhat"],
                                          rec["omega"], self.a, sch.dissipation,
                                          gu, parts["boundary_sat"])
        if sch.viscous and np.any(self.b > 0.0):
            theta = self.ldg_gradients(t, u, ghosts=ghosts)
            g = np.empty((geom.ndof, 3, 1))
            K.scalar_viscous_flux_all(theta, geom.lam_an, geom.jac, self.b, g)
            tmp = np.empty((geom.ndof, 1))
            for p, first, count in geom.groups:
                D = geom.bank.get(p).D
                start = int(geom.offsets[first])
                for a in range(3):
                    K.line_derivative_group(D, start, count, p + 1,
                                            np.ascontiguousarray(g[:, a, :]),
                                            tmp, False, a)
                    sl = geom.group_slice(first, count)
                    parts["viscous_volume"][sl] += tmp[sl]
            for rec in self.tables.iface:
                K.gdiv_face_group(g, rec["own"], rec["par"], rec["Th"],
                                  rec["sigma"], rec["lf"], rec["omega"],
                                  parts["ldg_interface"])
                if sch.ip:
                    K.scalar_face_ip_group(u, rec["own"], rec["par"], rec["Th"],
                                           rec["Thp"], rec["lho"], rec["lhp"],
                                           rec["jfo"], rec["jfp"], rec["omega"],
                                           self.b, sch.ip_coefficient,
                                           parts["ip"])
            for rec, gu in zip(self.tables.bface, ghosts):
                grad = getattr(self.boundary, "boundary_grad", None)
                nf, no = rec["own"].shape
                if grad is None:
                    gvisc = np.zeros((nf, no, 1))
                else:
                    gx = np.asarray(grad(rec["xyz"].reshape(-1, 3), t))
                    gx = gx.reshape(nf, no, 3)
                    gvisc = np.einsum("fnm,m,fnm->fn", rec["lhat"], self.b,
                                      gx)[..., None]
                K.gdiv_bface_group(g, rec["own"], rec["sigma"], rec["lf"],
                                   rec["omega"], gvisc, parts["boundary_sat"])
                if sch.ip:
                    K.scalar_bface_ip_group(u, rec["own"], rec["lhat"], rec["jf"],
                                            rec["omega"], self.b,
                                            sch.ip_coefficient, gu,
                                            parts["boundary_sat"])
        jinv = 1.0 / geom.jac[:, None]
        for name in RhsBreakdown.PARTS:
            parts[name] *= jinv
        total = parts["inviscid_volume"].copy()
        for name in RhsBreakdown.PARTS[1:]:
            total += parts[name]
        if breakdown:
            return RhsBreakdown(total=total, gcl_certified=geom.gcl_certified,
                                **parts)
        return total

    def ldg_gradients(self, t, u, ghosts=None):
        geom = self.geom
        theta = np.empty((geom.ndof, 3, 1))
        tmp = np.empty((geom.ndof, 1))
        for p, first, count in geom.groups:
            D = geom.bank.get(p).D
            start = int(geom.offsets[first])
            for a in range(3):
                K.line_derivative_group(D, start, count, p + 1, u, tmp, False, a)
                sl = geom.group_slice(first, count)
                theta[sl, a, :] = tmp[sl]
        for rec in self.tables.iface:
            K.theta_face_group(u, rec["own"], rec["par"], rec["Th"], rec["sigma"],
                               rec["lf"], rec["omega"], theta)
        if ghosts is None:
            ghosts = [self._ghost(rec, t) for rec in self.tables.bface]
        for rec, gu in zip(self.tables.bface, ghosts):
            K.theta_bface_group(u, rec["own"], rec["sigma"], rec["lf"],
                                rec["omega"], gu[..., None], theta)
        return theta

    def energy_rate(self, t, u, rhs_val=None):
        if rhs_val is None:
            rhs_val = self.rhs(t, u)
        return float(np.einsum("i,iv,iv->", self.mass * self.geom.jac, u, rhs_val))
