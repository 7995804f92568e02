"""Numba implementation of the solver kernels.

Loop-level mirror of :mod:`esdg.kernels.numpy_backend`; the two backends are
required to agree to rounding (see tests).  All functions are cached njit
compilations over flat float64/int64 arrays.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .common import BETA, KIN, LNBETA, LNRHO, LOGMEAN_EPS, NPRIM, PRES, RHO, TEMP, U1

_JIT = dict(cache=True, fastmath=False)


@njit(**_JIT)
def _logmean(a, b, lna, lnb):
    f = (a - b) / (a + b)
    u = f * f
    if u < LOGMEAN_EPS:
        return (a + b) / (2.0 * (1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0))
    return (a - b) / (lna - lnb)


@njit(**_JIT)
def line_derivative_group(D, base0, count, n, fld, out, add, axis):
    n3 = n * n * n
    width = fld.shape[1]
    for e in range(count):
        base = base0 + e * n3
        for p in range(n):
            for qq in range(n):
                for i in range(n):
                    if axis == 0:
                        ii = base + (i * n + p) * n + qq
                    elif axis == 1:
                        ii = base + (p * n + i) * n + qq
                    else:
                        ii = base + (p * n + qq) * n + i
                    for v in range(width):
                        acc = 0.0
                        for j in range(n):
                            if axis == 0:
                                jj = base + (j * n + p) * n + qq
                            elif axis == 1:
                                jj = base + (p * n + j) * n + qq
                            else:
                                jj = base + (p * n + qq) * n + j
                            acc += D[i, j] * fld[jj, v]
                        if add:
                            out[ii, v] += acc
                        else:
                            out[ii, v] = acc


@njit(**_JIT)
def ns_state_derived(q, gamma, rgas, sref, prim, w):
    cv = rgas / (gamma - 1.0)
    for i in range(q.shape[0]):
        rho = q[i, 0]
        u1 = q[i, 1] / rho
        u2 = q[i, 2] / rho
        u3 = q[i, 3] / rho
        k = 0.5 * (u1 * u1 + u2 * u2 + u3 * u3)
        T = (q[i, 4] / rho - k) / cv
        p = rho * rgas * T
        prim[i, RHO] = rho
        prim[i, U1] = u1
        prim[i, U1 + 1] = u2
        prim[i, U1 + 2] = u3
        prim[i, PRES] = p
        prim[i, TEMP] = T
        beta = rho / (2.0 * p)
        prim[i, BETA] = beta
        prim[i, LNRHO] = np.log(rho)
        prim[i, LNBETA] = np.log(beta)
        prim[i, KIN] = k
        s = cv * np.log(T) - rgas * prim[i, LNRHO] - sref
        w[i, 0] = rgas + cv - s - k / T
        w[i, 1] = u1 / T
        w[i, 2] = u2 / T
        w[i, 3] = u3 / T
        w[i, 4] = -1.0 / T


@njit(inline="always", **_JIT)
def _ec_flux_pair(prim, ii, jj, l1, l2, l3, gamma, f):
    """Entropy-consistent flux of one node pair with metric vector (l1,l2,l3)."""
    rho_ln = _logmean(prim[ii, RHO], prim[jj, RHO], prim[ii, LNRHO], prim[jj, LNRHO])
    beta_ln = _logmean(prim[ii, BETA], prim[jj, BETA], prim[ii, LNBETA], prim[jj, LNBETA])
    ub1 = 0.5 * (prim[ii, U1] + prim[jj, U1])
    ub2 = 0.5 * (prim[ii, U1 + 1] + prim[jj, U1 + 1])
    ub3 = 0.5 * (prim[ii, U1 + 2] + prim[jj, U1 + 2])
    ptil = (prim[ii, RHO] + prim[jj, RHO]) / (2.0 * (prim[ii, BETA] + prim[jj, BETA]))
    kbar = 0.5 * (prim[ii, KIN] + prim[jj, KIN])
    vlam = l1 * ub1 + l2 * ub2 + l3 * ub3
    fmass = rho_ln * vlam
    f[0] = fmass
    f[1] = ub1 * fmass + l1 * ptil
    f[2] = ub2 * fmass + l2 * ptil
    f[3] = ub3 * fmass + l3 * ptil
    common = (1.0 / (2.0 * (gamma - 1.0) * beta_ln) - kbar
              + ub1 * ub1 + ub2 * ub2 + ub3 * ub3)
    f[4] = fmass * common + ptil * vlam
    return f


@njit(inline="always", **_JIT)
def _own_flux_node(prim, ii, l1, l2, l3, gamma, f):
    rho = prim[ii, RHO]
    p = prim[ii, PRES]
    vlam = l1 * prim[ii, U1] + l2 * prim[ii, U1 + 1] + l3 * prim[ii, U1 + 2]
    E = p / (gamma - 1.0) + rho * prim[ii, KIN]
    f[0] = rho * vlam
    f[1] = rho * prim[ii, U1] * vlam + l1 * p
    f[2] = rho * prim[ii, U1 + 1] * vlam + l2 * p
    f[3] = rho * prim[ii, U1 + 2] * vlam + l3 * p
    f[4] = (E + p) * vlam
    return f


@njit(**_JIT)
def ns_volume_group(D, base0, count, n, prim, lamv, gamma, out):
    n3 = n * n * n
    f = np.empty(5)
    for e in range(count):
        base = base0 + e * n3
        for axis in range(3):
            for p1 in range(n):
                for p2 in range(n):
                    for i in range(n):
                        if axis == 0:
                            ii = base + (i * n + p1) * n + p2
                        elif axis == 1:
                            ii = base + (p1 * n + i) * n + p2
                        else:
                            ii = base + (p1 * n + p2) * n + i
                        for j in range(i, n):
                            if axis == 0:
                                jj = base + (j * n + p1) * n + p2
                            elif axis == 1:
                                jj = base + (p1 * n + j) * n + p2
                            else:
                                jj = base + (p1 * n + p2) * n + j
                            l1 = 0.5 * (lamv[ii, axis, 0] + lamv[jj, axis, 0])
                            l2 = 0.5 * (lamv[ii, axis, 1] + lamv[jj, axis, 1])
                            l3 = 0.5 * (lamv[ii, axis, 2] + lamv[jj, axis, 2])
                            _ec_flux_pair(prim, ii, jj, l1, l2, l3, gamma, f)
                            if j == i:
                                d = -2.0 * D[i, i]
                                for v in range(5):
                                    out[ii, v] += d * f[v]
                            else:
                                dij = -2.0 * D[i, j]
                                dji = -2.0 * D[j, i]
                                for v in range(5):
                                    out[ii, v] += dij * f[v]
                                    out[jj, v] += dji * f[v]


@njit(**_JIT)
def ns_face_ec_group(prim, own_idx, par_idx, Th, lho, lhp, lvf, sigma, omega,
                     gamma, out):
    nf, no = own_idx.shape
    npn = par_idx.shape[1]
    f = np.empty(5)
    fhat = np.empty(5)
    for fc in range(nf):
        s = sigma[fc] * omega
        for i in range(no):
            ii = own_idx[fc, i]
            for v in range(5):
                fhat[v] = 0.0
            for j in range(npn):
                th = Th[i, j]
                if th == 0.0:
                    continue
                jj = par_idx[fc, j]
                l1 = 0.5 * (lho[fc, i, 0] + lhp[fc, j, 0])
                l2 = 0.5 * (lho[fc, i, 1] + lhp[fc, j, 1])
                l3 = 0.5 * (lho[fc, i, 2] + lhp[fc, j, 2])
                _ec_flux_pair(prim, ii, jj, l1, l2, l3, gamma, f)
                for v in range(5):
                    fhat[v] += th * f[v]
            _own_flux_node(prim, ii, lvf[fc, i, 0], lvf[fc, i, 1], lvf[fc, i, 2],
                           gamma, f)
            for v in range(5):
                out[ii, v] += s * (f[v] - fhat[v])


@njit(**_JIT)
def _ec_flux_ghost(prim, ii, gp, l1, l2, l3, gamma, f):
    rho_ln = _logmean(prim[ii, RHO], gp[RHO], prim[ii, LNRHO], gp[LNRHO])
    beta_ln = _logmean(prim[ii, BETA], gp[BETA], prim[ii, LNBETA], gp[LNBETA])
    ub1 = 0.5 * (prim[ii, U1] + gp[U1])
    ub2 = 0.5 * (prim[ii, U1 + 1] + gp[U1 + 1])
    ub3 = 0.5 * (prim[ii, U1 + 2] + gp[U1 + 2])
    ptil = (prim[ii, RHO] + gp[RHO]) / (2.0 * (prim[ii, BETA] + gp[BETA]))
    kbar = 0.5 * (prim[ii, KIN] + gp[KIN])
    vlam = l1 * ub1 + l2 * ub2 + l3 * ub3
    fmass = rho_ln * vlam
    f[0] = fmass
    f[1] = ub1 * fmass + l1 * ptil
    f[2] = ub2 * fmass + l2 * ptil
    f[3] = ub3 * fmass + l3 * ptil
    common = (1.0 / (2.0 * (gamma - 1.0) * beta_ln) - kbar
              + ub1 * ub1 + ub2 * ub2 + ub3 * ub3)
    f[4] = fmass * common + ptil * vlam
    return f


@njit(**_JIT)
def ns_bface_ec_group(prim, own_idx, lhat, lvf, sigma, omega, gamma, gprim, out):
    nf, no = own_idx.shape
    f = np.empty(5)
    fo = np.empty(5)
    for fc in range(nf):
        s = sigma[fc] * omega
        for i in range(no):
            ii = own_idx[fc, i]
            _ec_flux_ghost(prim, ii, gprim[fc, i], lhat[fc, i, 0], lhat[fc, i, 1],
                           lhat[fc, i, 2], gamma, f)
            _own_flux_node(prim, ii, lvf[fc, i, 0], lvf[fc, i, 1], lvf[fc, i, 2],
                           gamma, fo)
            for v in range(5):
                out[ii, v] += s * (fo[v] - f[v])


@njit(**_JIT)
def theta_face_group(w, own_idx, par_idx, Th, sigma, lf, omega, theta):
    nf, no = own_idx.shape
    npn = par_idx.shape[1]
    width = w.shape[1]
    for fc in range(nf):
        c = -0.5 * omega * sigma[fc]
        a = lf[fc]
        for i in range(no):
            ii = own_idx[fc, i]
            for v in range(width):
                acc = w[ii, v]
                for j in range(npn):
                    acc -= Th[i, j] * w[par_idx[fc, j], v]
                theta[ii, a, v] += c * acc


@njit(**_JIT)
def theta_bface_group(w, own_idx, sigma, lf, omega, gw, theta):
    nf, no = own_idx.shape
    width = w.shape[1]
    for fc in range(nf):
        c = -0.5 * omega * sigma[fc]
        a = lf[fc]
        for i in range(no):
            ii = own_idx[fc, i]
            for v in range(width):
                theta[ii, a, v] += c * (w[ii, v] - gw[fc, i, v])


@njit(inline="always", **_JIT)
def _visc_flux_node(rho, u1, u2, u3, T, mu, kth, om, fv):
    """om (3,5) entropy-variable gradients -> fv (3,5) Cartesian viscous fluxes."""
    du11 = T * (om[0, 1] + u1 * om[0, 4])
    du12 = T * (om[1, 1] + u1 * om[1, 4])
    du13 = T * (om[2, 1] + u1 * om[2, 4])
    du21 = T * (om[0, 2] + u2 * om[0, 4])
    du22 = T * (om[1, 2] + u2 * om[1, 4])
    du23 = T * (om[2, 2] + u2 * om[2, 4])
    du31 = T * (om[0, 3] + u3 * om[0, 4])
    du32 = T * (om[1, 3] + u3 * om[1, 4])
    du33 = T * (om[2, 3] + u3 * om[2, 4])
    div = du11 + du22 + du33
    t11 = mu * (2.0 * du11 - (2.0 / 3.0) * div)
    t22 = mu * (2.0 * du22 - (2.0 / 3.0) * div)
    t33 = mu * (2.0 * du33 - (2.0 / 3.0) * div)
    t12 = mu * (du12 + du21)
    t13 = mu * (du13 + du31)
    t23 = mu * (du23 + du32)
    T2 = T * T
    fv[0, 0] = 0.0
    fv[0, 1] = t11
    fv[0, 2] = t12
    fv[0, 3] = t13
    fv[0, 4] = t11 * u1 + t12 * u2 + t13 * u3 + kth * T2 * om[0, 4]
    fv[1, 0] = 0.0
    fv[1, 1] = t12
    fv[1, 2] = t22
    fv[1, 3] = t23
    fv[1, 4] = t12 * u1 + t22 * u2 + t23 * u3 + kth * T2 * om[1, 4]
    fv[2, 0] = 0.0
    fv[2, 1] = t13
    fv[2, 2] = t23
    fv[2, 3] = t33
    fv[2, 4] = t13 * u1 + t23 * u2 + t33 * u3 + kth * T2 * om[2, 4]
    return fv


@njit(**_JIT)
def ns_viscous_flux_all(prim, theta, lam_an, jac, mu, kth, g):
    om = np.empty((3, 5))
    fv = np.empty((3, 5))
    for i in range(prim.shape[0]):
        ji = 1.0 / jac[i]
        for j in range(3):
            for v in range(5):
                om[j, v] = (lam_an[i, 0, j] * theta[i, 0, v]
                            + lam_an[i, 1, j] * theta[i, 1, v]
                            + lam_an[i, 2, j] * theta[i, 2, v]) * ji
        _visc_flux_node(prim[i, RHO], prim[i, U1], prim[i, U1 + 1], prim[i, U1 + 2],
                        prim[i, TEMP], mu, kth, om, fv)
        for l in range(3):
            for v in range(5):
                g[i, l, v] = (lam_an[i, l, 0] * fv[0, v]
                              + lam_an[i, l, 1] * fv[1, v]
                              + lam_an[i, l, 2] * fv[2, v])


@njit(**_JIT)
def gdiv_face_group(g, own_idx, par_idx, Th, sigma, lf, omega, out):
    nf, no = own_idx.shape
    npn = par_idx.shape[1]
    width = g.shape[2]
    for fc in range(nf):
        c = -0.5 * omega * sigma[fc]
        a = lf[fc]
        for i in range(no):
            ii = own_idx[fc, i]
            for v in range(width):
                acc = g[ii, a, v]
                for j in range(npn):
                    acc -= Th[i, j] * g[par_idx[fc, j], a, v]
                out[ii, v] += c * acc


@njit(**_JIT)
def gdiv_bface_group(g, own_idx, sigma, lf, omega, gvisc, out):
    nf, no = own_idx.shape
    width = g.shape[2]
    for fc in range(nf):
        c = -0.5 * omega * sigma[fc]
        a = lf[fc]
        for i in range(no):
            ii = own_idx[fc, i]
            for v in range(width):
                out[ii, v] += c * (g[ii, a, v] - gvisc[fc, i, v])


@njit(inline="always", **_JIT)
def _rut_row(q, i, gamma, rgas):
    rho = q[i, 0]
    u1 = q[i, 1] / rho
    u2 = q[i, 2] / rho
    u3 = q[i, 3] / rho
    k = 0.5 * (u1 * u1 + u2 * u2 + u3 * u3)
    T = (q[i, 4] / rho - k) * (gamma - 1.0) / rgas
    return rho, u1, u2, u3, T


@njit(**_JIT)
def _interp_rows(Th, src, idxrow, dst):
    """dst[i,:] = sum_j Th[i,j] src[idxrow[j], :]"""
    no, npn = Th.shape
    width = src.shape[1]
    for i in range(no):
        for v in range(width):
            acc = 0.0
            for j in range(npn):
                acc += Th[i, j] * src[idxrow[j], v]
            dst[i, v] = acc


@njit(inline="always", **_JIT)
def _chat_nn_apply_node(rho, u1, u2, u3, T, n1, n2, n3, jac, mu, kth, vec, om, fv, res):
    ji = 1.0 / jac
    for v in range(5):
        om[0, v] = n1 * vec[v] * ji
        om[1, v] = n2 * vec[v] * ji
        om[2, v] = n3 * vec[v] * ji
    _visc_flux_node(rho, u1, u2, u3, T, mu, kth, om, fv)
    for v in range(5):
        res[v] = n1 * fv[0, v] + n2 * fv[1, v] + n3 * fv[2, v]
    return res


@njit(**_JIT)
def ns_face_ip_group(w, q, own_idx, par_idx, Th, Thp, lho, lhp, jfo, jfp,
                     omega, mu, kth, gamma, rgas, coeff, conforming, out):
    nf, no = own_idx.shape
    npn = par_idx.shape[1]
    om = np.empty((3, 5))
    fv = np.empty((3, 5))
    k1 = np.empty(5)
    k2 = np.empty(5)
    jo = np.empty((no, 5))
    jp = np.empty((npn, 5))
    qip_o = np.empty((no, 5))
    qip_p = np.empty((npn, 5))
    kp = np.empty((npn, 5))
    for fc in range(nf):
        if conforming:
            for i in range(no):
                for v in range(5):
                    qip_o[i, v] = q[par_idx[fc, i], v]
                    qip_p[i, v] = q[own_idx[fc, i], v]
                    d = w[own_idx[fc, i], v] - w[par_idx[fc, i], v]
                    jo[i, v] = d
                    jp[i, v] = -d
        else:
            _interp_rows(Th, q, par_idx[fc], qip_o)
            _interp_rows(Thp, q, own_idx[fc], qip_p)
            for i in range(no):
                for v in range(5):
                    acc = w[own_idx[fc, i], v]
                    for j in range(npn):
                        acc -= Th[i, j] * w[par_idx[fc, j], v]
                    jo[i, v] = acc
            for j in range(npn):
                for v in range(5):
                    acc = w[par_idx[fc, j], v]
                    for i in range(no):
                        acc -= Thp[j, i] * w[own_idx[fc, i], v]
                    jp[j, v] = acc
        for j in range(npn):
            jj = par_idx[fc, j]
            rho, u1, u2, u3, T = _rut_row(q, jj, gamma, rgas)
            n1 = lhp[fc, j, 0]
            n2 = lhp[fc, j, 1]
            n3 = lhp[fc, j, 2]
            _chat_nn_apply_node(rho, u1, u2, u3, T, n1, n2, n3, jfp[fc, j],
                                mu, kth, jp[j], om, fv, k1)
            rho, u1, u2, u3, T = _rut_row(qip_p, j, gamma, rgas)
            _chat_nn_apply_node(rho, u1, u2, u3, T, n1, n2, n3, jfp[fc, j],
                                mu, kth, jp[j], om, fv, k2)
            for v in range(5):
                kp[j, v] = 0.5 * (k1[v] + k2[v])
        for i in range(no):
            ii = own_idx[fc, i]
            rho, u1, u2, u3, T = _rut_row(q, ii, gamma, rgas)
            n1 = lho[fc, i, 0]
            n2 = lho[fc, i, 1]
            n3 = lho[fc, i, 2]
            _chat_nn_apply_node(rho, u1, u2, u3, T, n1, n2, n3, jfo[fc, i],
                                mu, kth, jo[i], om, fv, k1)
            rho, u1, u2, u3, T = _rut_row(qip_o, i, gamma, rgas)
            _chat_nn_apply_node(rho, u1, u2, u3, T, n1, n2, n3, jfo[fc, i],
                                mu, kth, jo[i], om, fv, k2)
            if conforming:
                for v in range(5):
                    out[ii, v] += -0.5 * coeff * omega * (
                        0.5 * (k1[v] + k2[v]) - kp[i, v])
            else:
                for v in range(5):
                    term = 0.5 * (k1[v] + k2[v])
                    for j in range(npn):
                        term -= Th[i, j] * kp[j, v]
                    out[ii, v] += -0.5 * coeff * omega * term


@njit(**_JIT)
def ns_bface_ip_group(w, q, own_idx, lhat, jf, omega, mu, kth, gamma, rgas,
                      coeff, gq, gw, out):
    nf, no = own_idx.shape
    om = np.empty((3, 5))
    fv = np.empty((3, 5))
    k1 = np.empty(5)
    k2 = np.empty(5)
    jo = np.empty(5)
    for fc in range(nf):
        for i in range(no):
            ii = own_idx[fc, i]
            for v in range(5):
                jo[v] = w[ii, v] - gw[fc, i, v]
            n1 = lhat[fc, i, 0]
            n2 = lhat[fc, i, 1]
            n3 = lhat[fc, i, 2]
            rho, u1, u2, u3, T = _rut_row(q, ii, gamma, rgas)
            _chat_nn_apply_node(rho, u1, u2, u3, T, n1, n2, n3, jf[fc, i],
                                mu, kth, jo, om, fv, k1)
            gr = gq[fc, i]
            rho = gr[0]
            u1 = gr[1] / rho
            u2 = gr[2] / rho
            u3 = gr[3] / rho
            kk = 0.5 * (u1 * u1 + u2 * u2 + u3 * u3)
            T = (gr[4] / rho - kk) * (gamma - 1.0) / rgas
            _chat_nn_apply_node(rho, u1, u2, u3, T, n1, n2, n3, jf[fc, i],
                                mu, kth, jo, om, fv, k2)
            for v in range(5):
                out[ii, v] += -coeff * omega * 0.5 * (k1[v] + k2[v])


@njit(inline="always", **_JIT)
def _a0_apply_vals(rho, u1, u2, u3, E, gamma, rgas, vec, res):
    k = 0.5 * (u1 * u1 + u2 * u2 + u3 * u3)
    p = (gamma - 1.0) * (E - rho * k)
    H = (E + p) / rho
    udv = u1 * vec[1] + u2 * vec[2] + u3 * vec[3]
    mdv = rho * udv
    res[0] = (rho * vec[0] + mdv + E * vec[4]) / rgas
    c = rho * udv + (E + p) * vec[4]
    res[1] = (rho * u1 * vec[0] + u1 * c + p * vec[1]) / rgas
    res[2] = (rho * u2 * vec[0] + u2 * c + p * vec[2]) / rgas
    res[3] = (rho * u3 * vec[0] + u3 * c + p * vec[3]) / rgas
    a44 = rho * H * H - gamma * p * p / ((gamma - 1.0) * rho)
    res[4] = (E * vec[0] + (E + p) * udv + a44 * vec[4]) / rgas
    return res


@njit(inline="always", **_JIT)
def _wavespeed_vals(rho, u1, u2, u3, E, gamma, rgas, n1, n2, n3):
    k = 0.5 * (u1 * u1 + u2 * u2 + u3 * u3)
    T = (E / rho - k) * (gamma - 1.0) / rgas
    if T < 1e-300:
        T = 1e-300
    c = np.sqrt(gamma * rgas * T)
    un = n1 * u1 + n2 * u2 + n3 * u3
    return abs(un) + c * np.sqrt(n1 * n1 + n2 * n2 + n3 * n3)


@njit(**_JIT)
def ns_face_diss_group(w, q, own_idx, par_idx, Th, Thp, lho, lhp, omega,
                       gamma, rgas, coeff, conforming, out):
    nf, no = own_idx.shape
    npn = par_idx.shape[1]
    k1 = np.empty(5)
    k2 = np.empty(5)
    jo = np.empty((no, 5))
    jp = np.empty((npn, 5))
    qip_o = np.empty((no, 5))
    qip_p = np.empty((npn, 5))
    kp = np.empty((npn, 5))
    for fc in range(nf):
        if conforming:
            for i in range(no):
                for v in range(5):
                    qip_o[i, v] = q[par_idx[fc, i], v]
                    qip_p[i, v] = q[own_idx[fc, i], v]
                    d = w[own_idx[fc, i], v] - w[par_idx[fc, i], v]
                    jo[i, v] = d
                    jp[i, v] = -d
        else:
            _interp_rows(Th, q, par_idx[fc], qip_o)
            _interp_rows(Thp, q, own_idx[fc], qip_p)
            for i in range(no):
                for v in range(5):
                    acc = w[own_idx[fc, i], v]
                    for j in range(npn):
                        acc -= Th[i, j] * w[par_idx[fc, j], v]
                    jo[i, v] = acc
            for j in range(npn):
                for v in range(5):
                    acc = w[par_idx[fc, j], v]
                    for i in range(no):
                        acc -= Thp[j, i] * w[own_idx[fc, i], v]
                    jp[j, v] = acc
        for j in range(npn):
            jj = par_idx[fc, j]
            n1 = lhp[fc, j, 0]
            n2 = lhp[fc, j, 1]
            n3 = lhp[fc, j, 2]
            rho = q[jj, 0]
            u1 = q[jj, 1] / rho
            u2 = q[jj, 2] / rho
            u3 = q[jj, 3] / rho
            E = q[jj, 4]
            lam1 = _wavespeed_vals(rho, u1, u2, u3, E, gamma, rgas, n1, n2, n3)
            _a0_apply_vals(rho, u1, u2, u3, E, gamma, rgas, jp[j], k1)
            rho = qip_p[j, 0]
            u1 = qip_p[j, 1] / rho
            u2 = qip_p[j, 2] / rho
            u3 = qip_p[j, 3] / rho
            E = qip_p[j, 4]
            lam2 = _wavespeed_vals(rho, u1, u2, u3, E, gamma, rgas, n1, n2, n3)
            _a0_apply_vals(rho, u1, u2, u3, E, gamma, rgas, jp[j], k2)
            lam = max(lam1, lam2)
            for v in range(5):
                kp[j, v] = lam * 0.5 * (k1[v] + k2[v])
        for i in range(no):
            ii = own_idx[fc, i]
            n1 = lho[fc, i, 0]
            n2 = lho[fc, i, 1]
            n3 = lho[fc, i, 2]
            rho = q[ii, 0]
            u1 = q[ii, 1] / rho
            u2 = q[ii, 2] / rho
            u3 = q[ii, 3] / rho
            E = q[ii, 4]
            lam1 = _wavespeed_vals(rho, u1, u2, u3, E, gamma, rgas, n1, n2, n3)
            _a0_apply_vals(rho, u1, u2, u3, E, gamma, rgas, jo[i], k1)
            rho = qip_o[i, 0]
            u1 = qip_o[i, 1] / rho
            u2 = qip_o[i, 2] / rho
            u3 = qip_o[i, 3] / rho
            E = qip_o[i, 4]
            lam2 = _wavespeed_vals(rho, u1, u2, u3, E, gamma, rgas, n1, n2, n3)
            _a0_apply_vals(rho, u1, u2, u3, E, gamma, rgas, jo[i], k2)
            lam = max(lam1, lam2)
            if conforming:
                for v in range(5):
                    out[ii, v] += -0.25 * coeff * omega * (
                        lam * 0.5 * (k1[v] + k2[v]) - kp[i, v])
            else:
                for v in range(5):
                    term = lam * 0.5 * (k1[v] + k2[v])
                    for j in range(npn):
                        term -= Th[i, j] * kp[j, v]
                    out[ii, v] += -0.25 * coeff * omega * term


@njit(**_JIT)
def ns_bface_diss_group(w, q, own_idx, lhat, omega, gamma, rgas, coeff, gq, gw, out):
    nf, no = own_idx.shape
    k1 = np.empty(5)
    k2 = np.empty(5)
    jo = np.empty(5)
    for fc in range(nf):
        for i in range(no):
            ii = own_idx[fc, i]
            for v in range(5):
                jo[v] = w[ii, v] - gw[fc, i, v]
            n1 = lhat[fc, i, 0]
            n2 = lhat[fc, i, 1]
            n3 = lhat[fc, i, 2]
            rho = q[ii, 0]
            u1 = q[ii, 1] / rho
            u2 = q[ii, 2] / rho
            u3 = q[ii, 3] / rho
            E = q[ii, 4]
            lam1 = _wavespeed_vals(rho, u1, u2, u3, E, gamma, rgas, n1, n2, n3)
            _a0_apply_vals(rho, u1, u2, u3, E, gamma, rgas, jo, k1)
            gr = gq[fc, i]
            rho = gr[0]
            u1 = gr[1] / rho
            u2 = gr[2] / rho
            u3 = gr[3] / rho
            E = gr[4]
            lam2 = _wavespeed_vals(rho, u1, u2, u3, E, gamma, rgas, n1, n2, n3)
            _a0_apply_vals(rho, u1, u2, u3, E, gamma, rgas, jo, k2)
            lam = max(lam1, lam2)
            for v in range(5):
                out[ii, v] += -0.5 * coeff * omega * lam * 0.5 * (k1[v] + k2[v])


# ---------------------------------------------------------------------------
# scalar convection-diffusion counterparts


@njit(**_JIT)
def scalar_volume_group(D, base0, count, n, u, lamv, a, out):
    n3 = n * n * n
    for e in range(count):
        base = base0 + e * n3
        for axis in range(3):
            for p1 in range(n):
                for p2 in range(n):
                    for i in range(n):
                        if axis == 0:
                            ii = base + (i * n + p1) * n + p2
                        elif axis == 1:
                            ii = base + (p1 * n + i) * n + p2
                        else:
                            ii = base + (p1 * n + p2) * n + i
                        ali = (lamv[ii, axis, 0] * a[0] + lamv[ii, axis, 1] * a[1]
                               + lamv[ii, axis, 2] * a[2])
                        for j in range(i, n):
                            if axis == 0:
                                jj = base + (j * n + p1) * n + p2
                            elif axis == 1:
                                jj = base + (p1 * n + j) * n + p2
                            else:
                                jj = base + (p1 * n + p2) * n + j
                            alj = (lamv[jj, axis, 0] * a[0] + lamv[jj, axis, 1] * a[1]
                                   + lamv[jj, axis, 2] * a[2])
                            fbar = 0.25 * (ali + alj) * (u[ii, 0] + u[jj, 0])
                            if j == i:
                                out[ii, 0] += -2.0 * D[i, i] * fbar
                            else:
                                out[ii, 0] += -2.0 * D[i, j] * fbar
                                out[jj, 0] += -2.0 * D[j, i] * fbar


@njit(**_JIT)
def scalar_face_ec_group(u, own_idx, par_idx, Th, lho, lhp, lvf, sigma, omega,
                         a, out):
    nf, no = own_idx.shape
    npn = par_idx.shape[1]
    for fc in range(nf):
        s = sigma[fc] * omega
        for i in range(no):
            ii = own_idx[fc, i]
            alo = (lho[fc, i, 0] * a[0] + lho[fc, i, 1] * a[1] + lho[fc, i, 2] * a[2])
            fhat = 0.0
            for j in range(npn):
                jj = par_idx[fc, j]
                alp = (lhp[fc, j, 0] * a[0] + lhp[fc, j, 1] * a[1]
                       + lhp[fc, j, 2] * a[2])
                fhat += Th[i, j] * 0.25 * (alo + alp) * (u[ii, 0] + u[jj, 0])
            alv = (lvf[fc, i, 0] * a[0] + lvf[fc, i, 1] * a[1] + lvf[fc, i, 2] * a[2])
            out[ii, 0] += s * (alv * u[ii, 0] - fhat)


@njit(**_JIT)
def scalar_bface_ec_group(u, own_idx, lhat, lvf, sigma, omega, a, gu, out):
    nf, no = own_idx.shape
    for fc in range(nf):
        s = sigma[fc] * omega
        for i in range(no):
            ii = own_idx[fc, i]
            al = (lhat[fc, i, 0] * a[0] + lhat[fc, i, 1] * a[1]
                  + lhat[fc, i, 2] * a[2])
            alv = (lvf[fc, i, 0] * a[0] + lvf[fc, i, 1] * a[1] + lvf[fc, i, 2] * a[2])
            fstar = al * 0.5 * (u[ii, 0] + gu[fc, i])
            out[ii, 0] += s * (alv * u[ii, 0] - fstar)


@njit(**_JIT)
def scalar_viscous_flux_all(theta, lam_an, jac, bcoef, g):
    for i in range(theta.shape[0]):
        ji = 1.0 / jac[i]
        om0 = (lam_an[i, 0, 0] * theta[i, 0, 0] + lam_an[i, 1, 0] * theta[i, 1, 0]
               + lam_an[i, 2, 0] * theta[i, 2, 0]) * ji
        om1 = (lam_an[i, 0, 1] * theta[i, 0, 0] + lam_an[i, 1, 1] * theta[i, 1, 0]
               + lam_an[i, 2, 1] * theta[i, 2, 0]) * ji
        om2 = (lam_an[i, 0, 2] * theta[i, 0, 0] + lam_an[i, 1, 2] * theta[i, 1, 0]
               + lam_an[i, 2, 2] * theta[i, 2, 0]) * ji
        for l in range(3):
            g[i, l, 0] = (lam_an[i, l, 0] * bcoef[0] * om0
                          + lam_an[i, l, 1] * bcoef[1] * om1
                          + lam_an[i, l, 2] * bcoef[2] * om2)


@njit(**_JIT)
def scalar_face_ip_group(u, own_idx, par_idx, Th, Thp, lho, lhp, jfo, jfp,
                         omega, bcoef, coeff, out):
    nf, no = own_idx.shape
    npn = par_idx.shape[1]
    jo = np.empty(no)
    jp = np.empty(npn)
    kp = np.empty(npn)
    for fc in range(nf):
        for i in range(no):
            acc = u[own_idx[fc, i], 0]
            for j in range(npn):
                acc -= Th[i, j] * u[par_idx[fc, j], 0]
            jo[i] = acc
        for j in range(npn):
            acc = u[par_idx[fc, j], 0]
            for i in range(no):
                acc -= Thp[j, i] * u[own_idx[fc, i], 0]
            jp[j] = acc
        for j in range(npn):
            knn = (lhp[fc, j, 0] ** 2 * bcoef[0] + lhp[fc, j, 1] ** 2 * bcoef[1]
                   + lhp[fc, j, 2] ** 2 * bcoef[2]) / jfp[fc, j]
            kp[j] = knn * jp[j]
        for i in range(no):
            ii = own_idx[fc, i]
            knn = (lho[fc, i, 0] ** 2 * bcoef[0] + lho[fc, i, 1] ** 2 * bcoef[1]
                   + lho[fc, i, 2] ** 2 * bcoef[2]) / jfo[fc, i]
            term = knn * jo[i]
            for j in range(npn):
                term -= Th[i, j] * kp[j]
            out[ii, 0] += -0.5 * coeff * omega * term


@njit(**_JIT)
def scalar_bface_ip_group(u, own_idx, lhat, jf, omega, bcoef, coeff, gu, out):
    nf, no = own_idx.shape
    for fc in range(nf):
        for i in range(no):
            ii = own_idx[fc, i]
            knn = (lhat[fc, i, 0] ** 2 * bcoef[0] + lhat[fc, i, 1] ** 2 * bcoef[1]
                   + lhat[fc, i, 2] ** 2 * bcoef[2]) / jf[fc, i]
            out[ii, 0] += -coeff * omega * knn * (u[ii, 0] - gu[fc, i])


@njit(**_JIT)
def scalar_face_diss_group(u, own_idx, par_idx, Th, Thp, lho, lhp, omega, a,
                           coeff, out):
    nf, no = own_idx.shape
    npn = par_idx.shape[1]
    jo = np.empty(no)
    jp = np.empty(npn)
    kp = np.empty(npn)
    for fc in range(nf):
        for i in range(no):
            acc = u[own_idx[fc, i], 0]
            for j in range(npn):
                acc -= Th[i, j] * u[par_idx[fc, j], 0]
            jo[i] = acc
        for j in range(npn):
            acc = u[par_idx[fc, j], 0]
            for i in range(no):
                acc -= Thp[j, i] * u[own_idx[fc, i], 0]
            jp[j] = acc
        for j in range(npn):
            lam = abs(lhp[fc, j, 0] * a[0] + lhp[fc, j, 1] * a[1]
                      + lhp[fc, j, 2] * a[2])
            kp[j] = lam * jp[j]
        for i in range(no):
            ii = own_idx[fc, i]
            lam = abs(lho[fc, i, 0] * a[0] + lho[fc, i, 1] * a[1]
                      + lho[fc, i, 2] * a[2])
            term = lam * jo[i]
            for j in range(npn):
                term -= Th[i, j] * kp[j]
            out[ii, 0] += -0.25 * coeff * omega * term


@njit(**_JIT)
def scalar_bface_diss_group(u, own_idx, lhat, omega, a, coeff, gu, out):
    nf, no = own_idx.shape
    for fc in range(nf):
        for i in range(no):
            ii = own_idx[fc, i]
            lam = abs(lhat[fc, i, 0] * a[0] + lhat[fc, i, 1] * a[1]
                      + lhat[fc, i, 2] * a[2])
            out[ii, 0] += -0.5 * coeff * omega * lam * (u[ii, 0] - gu[fc, i])


@njit(**_JIT)
def shock_profile_solve(x, vf, alpha, iters=64):
    """Bisection for the normalized shock profile V(x) in (vf, 1)."""
    c2 = (1.0 + vf) / (1.0 - vf)
    half_alpha = 0.5 * alpha
    eps = 1e-15 * (1.0 - vf)
    x1 = x.reshape(-1)
    out = np.empty_like(x1)
    for i in range(x1.shape[0]):
        lo = vf + eps
        hi = 1.0 - eps
        xi = x1[i]
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            pos = half_alpha * (np.log((1.0 - mid) * (mid - vf))
                                + c2 * np.log((1.0 - mid) / (mid - vf)))
            if pos > xi:
                lo = mid
            else:
                hi = mid
        out[i] = 0.5 * (lo + hi)
    return out.reshape(x.shape)
