"""Vectorized numpy implementation of the solver kernels.

Reference backend: every function here defines the semantics the numba
backend must reproduce.  Elements of equal polynomial degree are stored
contiguously, so a "group" is the slice ``[start*n^3, (start+count)*n^3)``
of the flat DOF arrays reshaped to ``(count, n, n, n, ...)``.
"""

from __future__ import annotations

import numpy as np

from .common import BETA, KIN, LNBETA, LNRHO, LOGMEAN_EPS, NPRIM, PRES, RHO, TEMP, U1

_VOLUME_CHUNK_BYTES = 64 << 20

# line-extraction permutations of a (ne, n, n, n, ...) block per direction
_PERM = {0: (0, 2, 3, 1), 1: (0, 1, 3, 2), 2: (0, 1, 2, 3)}
_IPERM = {0: (0, 3, 1, 2), 1: (0, 1, 3, 2), 2: (0, 1, 2, 3)}


def _logmean(a, b, lna, lnb):
    """Logarithmic mean with series guard for nearly equal arguments."""
    f = (a - b) / (a + b)
    u = f * f
    big = u >= LOGMEAN_EPS
    fac = 1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0
    out = (a + b) / (2.0 * fac)
    if np.any(big):
        exact = np.divide(a - b, lna - lnb, out=np.ones_like(out), where=big)
        out = np.where(big, exact, out)
    return out


# ---------------------------------------------------------------------------
# tensor-line derivatives


def line_derivative_group(D, base0, count, n, fld, out, add, axis):
    """out[e] (+)= derivative along `axis` of the (n,n,n) element blocks.

    base0 is the flat node offset of the first element of the group.
    """
    n3 = n * n * n
    width = fld.shape[1]
    sl = slice(base0, base0 + count * n3)
    f = fld[sl].reshape(count, n, n, n, width)
    o = out[sl].reshape(count, n, n, n, width)
    fm = f.transpose(_PERM[axis] + (4,))
    r = np.einsum("ij,eabjv->eabiv", D, fm).transpose(_IPERM[axis] + (4,))
    if add:
        o += r
    else:
        o[...] = r


# ---------------------------------------------------------------------------
# derived nodal state


def ns_state_derived(q, gamma, rgas, sref, prim, w):
    """Fill the derived-state table and entropy variables from conserved q."""
    cv = rgas / (gamma - 1.0)
    rho = q[:, 0]
    u1 = q[:, 1] / rho
    u2 = q[:, 2] / rho
    u3 = q[:, 3] / rho
    k = 0.5 * (u1 * u1 + u2 * u2 + u3 * u3)
    e = q[:, 4] / rho - k
    T = e / cv
    p = rho * rgas * T
    prim[:, RHO] = rho
    prim[:, U1] = u1
    prim[:, U1 + 1] = u2
    prim[:, U1 + 2] = u3
    prim[:, PRES] = p
    prim[:, TEMP] = T
    prim[:, BETA] = rho / (2.0 * p)
    with np.errstate(invalid="ignore", divide="ignore"):
        prim[:, LNRHO] = np.log(rho)
        prim[:, LNBETA] = np.log(prim[:, BETA])
        s = cv * np.log(T) - rgas * prim[:, LNRHO] - sref
    prim[:, KIN] = k
    w[:, 0] = rgas + cv - s - k / T
    w[:, 1] = u1 / T
    w[:, 2] = u2 / T
    w[:, 3] = u3 / T
    w[:, 4] = -1.0 / T


def derived_from_conserved(q, gamma, rgas):
    """(rho, u, T) rows from conserved rows (also used on interpolated data)."""
    rho = q[..., 0]
    u = q[..., 1:4] / rho[..., None]
    k = 0.5 * np.einsum("...i,...i->...", u, u)
    T = (q[..., 4] / rho - k) * (gamma - 1.0) / rgas
    return rho, u, T


def prim_rows_from_conserved(q, gamma, rgas):
    """Derived-state rows (shape (..., NPRIM)) from conserved rows."""
    rho, u, T = derived_from_conserved(q, gamma, rgas)
    p = rho * rgas * T
    out = np.empty(q.shape[:-1] + (NPRIM,))
    out[..., RHO] = rho
    out[..., U1:U1 + 3] = u
    out[..., PRES] = p
    out[..., TEMP] = T
    out[..., BETA] = rho / (2.0 * p)
    out[..., LNRHO] = np.log(rho)
    out[..., LNBETA] = np.log(out[..., BETA])
    out[..., KIN] = 0.5 * np.einsum("...i,...i->...", u, u)
    return out


# ---------------------------------------------------------------------------
# entropy-consistent two-point fluxes


def _ec_flux(pi, pj, lam, gamma):
    """Metric-weighted entropy-consistent two-point flux.

    pi, pj: (..., NPRIM) derived states; lam: (..., 3) metric vector paired
    with the node pair.  Returns (..., 5).
    """
    rho_ln = _logmean(pi[..., RHO], pj[..., RHO], pi[..., LNRHO], pj[..., LNRHO])
    beta_ln = _logmean(pi[..., BETA], pj[..., BETA], pi[..., LNBETA], pj[..., LNBETA])
    ub = 0.5 * (pi[..., U1:U1 + 3] + pj[..., U1:U1 + 3])
    ptil = (pi[..., RHO] + pj[..., RHO]) / (2.0 * (pi[..., BETA] + pj[..., BETA]))
    kbar = 0.5 * (pi[..., KIN] + pj[..., KIN])
    vlam = np.einsum("...m,...m->...", lam, ub)
    fmass = rho_ln * vlam
    out = np.empty(np.broadcast_shapes(pi.shape[:-1], pj.shape[:-1], lam.shape[:-1]) + (5,))
    out[..., 0] = fmass
    out[..., 1:4] = ub * fmass[..., None] + lam * ptil[..., None]
    common = (1.0 / (2.0 * (gamma - 1.0) * beta_ln) - kbar
              + np.einsum("...m,...m->...", ub, ub))
    out[..., 4] = fmass * common + ptil * vlam
    return out


def _own_flux(p, lam, gamma):
    """Metric-contracted Euler flux sum_m lam_m f_m(q) of single states."""
    u = p[..., U1:U1 + 3]
    vlam = np.einsum("...m,...m->...", lam, u)
    rho = p[..., RHO]
    pres = p[..., PRES]
    E = pres / (gamma - 1.0) + rho * p[..., KIN]
    out = np.empty(p.shape[:-1] + (5,))
    out[..., 0] = rho * vlam
    out[..., 1:4] = rho[..., None] * u * vlam[..., None] + lam * pres[..., None]
    out[..., 4] = (E + pres) * vlam
    return out


def ns_volume_group(D, base0, count, n, prim, lamv, gamma, out):
    """Two-point flux differencing of the entropy-consistent flux.

    out_i -= sum_l sum_j 2 D_l(i,j) F*(q_i, q_j; (lam_i + lam_j)/2)
    accumulated over the three tensor directions of every element.
    """
    n3 = n * n * n
    per_elem = n3 * n * NPRIM * 8 * 6
    chunk = max(1, _VOLUME_CHUNK_BYTES // per_elem)
    for c0 in range(0, count, chunk):
        c1 = min(count, c0 + chunk)
        ne = c1 - c0
        sl = slice(base0 + c0 * n3, base0 + c1 * n3)
        p = prim[sl].reshape(ne, n, n, n, NPRIM)
        lam = lamv[sl].reshape(ne, n, n, n, 3, 3)
        o = out[sl].reshape(ne, n, n, n, 5)
        for axis in range(3):
            pm = p.transpose(_PERM[axis] + (4,)).reshape(ne, n * n, n, NPRIM)
            lm = lam[..., axis, :].transpose(_PERM[axis] + (4,)).reshape(ne, n * n, n, 3)
            pi = pm[:, :, :, None, :]
            pj = pm[:, :, None, :, :]
            lbar = 0.5 * (lm[:, :, :, None, :] + lm[:, :, None, :, :])
            fbar = _ec_flux(pi, pj, lbar, gamma)            # (ne, n^2, n, n, 5)
            contrib = -2.0 * np.einsum("ij,eLijv->eLiv", D, fbar)
            contrib = contrib.reshape(ne, n, n, n, 5).transpose(_IPERM[axis] + (4,))
            o += contrib


def ns_face_ec_group(prim, own_idx, par_idx, Th, lho, lhp, lvf, sigma, omega,
                     gamma, out):
    """Nonconforming entropy-consistent interface coupling (one side).

    out[own] += sigma * omega * (F_own - Fhat) with the numerical flux
    Fhat_i = sum_j Th_ij F*(q_i, q_j; (lhat_own_i + lhat_par_j)/2) and the
    own flux contracted with the volume metrics at the face.
    """
    po = prim[own_idx]                          # (nf, no, NPRIM)
    pp = prim[par_idx]                          # (nf, np, NPRIM)
    pi = po[:, :, None, :]
    pj = pp[:, None, :, :]
    lbar = 0.5 * (lho[:, :, None, :] + lhp[:, None, :, :])
    fstar = _ec_flux(pi, pj, lbar, gamma)       # (nf, no, np, 5)
    fhat = np.einsum("ij,fijv->fiv", Th, fstar)
    fown = _own_flux(po, lvf, gamma)
    np.add.at(out, own_idx, (sigma[:, None, None] * omega) * (fown - fhat))


def ns_bface_ec_group(prim, own_idx, lhat, lvf, sigma, omega, gamma, gprim, out):
    """Boundary analogue of the interface coupling against ghost states."""
    po = prim[own_idx]
    fstar = _ec_flux(po, gprim, lhat, gamma)
    fown = _own_flux(po, lvf, gamma)
    np.add.at(out, own_idx, (sigma[:, None, None] * omega) * (fown - fstar))


# ---------------------------------------------------------------------------
# LDG gradients and viscous fluxes


def theta_face_group(w, own_idx, par_idx, Th, sigma, lf, omega, theta):
    """Gradient interface penalty: theta[own, lf] -= sigma*omega/2 (w - Th w_par)."""
    wo = w[own_idx]
    wp = np.einsum("ij,fjv->fiv", Th, w[par_idx])
    pen = (-0.5 * omega) * sigma[:, None, None] * (wo - wp)
    for f in range(own_idx.shape[0]):
        theta[own_idx[f], lf[f]] += pen[f]


def theta_bface_group(w, own_idx, sigma, lf, omega, gw, theta):
    pen = (-0.5 * omega) * sigma[:, None, None] * (w[own_idx] - gw)
    for f in range(own_idx.shape[0]):
        theta[own_idx[f], lf[f]] += pen[f]


def visc_flux_cart(rho, u, T, mu, kth, om):
    """Cartesian viscous fluxes from entropy-variable gradients.

    om[..., j, c] = d w_c / d x_j.  Returns FV[..., m, c]; the energy row
    carries tau.u plus Fourier conduction +kth dT/dx_m, the sign required
    for the quadratic entropy dissipation term to be semi-definite.
    """
    dT = T[..., None] ** 2 * om[..., :, 4]                   # (..., j)
    du = T[..., None, None] * (om[..., :, 1:4] + u[..., None, :] * om[..., :, 4:5])
    # du[..., j, i] = d u_i / d x_j
    div = du[..., 0, 0] + du[..., 1, 1] + du[..., 2, 2]
    fv = np.zeros(om.shape[:-2] + (3, 5))
    for m in range(3):
        acc = 0.0
        for i in range(3):
            tau = mu * (du[..., m, i] + du[..., i, m])
            if i == m:
                tau = tau - mu * (2.0 / 3.0) * div
            fv[..., m, 1 + i] = tau
            acc = acc + tau * u[..., i]
        fv[..., m, 4] = acc + kth * dT[..., m]
    return fv


def ns_viscous_flux_all(prim, theta, lam_an, jac, mu, kth, g):
    """Contravariant viscous fluxes g_l = sum_a Chat_{l,a} theta_a (all nodes)."""
    om = np.einsum("naj,nav->njv", lam_an, theta) / jac[:, None, None]
    fv = visc_flux_cart(prim[:, RHO], prim[:, U1:U1 + 3], prim[:, TEMP], mu, kth, om)
    g[...] = np.einsum("nlm,nmv->nlv", lam_an, fv)


def gdiv_face_group(g, own_idx, par_idx, Th, sigma, lf, omega, out):
    """Viscous divergence interface term: out[own] -= sigma*omega/2 (g - Th g_par)."""
    for f in range(own_idx.shape[0]):
        go = g[own_idx[f], lf[f]]
        gp = Th @ g[par_idx[f], lf[f]]
        out[own_idx[f]] += (-0.5 * omega * sigma[f]) * (go - gp)


def gdiv_bface_group(g, own_idx, sigma, lf, omega, gvisc, out):
    for f in range(own_idx.shape[0]):
        go = g[own_idx[f], lf[f]]
        out[own_idx[f]] += (-0.5 * omega * sigma[f]) * (go - gvisc[f])


def _chat_nn_apply(rho, u, T, nv, jac, mu, kth, vec):
    """Face-normal viscous coefficient (1/J) n.C.n^T applied to vec."""
    om = nv[..., :, None] * vec[..., None, :] / jac[..., None, None]
    fv = visc_flux_cart(rho, u, T, mu, kth, om)
    return np.einsum("...m,...mv->...v", nv, fv)


def ns_face_ip_group(w, q, own_idx, par_idx, Th, Thp, lho, lhp, jfo, jfp,
                     omega, mu, kth, gamma, rgas, coeff, conforming, out):
    """Interior-penalty interface dissipation (one side).

    out[own] += -coeff/2 * omega * [K_o j_o - Th (K_p j_p)], with jumps
    j_o = w_o - Th w_p, j_p = w_p - Thp w_o and K the face-normal viscous
    coefficient averaged between the trace state and the interpolated
    opposite state, divided by the face Jacobian.
    """
    wo = w[own_idx]
    wp = w[par_idx]
    jo = wo - np.einsum("ij,fjv->fiv", Th, wp)
    jp = wp - np.einsum("ij,fjv->fiv", Thp, wo)
    qo = q[own_idx]
    qp = q[par_idx]
    qip_o = np.einsum("ij,fjv->fiv", Th, qp)
    qip_p = np.einsum("ij,fjv->fiv", Thp, qo)
    ro, uo, To = derived_from_conserved(qo, gamma, rgas)
    r1, u1_, T1 = derived_from_conserved(qip_o, gamma, rgas)
    rp, up, Tp = derived_from_conserved(qp, gamma, rgas)
    r2, u2_, T2 = derived_from_conserved(qip_p, gamma, rgas)
    ko = 0.5 * (_chat_nn_apply(ro, uo, To, lho, jfo, mu, kth, jo)
                + _chat_nn_apply(r1, u1_, T1, lho, jfo, mu, kth, jo))
    kp = 0.5 * (_chat_nn_apply(rp, up, Tp, lhp, jfp, mu, kth, jp)
                + _chat_nn_apply(r2, u2_, T2, lhp, jfp, mu, kth, jp))
    term = ko - np.einsum("ij,fjv->fiv", Th, kp)
    np.add.at(out, own_idx, (-0.5 * coeff * omega) * term)


def ns_bface_ip_group(w, q, own_idx, lhat, jf, omega, mu, kth, gamma, rgas,
                      coeff, gq, gw, out):
    jo = w[own_idx] - gw
    ro, uo, To = derived_from_conserved(q[own_idx], gamma, rgas)
    rg, ug, Tg = derived_from_conserved(gq, gamma, rgas)
    k = 0.5 * (_chat_nn_apply(ro, uo, To, lhat, jf, mu, kth, jo)
               + _chat_nn_apply(rg, ug, Tg, lhat, jf, mu, kth, jo))
    np.add.at(out, own_idx, (-coeff * omega) * k)


def a0_apply(q, gamma, rgas, vec):
    """Symmetric entropy Jacobian dq/dw applied to vec (rows of q)."""
    rho = q[..., 0]
    m = q[..., 1:4]
    E = q[..., 4]
    u = m / rho[..., None]
    k = 0.5 * np.einsum("...i,...i->...", u, u)
    p = (gamma - 1.0) * (E - rho * k)
    H = (E + p) / rho
    v0 = vec[..., 0]
    vu = vec[..., 1:4]
    v4 = vec[..., 4]
    udv = np.einsum("...i,...i->...", u, vu)
    out = np.empty_like(vec)
    out[..., 0] = rho * v0 + np.einsum("...i,...i->...", m, vu) + E * v4
    out[..., 1:4] = (m * v0[..., None] + rho[..., None] * u * udv[..., None]
                     + p[..., None] * vu + (E + p)[..., None] * u * v4[..., None])
    a44 = rho * H * H - gamma * p * p / ((gamma - 1.0) * rho)
    out[..., 4] = E * v0 + (E + p) * udv + a44 * v4
    return out / rgas


def _max_wavespeed(q, gamma, rgas, nv):
    rho, u, T = derived_from_conserved(q, gamma, rgas)
    c = np.sqrt(gamma * rgas * np.maximum(T, 1e-300))
    un = np.einsum("...m,...m->...", nv, u)
    return np.abs(un) + c * np.sqrt(np.einsum("...m,...m->...", nv, nv))


def ns_face_diss_group(w, q, own_idx, par_idx, Th, Thp, lho, lhp, omega,
                       gamma, rgas, coeff, conforming, out):
    """Lax-Friedrichs style interface dissipation in entropy variables.

    Same adjoint structure as the interior penalty; the coefficient is
    lambda_max * dq/dw from the trace and interpolated-opposite states,
    which keeps the entropy contraction non-positive.
    """
    wo = w[own_idx]
    wp = w[par_idx]
    jo = wo - np.einsum("ij,fjv->fiv", Th, wp)
    jp = wp - np.einsum("ij,fjv->fiv", Thp, wo)
    qo = q[own_idx]
    qp = q[par_idx]
    qip_o = np.einsum("ij,fjv->fiv", Th, qp)
    qip_p = np.einsum("ij,fjv->fiv", Thp, qo)
    lam_o = np.maximum(_max_wavespeed(qo, gamma, rgas, lho),
                       _max_wavespeed(qip_o, gamma, rgas, lho))
    lam_p = np.maximum(_max_wavespeed(qp, gamma, rgas, lhp),
                       _max_wavespeed(qip_p, gamma, rgas, lhp))
    ko = lam_o[..., None] * 0.5 * (a0_apply(qo, gamma, rgas, jo)
                                   + a0_apply(qip_o, gamma, rgas, jo))
    kp = lam_p[..., None] * 0.5 * (a0_apply(qp, gamma, rgas, jp)
                                   + a0_apply(qip_p, gamma, rgas, jp))
    term = ko - np.einsum("ij,fjv->fiv", Th, kp)
    np.add.at(out, own_idx, (-0.25 * coeff * omega) * term)


def ns_bface_diss_group(w, q, own_idx, lhat, omega, gamma, rgas, coeff, gq, gw, out):
    jo = w[own_idx] - gw
    qo = q[own_idx]
    lam = np.maximum(_max_wavespeed(qo, gamma, rgas, lhat),
                     _max_wavespeed(gq, gamma, rgas, lhat))
    k = lam[..., None] * 0.5 * (a0_apply(qo, gamma, rgas, jo)
                                + a0_apply(gq, gamma, rgas, jo))
    np.add.at(out, own_idx, (-0.5 * coeff * omega) * k)


# ---------------------------------------------------------------------------
# scalar convection-diffusion counterparts


def scalar_volume_group(D, base0, count, n, u, lamv, a, out):
    """Central (energy-conservative) flux differencing for the scalar problem."""
    n3 = n * n * n
    sl = slice(base0, base0 + count * n3)
    ub = u[sl].reshape(count, n, n, n)
    lb = lamv[sl].reshape(count, n, n, n, 3, 3)
    ob = out[sl].reshape(count, n, n, n)
    for axis in range(3):
        um = ub.transpose(_PERM[axis]).reshape(count, n * n, n)
        al = np.einsum("...m,m->...", lb[..., axis, :], a)
        lm = al.transpose(_PERM[axis]).reshape(count, n * n, n)
        fbar = (0.25 * (lm[:, :, :, None] + lm[:, :, None, :])
                * (um[:, :, :, None] + um[:, :, None, :]))
        contrib = -2.0 * np.einsum("ij,eLij->eLi", D, fbar)
        ob += contrib.reshape(count, n, n, n).transpose(_IPERM[axis])


def scalar_face_ec_group(u, own_idx, par_idx, Th, lho, lhp, lvf, sigma, omega,
                         a, out):
    uo = u[own_idx, 0]
    up = u[par_idx, 0]
    alo = lho @ a
    alp = lhp @ a
    alv = lvf @ a
    fstar = (0.25 * (alo[:, :, None] + alp[:, None, :])
             * (uo[:, :, None] + up[:, None, :]))
    fhat = np.einsum("ij,fij->fi", Th, fstar)
    np.add.at(out[:, 0], own_idx, sigma[:, None] * omega * (alv * uo - fhat))


def scalar_bface_ec_group(u, own_idx, lhat, lvf, sigma, omega, a, gu, out):
    uo = u[own_idx, 0]
    fstar = (lhat @ a) * 0.5 * (uo + gu)
    np.add.at(out[:, 0], own_idx, sigma[:, None] * omega * ((lvf @ a) * uo - fstar))


def scalar_viscous_flux_all(theta, lam_an, jac, bcoef, g):
    """g_l = sum_a Chat_la theta_a with Chat_la = sum_m lam_lm lam_am B_m / J."""
    om = np.einsum("naj,na->nj", lam_an, theta[:, :, 0]) / jac[:, None]
    g[:, :, 0] = np.einsum("nlm,m,nm->nl", lam_an, bcoef, om)


def _scalar_knn(lhat, jf, bcoef):
    return np.einsum("...m,m,...m->...", lhat, bcoef, lhat) / jf


def scalar_face_ip_group(u, own_idx, par_idx, Th, Thp, lho, lhp, jfo, jfp,
                         omega, bcoef, coeff, out):
    uo = u[own_idx, 0]
    up = u[par_idx, 0]
    jo = uo - np.einsum("ij,fj->fi", Th, up)
    jp = up - np.einsum("ij,fj->fi", Thp, uo)
    ko = _scalar_knn(lho, jfo, bcoef) * jo
    kp = _scalar_knn(lhp, jfp, bcoef) * jp
    term = ko - np.einsum("ij,fj->fi", Th, kp)
    np.add.at(out[:, 0], own_idx, (-0.5 * coeff * omega) * term)


def scalar_bface_ip_group(u, own_idx, lhat, jf, omega, bcoef, coeff, gu, out):
    jo = u[own_idx, 0] - gu
    k = _scalar_knn(lhat, jf, bcoef) * jo
    np.add.at(out[:, 0], own_idx, (-coeff * omega) * k)


def scalar_face_diss_group(u, own_idx, par_idx, Th, Thp, lho, lhp, omega, a,
                           coeff, out):
    uo = u[own_idx, 0]
    up = u[par_idx, 0]
    jo = uo - np.einsum("ij,fj->fi", Th, up)
    jp = up - np.einsum("ij,fj->fi", Thp, uo)
    term = np.abs(lho @ a) * jo - np.einsum("ij,fj->fi", Th, np.abs(lhp @ a) * jp)
    np.add.at(out[:, 0], own_idx, (-0.25 * coeff * omega) * term)


def scalar_bface_diss_group(u, own_idx, lhat, omega, a, coeff, gu, out):
    jo = u[own_idx, 0] - gu
    np.add.at(out[:, 0], own_idx, (-0.5 * coeff * omega) * (np.abs(lhat @ a) * jo))


# ---------------------------------------------------------------------------
# auxiliary: implicit viscous-shock profile inversion


def shock_profile_solve(x, vf, alpha, iters=64):
    """Bisection for the normalized shock profile V(x) in (vf, 1)."""
    c2 = (1.0 + vf) / (1.0 - vf)
    half_alpha = 0.5 * alpha
    eps = 1e-15 * (1.0 - vf)
    lo = np.full_like(x, vf + eps, dtype=float)
    hi = np.full_like(x, 1.0 - eps, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = half_alpha * (np.log((1.0 - mid) * (mid - vf))
                            + c2 * np.log((1.0 - mid) / (mid - vf)))
        too_left = pos > x
        lo = np.where(too_left, mid, lo)
        hi = np.where(too_left, hi, mid)
    return 0.5 * (lo + hi)
