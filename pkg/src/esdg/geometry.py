"""Perturbed curvilinear hex meshes, metric terms, and the metric constraint solve.

Mesh construction
-----------------
A uniform lattice of hexahedral cells is equipped with per-element polynomial
degrees drawn uniformly from [p_min, p_max] (seeded).  Every lattice face is a
tensor polynomial of degree ``p_face = p_min`` whose control nodes, placed at
LGL points of the face rectangle, are displaced by smooth trigonometric
perturbations (amplitude L/15).  The displacement vanishes identically on the
outer box planes, so the domain stays a perfect box and periodic wrap faces
match exactly.  Interior element coordinates come from transfinite (Coons)
interpolation of the six faces, which keeps shared faces watertight and the
element map a tensor polynomial of degree p_face.

Metric terms
------------
Analytic metrics are the exact cofactors of the polynomial map Jacobian,

    lam[l, m] = J d(xi_l)/d(x_m) = (dx/dxi_{l+1}) x (dx/dxi_{l+2}),

evaluated nodally (indices cyclic).  Surface metrics on a face are the face
restriction of the normal cofactor row; they depend only on the shared face
polynomial and are therefore single valued across interfaces.

Because the cofactors exceed the element degree, their nodal restriction does
not satisfy the discrete metric-divergence (free-stream) constraint.  The
volume metrics are therefore re-solved per element: minimize the norm-weighted
distance to the analytic metrics subject to

    sum_l Q_l^T lam_lm = sum_faces  sigma/2 R^T W (lamhat_own + I lamhat_par),

the element-wise constraint produced by coupling every face against the
specified surface metric data.  Its compatibility condition is the discrete
closure of the surface-metric quadratures, which holds exactly because the
face quadrature (degree 2p-1) integrates the degree 2*p_face-1 surface
metrics exactly.  The constraint system is solved as a minimum-norm
correction through a cached pseudoinverse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

from .coupling import InterpolationPair, build_interpolation_pair
from .sbp import OperatorBank, SbpOp1D

PERTURB_AMPLITUDE = 1.0 / 15.0
GCL_TOL = 1.0e-12
_WALL_SNAP = 1.0e-12


# ---------------------------------------------------------------------------
# tensor Legendre polynomial helpers


def leg_vander(x: np.ndarray, deg: int) -> np.ndarray:
    return npleg.legvander(x, deg)


def leg_dvander(x: np.ndarray, deg: int) -> np.ndarray:
    """Columns are dP_a/dxi evaluated at x."""
    out = np.zeros((x.size, deg + 1))
    for a in range(1, deg + 1):
        c = np.zeros(a + 1)
        c[a] = 1.0
        out[:, a] = npleg.legval(x, npleg.legder(c))
    return out


def nodal_to_coeff(values: np.ndarray, vinv: np.ndarray) -> np.ndarray:
    """Tensor nodal values (n,n,n,...) -> Legendre coefficients."""
    c = np.tensordot(vinv, values, axes=(1, 0))
    c = np.moveaxis(np.tensordot(vinv, np.moveaxis(c, 1, 0), axes=(1, 0)), 0, 1)
    c = np.moveaxis(np.tensordot(vinv, np.moveaxis(c, 2, 0), axes=(1, 0)), 0, 2)
    return c


def eval_coeff(coef: np.ndarray, b1: np.ndarray, b2: np.ndarray, b3: np.ndarray) -> np.ndarray:
    """Evaluate tensor Legendre coefficients on a tensor grid of basis matrices."""
    r = np.tensordot(b1, coef, axes=(1, 0))
    r = np.moveaxis(np.tensordot(b2, np.moveaxis(r, 1, 0), axes=(1, 0)), 0, 1)
    r = np.moveaxis(np.tensordot(b3, np.moveaxis(r, 2, 0), axes=(1, 0)), 0, 2)
    return r


class ElementMap:
    """Degree-p_face tensor polynomial map of one element."""

    def __init__(self, coef: np.ndarray):
        self.coef = coef            # (nf, nf, nf, 3)
        self.deg = coef.shape[0] - 1

    def coords(self, x1, x2, x3) -> np.ndarray:
        d = self.deg
        return eval_coeff(self.coef, leg_vander(x1, d), leg_vander(x2, d),
                          leg_vander(x3, d))

    def jacobian_matrix(self, x1, x2, x3) -> np.ndarray:
        """A[..., m, l] = d x_m / d xi_l on the tensor grid."""
        d = self.deg
        b = [leg_vander(x1, d), leg_vander(x2, d), leg_vander(x3, d)]
        db = [leg_dvander(x1, d), leg_dvander(x2, d), leg_dvander(x3, d)]
        out = np.empty((x1.size, x2.size, x3.size, 3, 3))
        for l in range(3):
            mats = list(b)
            mats[l] = db[l]
            out[..., l] = eval_coeff(self.coef, *mats)
        return out


def metric_terms(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jacobian determinant and cofactor metrics from A[..., m, l].

    Returns (J, lam) with lam[..., l, m] = J d(xi_l)/d(x_m).
    """
    cols = [A[..., 0], A[..., 1], A[..., 2]]
    lam = np.empty_like(A)
    for l in range(3):
        lam[..., l, :] = np.cross(cols[(l + 1) % 3], cols[(l + 2) % 3])
    J = np.einsum("...m,...m->...", cols[0], lam[..., 0, :])
    return J, lam


# ---------------------------------------------------------------------------
# transfinite interpolation of six faces


def _coons_volume(faces: list[list[np.ndarray]], nodes: np.ndarray) -> np.ndarray:
    """Discrete Boolean-sum interpolation of 6 face grids.

    faces[l][s] has shape (nf, nf, 3), indexed by the two tangent axes of
    direction l in ascending axis order; nodes are the 1D control nodes.
    """
    n = nodes.size
    bm = 0.5 * (1.0 - nodes)
    bp = 0.5 * (1.0 + nodes)
    blend = (bm, bp)

    def edge(l_fix1, s1, l_fix2, s2):
        # curve along the remaining axis; extract from the face of l_fix1
        l_free = 3 - l_fix1 - l_fix2
        f = faces[l_fix1][s1]
        # face axes of l_fix1 in ascending order
        ax = [a for a in range(3) if a != l_fix1]
        pos = s2 * (n - 1)
        if ax[0] == l_fix2:
            return f[pos, :, :]
        return f[:, pos, :]

    out = np.zeros((n, n, n, 3))
    # face projectors
    for l in range(3):
        for s in (0, 1):
            f = faces[l][s]
            shp = [1, 1, 1, 1]
            shp[l] = n
            w = blend[s].reshape(shp[:3] + [1])
            fx = np.expand_dims(f, l)
            out += w * fx
    # edge corrections
    for l1 in range(3):
        for l2 in range(l1 + 1, 3):
            for s1 in (0, 1):
                for s2 in (0, 1):
                    e = edge(l1, s1, l2, s2)          # (n, 3) along free axis
                    lf = 3 - l1 - l2
                    shp = [1, 1, 1]
                    shp[lf] = n
                    ecurve = e.reshape(shp + [3])
                    w1 = blend[s1].reshape([n if a == l1 else 1 for a in range(3)] + [1])
                    w2 = blend[s2].reshape([n if a == l2 else 1 for a in range(3)] + [1])
                    out -= w1 * w2 * ecurve
    # corner corrections
    for s1 in (0, 1):
        for s2 in (0, 1):
            for s3 in (0, 1):
                corner = edge(0, s1, 1, s2)[s3 * (n - 1)]
                w = (blend[s1].reshape(n, 1, 1, 1) * blend[s2].reshape(1, n, 1, 1)
                     * blend[s3].reshape(1, 1, n, 1))
                out += w * corner
    return out


# ---------------------------------------------------------------------------
# mesh generation


def _perturb(points: np.ndarray, lo: np.ndarray, hi: np.ndarray,
             amplitude: float) -> np.ndarray:
    """Displace control nodes by the smooth trigonometric mesh perturbation."""
    L = hi - lo
    mid = 0.5 * (lo + hi)
    a = np.pi / L[0] * (points[..., 0] - mid[0])
    b = np.pi / L[1] * (points[..., 1] - mid[1])
    c = np.pi / L[2] * (points[..., 2] - mid[2])
    d = np.empty_like(points)
    d[..., 0] = amplitude * L[0] * np.cos(a) * np.cos(3.0 * b) * np.sin(4.0 * c)
    d[..., 1] = amplitude * L[1] * np.sin(4.0 * a) * np.cos(b) * np.cos(3.0 * c)
    d[..., 2] = amplitude * L[2] * np.cos(3.0 * a) * np.sin(4.0 * b) * np.cos(c)
    # The displacement vanishes analytically on every box plane; zero it there
    # exactly so wrap faces and the box stay watertight to the bit.
    on_wall = np.zeros(points.shape[:-1], dtype=bool)
    for m in range(3):
        on_wall |= np.abs(points[..., m] - lo[m]) < _WALL_SNAP * L[m]
        on_wall |= np.abs(points[..., m] - hi[m]) < _WALL_SNAP * L[m]
    d[on_wall] = 0.0
    return points + d


@dataclass
class HalfFace:
    """One side of an interface (or a tagged boundary face)."""

    elem: int
    axis: int                 # face normal direction 0..2
    side: int                 # 0 = minus face, 1 = plus face
    sigma: float
    partner: int              # partner element id, or -1 for boundary
    boundary: str | None      # None, or tag ("exact", ...)
    local_idx: np.ndarray     # (nface,) indices into the element node block
    lam_hat: np.ndarray       # (nface, 3) surface metrics (own nodes)
    jac_face: np.ndarray      # (nface,)
    coords_face: np.ndarray   # (nface, 3)
    lam_vol_face: np.ndarray | None = None   # filled after the metric solve


@dataclass
class Mesh:
    """Lattice topology, element degrees, and face control polynomials."""

    cells: int
    lo: np.ndarray
    hi: np.ndarray
    p_min: int
    p_max: int
    seed: int
    periodic: bool
    perturb: bool
    degrees: np.ndarray                 # (K,K,K)
    face_ctrl: list[np.ndarray]         # per axis: (K+1, K, K, nf, nf, 3)

    @property
    def p_face(self) -> int:
        return self.p_min

    @property
    def n_elements(self) -> int:
        return self.cells**3

    def cell_of(self, e: int) -> tuple[int, int, int]:
        K = self.cells
        return e // (K * K), (e // K) % K, e % K

    def to_json(self, path) -> None:
        data = {
            "cells": self.cells,
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "p_min": self.p_min,
            "p_max": self.p_max,
            "seed": self.seed,
            "periodic": self.periodic,
            "perturb": self.perturb,
            "degrees": self.degrees.tolist(),
            "face_ctrl": [f.tolist() for f in self.face_ctrl],
        }
        with open(path, "w") as fh:
            json.dump(data, fh)

    @classmethod
    def from_json(cls, path) -> "Mesh":
        with open(path) as fh:
            d = json.load(fh)
        return cls(
            cells=d["cells"], lo=np.array(d["lo"]), hi=np.array(d["hi"]),
            p_min=d["p_min"], p_max=d["p_max"], seed=d["seed"],
            periodic=d["periodic"], perturb=d["perturb"],
            degrees=np.array(d["degrees"], dtype=np.int64),
            face_ctrl=[np.array(f) for f in d["face_ctrl"]],
        )


def generate_mesh(cells: int, lo, hi, p_min: int, p_max: int, seed: int,
                  periodic: bool = True, perturb: bool = True) -> Mesh:
    """Build the perturbed lattice mesh with seeded per-element degrees."""
    if cells < 1:
        raise ValueError("cells must be >= 1")
    if p_max < p_min:
        raise ValueError("p_max must be >= p_min")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    rng = np.random.default_rng(seed)   # PCG64, documented reproducible draw
    degrees = rng.integers(p_min, p_max + 1, size=(cells, cells, cells))

    pf = p_min
    xi, _ = _lgl_cache(pf)
    K = cells
    h = (hi - lo) / K
    face_ctrl = []
    for axis in range(3):
        t1, t2 = [a for a in range(3) if a != axis]
        grid = np.empty((K + 1, K, K, pf + 1, pf + 1, 3))
        for plane in range(K + 1):
            for c1 in range(K):
                for c2 in range(K):
                    pts = np.empty((pf + 1, pf + 1, 3))
                    pts[..., axis] = lo[axis] + plane * h[axis]
                    g1 = lo[t1] + (c1 + 0.5 * (xi + 1.0)) * h[t1]
                    g2 = lo[t2] + (c2 + 0.5 * (xi + 1.0)) * h[t2]
                    pts[..., t1] = g1[:, None]
                    pts[..., t2] = g2[None, :]
                    grid[plane, c1, c2] = pts
        face_ctrl.append(grid)
    if perturb:
        face_ctrl = [_perturb(g, lo, hi, PERTURB_AMPLITUDE) for g in face_ctrl]
    return Mesh(cells=cells, lo=lo, hi=hi, p_min=p_min, p_max=p_max, seed=seed,
                periodic=periodic, perturb=perturb, degrees=degrees,
                face_ctrl=face_ctrl)


_lgl_nodes_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _lgl_cache(p: int):
    if p not in _lgl_nodes_cache:
        from .sbp import lgl_nodes_weights

        _lgl_nodes_cache[p] = lgl_nodes_weights(p)
    return _lgl_nodes_cache[p]


def element_map(mesh: Mesh, e: int) -> ElementMap:
    """Transfinite interpolation of the element's six face polynomials."""
    K = mesh.cells
    ci, cj, ck = mesh.cell_of(e)
    cell = (ci, cj, ck)
    faces = []
    for axis in range(3):
        pair = []
        for side in (0, 1):
            idx = [ci, cj, ck]
            plane = idx[axis] + side
            others = [idx[a] for a in range(3) if a != axis]
            pair.append(mesh.face_ctrl[axis][plane, others[0], others[1]])
        faces.append(pair)
    nodes, _ = _lgl_cache(mesh.p_face)
    vals = _coons_volume(faces, nodes)
    vinv = np.linalg.inv(leg_vander(nodes, mesh.p_face))
    return ElementMap(nodal_to_coeff(vals, vinv))


def face_local_indices(n: int, axis: int, side: int) -> np.ndarray:
    idx = np.arange(n**3).reshape(n, n, n)
    pos = side * (n - 1)
    if axis == 0:
        return np.ascontiguousarray(idx[pos, :, :].ravel())
    if axis == 1:
        return np.ascontiguousarray(idx[:, pos, :].ravel())
    return np.ascontiguousarray(idx[:, :, pos].ravel())


# ---------------------------------------------------------------------------
# the element-wise metric constraint


class _GclSolver:
    """Cached per-degree machinery for the constrained metric solve."""

    def __init__(self, bank: OperatorBank):
        self.bank = bank
        self._cache: dict[int, tuple] = {}

    def get(self, p: int):
        if p not in self._cache:
            op = self.bank.get(p)
            w = op.weights
            n = op.n
            dw = np.diag(w)
            q3 = [
                np.kron(np.kron(op.Q, dw), dw),
                np.kron(np.kron(dw, op.Q), dw),
                np.kron(np.kron(dw, dw), op.Q),
            ]
            C = np.hstack([q.T for q in q3])
            m3 = np.kron(np.kron(w, w), w)
            minv_sqrt = np.tile(1.0 / np.sqrt(m3), 3)
            A = C * minv_sqrt[None, :]
            apinv = np.linalg.pinv(A, rcond=1e-12)
            self._cache[p] = (C, minv_sqrt, apinv, m3)
        return self._cache[p]

    def solve(self, p: int, lam_an: np.ndarray, b: np.ndarray):
        """Minimum-norm correction of lam_an (n3, 3, 3) meeting C lam_m = b_m."""
        C, minv_sqrt, apinv, _ = self.get(p)
        n3 = lam_an.shape[0]
        lam = lam_an.copy()
        worst = 0.0
        for m in range(3):
            stack = lam_an[:, :, m].T.reshape(3 * n3)    # [lam_1m; lam_2m; lam_3m]
            r = b[:, m] - C @ stack
            y = apinv @ r
            delta = minv_sqrt * y
            fixed = stack + delta
            worst = max(worst, np.max(np.abs(C @ fixed - b[:, m])))
            lam[:, :, m] = fixed.reshape(3, n3).T
        return lam, worst


# ---------------------------------------------------------------------------
# assembled discrete geometry


@dataclass
class MeshGeometry:
    """All nodal geometry of a mesh, with constraint-solved volume metrics."""

    mesh: Mesh
    bank: OperatorBank
    order: np.ndarray            # storage order -> element id
    elem_p: np.ndarray           # degree per stored element
    offsets: np.ndarray          # node offset per stored element (+ final total)
    groups: list[tuple[int, int, int]]   # (degree, first stored elem, count)
    coords: np.ndarray           # (ndof, 3)
    jac: np.ndarray              # (ndof,)
    lam_an: np.ndarray           # (ndof, 3, 3) analytic metrics
    lam_vol: np.ndarray          # (ndof, 3, 3) constraint-solved metrics
    faces: list[list[HalfFace]]  # per stored element, 6 half-faces
    interp: dict[tuple[int, int], np.ndarray]  # (p_from, p_to) -> 2D face operator
    gcl_certified: bool
    gcl_worst: float

    @property
    def ndof(self) -> int:
        return int(self.offsets[-1])

    def elem_n(self, es: int) -> int:
        return self.elem_p[es] + 1

    def elem_slice(self, es: int) -> slice:
        return slice(int(self.offsets[es]), int(self.offsets[es + 1]))

    def group_slice(self, first: int, count: int) -> slice:
        return slice(int(self.offsets[first]), int(self.offsets[first + count]))

    def mass(self) -> np.ndarray:
        """Diagonal reference-element norm per node (no Jacobian)."""
        out = np.empty(self.ndof)
        for p, first, count in self.groups:
            w = self.bank.get(p).weights
            m3 = np.kron(np.kron(w, w), w)
            n3 = (p + 1) ** 3
            s = self.offsets[first]
            out[s:s + count * n3] = np.tile(m3, count)
        return out


def _interp_2d(bank: OperatorBank, cache: dict, p_from: int, p_to: int) -> np.ndarray:
    key = (p_from, p_to)
    if key not in cache:
        if p_from == p_to:
            cache[key] = np.eye((p_from + 1) ** 2)
        elif p_from < p_to:
            pair = build_interpolation_pair(bank.get(p_from), bank.get(p_to))
            cache[key] = np.kron(pair.l2h, pair.l2h)
        else:
            pair = build_interpolation_pair(bank.get(p_to), bank.get(p_from))
            cache[key] = np.kron(pair.h2l, pair.h2l)
    return cache[key]


def build_geometry(mesh: Mesh, bank: OperatorBank | None = None,
                   boundary_tag: str = "exact") -> MeshGeometry:
    """Evaluate nodal geometry, pair faces, and solve the metric constraint."""
    if bank is None:
        bank = OperatorBank()
    K = mesh.cells
    nelem = mesh.n_elements
    degrees = mesh.degrees.reshape(-1)
    order = np.argsort(degrees, kind="stable").astype(np.int64)
    inv_order = np.empty_like(order)
    inv_order[order] = np.arange(nelem)
    elem_p = degrees[order]
    sizes = (elem_p + 1) ** 3
    offsets = np.zeros(nelem + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])

    groups = []
    for p in np.unique(elem_p):
        mask = np.where(elem_p == p)[0]
        groups.append((int(p), int(mask[0]), int(mask.size)))

    ndof = int(offsets[-1])
    coords = np.empty((ndof, 3))
    jac = np.empty(ndof)
    lam_an = np.empty((ndof, 3, 3))
    lam_vol = np.empty((ndof, 3, 3))

    maps = [element_map(mesh, int(order[es])) for es in range(nelem)]
    face_geo = []        # per stored element: list of 6 (lam_hat, jac_face, coords)
    for es in range(nelem):
        p = int(elem_p[es])
        n = p + 1
        xi, _ = _lgl_cache(p)
        emap = maps[es]
        A = emap.jacobian_matrix(xi, xi, xi)
        J, lam = metric_terms(A)
        if np.any(J <= 0.0):
            raise ValueError(
                f"non-positive Jacobian in element {int(order[es])} "
                f"(min J = {J.min():.3e}); reduce the mesh perturbation"
            )
        sl = slice(int(offsets[es]), int(offsets[es + 1]))
        coords[sl] = emap.coords(xi, xi, xi).reshape(-1, 3)
        jac[sl] = J.reshape(-1)
        lam_an[sl] = lam.reshape(-1, 3, 3)
        fg = []
        for axis in range(3):
            for side in (0, 1):
                pts = [xi, xi, xi]
                pts[axis] = np.array([-1.0 if side == 0 else 1.0])
                Af = emap.jacobian_matrix(*pts)
                Jf, lamf = metric_terms(Af)
                cf = emap.coords(*pts)
                fg.append((
                    lamf.reshape(-1, 3, 3)[:, axis, :].copy(),
                    Jf.reshape(-1).copy(),
                    cf.reshape(-1, 3).copy(),
                ))
        face_geo.append(fg)

    # face pairing
    def cell_id(i, j, k):
        return (i * K + j) * K + k

    faces: list[list[HalfFace]] = [[] for _ in range(nelem)]
    interp_cache: dict = {}
    for es in range(nelem):
        e = int(order[es])
        ci, cj, ck = mesh.cell_of(e)
        for axis in range(3):
            for side in (0, 1):
                nb = [ci, cj, ck]
                nb[axis] += 1 if side == 1 else -1
                wrapped = nb[axis] < 0 or nb[axis] >= K
                if wrapped and not mesh.periodic:
                    partner = -1
                    btag = boundary_tag
                else:
                    nb[axis] %= K
                    partner = int(inv_order[cell_id(*nb)])
                    btag = None
                n = int(elem_p[es]) + 1
                lam_hat, jfc, cf = face_geo[es][2 * axis + side]
                faces[es].append(HalfFace(
                    elem=es, axis=axis, side=side,
                    sigma=1.0 if side == 1 else -1.0,
                    partner=partner, boundary=btag,
                    local_idx=face_local_indices(n, axis, side),
                    lam_hat=lam_hat, jac_face=jfc, coords_face=cf,
                ))

    # metric constraint: rhs from own + interpolated partner surface metrics
    solver = _GclSolver(bank)
    worst = 0.0
    for es in range(nelem):
        p = int(elem_p[es])
        n = p + 1
        op = bank.get(p)
        wf = np.kron(op.weights, op.weights)
        b = np.zeros((n**3, 3))
        for hf in faces[es]:
            if hf.partner >= 0:
                pf = faces[hf.partner][2 * hf.axis + (1 - hf.side)]
                th = _interp_2d(bank, interp_cache,
                                int(elem_p[hf.partner]), p)
                lam_par = th @ pf.lam_hat
            else:
                lam_par = hf.lam_hat
            contrib = 0.5 * hf.sigma * wf[:, None] * (hf.lam_hat + lam_par)
            np.add.at(b, hf.local_idx, contrib)
        sl = slice(int(offsets[es]), int(offsets[es + 1]))
        lam_vol[sl], res = solver.solve(p, lam_an[sl], b)
        worst = max(worst, res)
    certified = worst <= GCL_TOL
    for es in range(nelem):
        sl_start = int(offsets[es])
        for hf in faces[es]:
            hf.lam_vol_face = lam_vol[sl_start + hf.local_idx, hf.axis, :].copy()

    return MeshGeometry(
        mesh=mesh, bank=bank, order=order, elem_p=elem_p, offsets=offsets,
        groups=groups, coords=coords, jac=jac, lam_an=lam_an, lam_vol=lam_vol,
        faces=faces, interp=interp_cache, gcl_certified=certified,
        gcl_worst=worst,
    )


_solver_registry: dict[int, _GclSolver] = {}


def _gcl_solver_for(geom: MeshGeometry) -> _GclSolver:
    key = id(geom.bank)
    if key not in _solver_registry:
        _solver_registry[key] = _GclSolver(geom.bank)
    return _solver_registry[key]


def gcl_residual(geom: MeshGeometry, es: int, use_analytic: bool = False) -> np.ndarray:
    """Nodal residual fields (n3, 3) of the metric-divergence constraint.

    Presented in derivative form: sum_l D_l lam_lm - norm-weighted face
    forcing from the specified surface metrics; zero (to rounding) for the
    constraint-solved volume metrics.
    """
    p = int(geom.elem_p[es])
    op = geom.bank.get(p)
    n = p + 1
    sl = geom.elem_slice(es)
    lam = geom.lam_an[sl] if use_analytic else geom.lam_vol[sl]
    C, _, _, m3 = _gcl_solver_for(geom).get(p)
    wf = np.kron(op.weights, op.weights)
    b = np.zeros((n**3, 3))
    for hf in geom.faces[es]:
        if hf.partner >= 0:
            pf = geom.faces[hf.partner][2 * hf.axis + (1 - hf.side)]
            th = _interp_2d(geom.bank, geom.interp, int(geom.elem_p[hf.partner]), p)
            lam_par = th @ pf.lam_hat
        else:
            lam_par = hf.lam_hat
        np.add.at(b, hf.local_idx,
                  0.5 * hf.sigma * wf[:, None] * (hf.lam_hat + lam_par))
    out = np.empty((n**3, 3))
    for m in range(3):
        stack = lam[:, :, m].T.reshape(-1)
        out[:, m] = (C @ stack - b[:, m]) / m3
    return out


def max_gcl_residual(geom: MeshGeometry, use_analytic: bool = False) -> float:
    return max(
        float(np.max(np.abs(gcl_residual(geom, es, use_analytic))))
        for es in range(len(geom.elem_p))
    )


def watertightness(geom: MeshGeometry, samples: int = 5) -> float:
    """Worst physical mismatch of shared-face coordinates across interfaces."""
    mesh = geom.mesh
    pts = np.linspace(-1.0, 1.0, samples)
    one = {0: (np.array([1.0]), pts, pts), 1: (pts, np.array([1.0]), pts),
           2: (pts, pts, np.array([1.0]))}
    mone = {0: (np.array([-1.0]), pts, pts), 1: (pts, np.array([-1.0]), pts),
            2: (pts, pts, np.array([-1.0]))}
    worst = 0.0
    L = np.max(mesh.hi - mesh.lo)
    for es in range(len(geom.elem_p)):
        emap = element_map(mesh, int(geom.order[es]))
        for hf in geom.faces[es]:
            if hf.partner < 0 or hf.side == 0:
                continue
            pmap = element_map(mesh, int(geom.order[hf.partner]))
            a = emap.coords(*one[hf.axis]).reshape(-1, 3)
            bpts = pmap.coords(*mone[hf.axis]).reshape(-1, 3)
            diff = a - bpts
            if geom.mesh.periodic:
                # wrap faces differ by exactly one box length in the normal
                span = mesh.hi[hf.axis] - mesh.lo[hf.axis]
                diff[:, hf.axis] = np.minimum(
                    np.abs(diff[:, hf.axis]),
                    np.abs(np.abs(diff[:, hf.axis]) - span),
                )
                worst = max(worst, np.max(np.abs(diff)))
            else:
                worst = max(worst, np.max(np.abs(diff)))
    return worst
