"""Shared dense-assembly oracles for the semidiscretization tests."""

import numpy as np

from esdg.geometry import MeshGeometry, _interp_2d


def dense_norm(geom: MeshGeometry) -> np.ndarray:
    return geom.mass()


def dense_coupled_q(geom: MeshGeometry, axis: int) -> np.ndarray:
    """Global dense Q-operator for one direction, with every treated face
    replaced by the norm-compatible interface coupling.

    Rows/cols follow the flat DOF order.  Untagged boundary faces keep their
    boundary-matrix contribution; interface faces carry
    0.5 * sigma * W_i Theta_ij into the partner columns.
    """
    nd = geom.ndof
    Q = np.zeros((nd, nd))
    for es in range(len(geom.elem_p)):
        p = int(geom.elem_p[es])
        op = geom.bank.get(p)
        dw = np.diag(op.weights)
        mats = {0: (op.S, dw, dw), 1: (dw, op.S, dw), 2: (dw, dw, op.S)}[axis]
        s3 = np.kron(np.kron(mats[0], mats[1]), mats[2])
        sl = geom.elem_slice(es)
        Q[sl, sl] += s3
        for hf in geom.faces[es]:
            if hf.axis != axis:
                continue
            base = int(geom.offsets[es])
            rows = base + hf.local_idx
            wf = np.kron(op.weights, op.weights)
            if hf.partner >= 0:
                pf = geom.faces[hf.partner][2 * axis + (1 - hf.side)]
                pp = int(geom.elem_p[hf.partner])
                th = _interp_2d(geom.bank, geom.interp, pp, p)
                cols = int(geom.offsets[hf.partner]) + pf.local_idx
                Q[np.ix_(rows, cols)] += 0.5 * hf.sigma * wf[:, None] * th
            elif hf.boundary is None:
                # untreated outer face: keep the boundary matrix
                Q[np.ix_(rows, rows)] += 0.5 * hf.sigma * np.diag(wf)
    return Q


def dense_coupled_d(geom: MeshGeometry, axis: int) -> np.ndarray:
    return dense_coupled_q(geom, axis) / dense_norm(geom)[:, None]
