import numpy as np
import pytest

from esdg.geometry import (ElementMap, build_geometry, element_map,
                           generate_mesh, gcl_residual, max_gcl_residual,
                           metric_terms, watertightness)
from esdg.sbp import OperatorBank


def small_mesh(cells=2, p_min=2, p_max=3, seed=7, periodic=True, perturb=True):
    return generate_mesh(cells, [0, 0, 0], [1, 1, 1], p_min, p_max, seed=seed,
                         periodic=periodic, perturb=perturb)


def test_identity_map_metrics():
    nodes = np.array([-1.0, 0.0, 1.0])
    vals = np.stack(np.meshgrid(nodes, nodes, nodes, indexing="ij"), axis=-1)
    from esdg.geometry import leg_vander, nodal_to_coeff

    vinv = np.linalg.inv(leg_vander(nodes, 2))
    emap = ElementMap(nodal_to_coeff(vals, vinv))
    A = emap.jacobian_matrix(nodes, nodes, nodes)
    J, lam = metric_terms(A)
    assert np.max(np.abs(J - 1.0)) < 1e-13
    for l in range(3):
        for m in range(3):
            assert np.max(np.abs(lam[..., l, m] - (1.0 if l == m else 0.0))) < 1e-13


def test_uniform_scaling_metrics():
    nodes = np.array([-1.0, 0.0, 1.0])
    grid = np.stack(np.meshgrid(nodes, nodes, nodes, indexing="ij"), axis=-1)
    from esdg.geometry import leg_vander, nodal_to_coeff

    vinv = np.linalg.inv(leg_vander(nodes, 2))
    emap = ElementMap(nodal_to_coeff(2.0 * grid, vinv))
    J, lam = metric_terms(emap.jacobian_matrix(nodes, nodes, nodes))
    assert np.max(np.abs(J - 8.0)) < 1e-12
    for l in range(3):
        assert np.max(np.abs(lam[..., l, l] - 4.0)) < 1e-12


def test_metrics_match_finite_differences():
    mesh = small_mesh(cells=2, p_min=2, p_max=2, seed=5)
    emap = element_map(mesh, 3)
    pts = np.array([-0.37, 0.11, 0.62])
    A = emap.jacobian_matrix(pts[:1], pts[1:2], pts[2:3])[0, 0, 0]
    h = 1e-5
    for l in range(3):
        dx = np.zeros(3)
        dx[l] = h
        xp = emap.coords(*(pts + dx)[:, None])[0, 0, 0]
        xm = emap.coords(*(pts - dx)[:, None])[0, 0, 0]
        fd = (xp - xm) / (2 * h)
        assert np.max(np.abs(A[:, l] - fd)) < 1e-6


def test_perturbation_vanishes_at_center_and_walls():
    from esdg.geometry import _perturb

    lo = np.zeros(3)
    hi = np.ones(3)
    center = np.array([[0.5, 0.5, 0.5]])
    assert np.max(np.abs(_perturb(center, lo, hi, 1 / 15.0) - center)) == 0.0
    wall = np.array([[0.0, 0.3, 0.7], [1.0, 0.2, 0.9], [0.4, 1.0, 0.1]])
    assert np.max(np.abs(_perturb(wall, lo, hi, 1 / 15.0) - wall)) == 0.0


def test_zero_amplitude_gives_affine_lattice():
    mesh = small_mesh(perturb=False)
    geom = build_geometry(mesh)
    assert np.max(np.abs(geom.jac - geom.jac[0])) < 1e-13
    assert geom.gcl_certified
    assert np.max(np.abs(geom.lam_vol - geom.lam_an)) < 1e-13


def test_watertight_interfaces():
    geom = build_geometry(small_mesh(cells=3, p_min=2, p_max=3, seed=11))
    assert watertightness(geom) < 1e-12


def test_degree_draw_reproducible():
    m1 = small_mesh(cells=3, p_min=2, p_max=3, seed=42)
    m2 = small_mesh(cells=3, p_min=2, p_max=3, seed=42)
    assert np.array_equal(m1.degrees, m2.degrees)
    m3 = small_mesh(cells=3, p_min=2, p_max=3, seed=43)
    assert not np.array_equal(m1.degrees, m3.degrees)


def test_gcl_solved_to_tolerance():
    geom = build_geometry(small_mesh(cells=3, p_min=2, p_max=3, seed=7))
    assert geom.gcl_certified
    assert max_gcl_residual(geom) <= 1e-12
    # analytic metrics do not satisfy the constraint on curved elements
    assert max_gcl_residual(geom, use_analytic=True) > 1e-4


def test_gcl_residual_zero_on_affine():
    geom = build_geometry(small_mesh(perturb=False))
    assert max_gcl_residual(geom, use_analytic=True) < 1e-13


def test_metric_solve_is_projection():
    """Re-solving with the solved metrics as the target leaves them unchanged."""
    from esdg.geometry import _GclSolver

    mesh = small_mesh(cells=2, p_min=2, p_max=2, seed=9)
    geom = build_geometry(mesh)
    solver = _GclSolver(geom.bank)
    es = 0
    p = int(geom.elem_p[es])
    n3 = (p + 1) ** 3
    sl = geom.elem_slice(es)
    C, _, _, _ = solver.get(p)
    b = np.empty((n3, 3))
    for m in range(3):
        b[:, m] = C @ geom.lam_vol[sl][:, :, m].T.reshape(-1)
    lam2, res = solver.solve(p, geom.lam_vol[sl], b)
    assert res < 1e-13
    assert np.max(np.abs(lam2 - geom.lam_vol[sl])) < 1e-13


def test_metric_solve_matches_dense_kkt_oracle():
    """Minimum-norm correction equals the dense KKT solution."""
    from esdg.geometry import _GclSolver, _interp_2d

    mesh = small_mesh(cells=1, p_min=2, p_max=2, seed=3)
    geom = build_geometry(mesh)
    bank = geom.bank
    solver = _GclSolver(bank)
    p = 2
    n3 = 27
    C, _, _, m3 = solver.get(p)
    op = bank.get(p)
    wf = np.kron(op.weights, op.weights)
    es = 0
    b = np.zeros((n3, 3))
    for hf in geom.faces[es]:
        pf = geom.faces[hf.partner][2 * hf.axis + (1 - hf.side)]
        th = _interp_2d(bank, geom.interp, p, p)
        np.add.at(b, hf.local_idx,
                  0.5 * hf.sigma * wf[:, None] * (hf.lam_hat + th @ pf.lam_hat))
    lam_an = geom.lam_an[geom.elem_slice(es)]
    lam, res = solver.solve(p, lam_an, b)
    assert res <= 1e-12
    Mw = np.diag(np.tile(m3, 3))
    for m in range(3):
        target = lam_an[:, :, m].T.reshape(-1)
        kkt = np.block([[2.0 * Mw, C.T], [C, np.zeros((n3, n3))]])
        rhs = np.concatenate([2.0 * Mw @ target, b[:, m]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        lam_kkt = sol[:3 * n3]
        got = lam[:, :, m].T.reshape(-1)
        assert np.max(np.abs(got - lam_kkt)) < 1e-10
        # KKT residual of the returned point
        mu = sol[3 * n3:]
        kkt_res = 2.0 * Mw @ (got - target) + C.T @ mu
        assert np.max(np.abs(kkt_res)) < 1e-10


def test_nonpositive_jacobian_rejected(monkeypatch):
    # a perturbation far past the fold limit keeps faces consistent but
    # inverts elements
    monkeypatch.setattr("esdg.geometry.PERTURB_AMPLITUDE", 2.0)
    mesh = small_mesh(cells=3, p_min=2, p_max=2, seed=0, perturb=True)
    with pytest.raises(ValueError, match="Jacobian"):
        build_geometry(mesh)


def test_transfinite_map_reproduces_faces_exactly():
    mesh = small_mesh(cells=2, p_min=2, p_max=2, seed=5)
    from esdg.geometry import _lgl_cache, element_map

    nodes, _ = _lgl_cache(2)
    e = 3
    emap = element_map(mesh, e)
    ci, cj, ck = mesh.cell_of(e)
    for axis in range(3):
        for side in (0, 1):
            idx = [ci, cj, ck]
            plane = idx[axis] + side
            others = [idx[a] for a in range(3) if a != axis]
            fc = mesh.face_ctrl[axis][plane, others[0], others[1]]
            pts = [nodes, nodes, nodes]
            pts[axis] = np.array([-1.0 if side == 0 else 1.0])
            got = np.squeeze(emap.coords(*pts), axis=axis)
            assert np.array_equal(got, fc)


def test_mesh_json_roundtrip(tmp_path):
    mesh = small_mesh(cells=2, p_min=2, p_max=3, seed=13)
    path = tmp_path / "mesh.json"
    mesh.to_json(path)
    from esdg.geometry import Mesh

    back = Mesh.from_json(path)
    assert back.cells == mesh.cells
    assert np.array_equal(back.degrees, mesh.degrees)
    for a, b in zip(back.face_ctrl, mesh.face_ctrl):
        assert np.array_equal(a, b)
    g1 = build_geometry(mesh)
    g2 = build_geometry(back)
    assert np.array_equal(g1.coords, g2.coords)
