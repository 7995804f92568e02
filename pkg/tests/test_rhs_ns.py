import numpy as np
import pytest

from esdg.geometry import build_geometry, generate_mesh
from esdg.physics import (AdmissibilityError, GasModel, conserved,
                          curvilinear_viscous_coeffs, entropy_and_vars)
from esdg.problems import FreestreamProblem
from esdg.rhs import NavierStokesRhs, RhsBreakdown, SchemeConfig

from helpers import dense_coupled_d

GAS = GasModel(gamma=1.4, rgas=1.0, prandtl=0.72, mu=0.05)
GAS0 = GasModel(gamma=1.4, rgas=1.0, prandtl=0.72, mu=0.0)


def make(cells=2, p_min=2, p_max=3, seed=3, perturb=True, periodic=True,
         boundary_tag="exact"):
    mesh = generate_mesh(cells, [0, 0, 0], [1, 1, 1], p_min, p_max, seed=seed,
                         periodic=periodic, perturb=perturb)
    return build_geometry(mesh, boundary_tag=boundary_tag)


def smooth_state(geom, gas=GAS, amp=0.2):
    x = geom.coords
    rho = 1.0 + amp * np.sin(2 * np.pi * x[:, 0]) * np.cos(2 * np.pi * x[:, 1])
    T = 1.0 + amp * 0.75 * np.cos(2 * np.pi * x[:, 2])
    u = 0.3 * np.stack([np.sin(2 * np.pi * x[:, 1]),
                        np.cos(2 * np.pi * x[:, 2]),
                        np.sin(2 * np.pi * x[:, 0])], axis=-1)
    return conserved(rho, u, T, gas)


def random_state(geom, rng, gas=GAS):
    rho = rng.uniform(0.5, 2.0, geom.ndof)
    T = rng.uniform(0.5, 2.0, geom.ndof)
    u = rng.uniform(-1.0, 1.0, (geom.ndof, 3))
    return conserved(rho, u, T, gas)


# -- free stream -------------------------------------------------------------


@pytest.mark.parametrize("mode", ["ec", "es"])
def test_freestream_preserved_periodic(mode):
    geom = make(cells=3, p_min=2, p_max=3, seed=7)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode=mode))
    q = np.tile(conserved(1.0, np.array([0.1, 0.2, -0.3]), 1.0, GAS),
                (geom.ndof, 1))
    r = rhs.rhs(0.0, q, breakdown=True)
    assert np.max(np.abs(r.total)) <= 1e-10
    assert r.gcl_certified


def test_freestream_preserved_with_boundary_sats():
    geom = make(cells=2, p_min=2, p_max=3, seed=9, periodic=False)
    prob = FreestreamProblem(GAS)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"), boundary=prob)
    q = prob.initial(geom.coords)
    r = rhs.rhs(0.0, q)
    assert np.max(np.abs(r)) <= 1e-10


def test_freestream_fails_without_metric_solve():
    """Using raw analytic metrics must break free-stream preservation.

    Needs cells=3: on a 2-lattice the face perturbation happens to vanish at
    every face control node, leaving an affine mesh whose analytic metrics
    are already feasible.
    """
    geom = make(cells=3, p_min=2, p_max=2, seed=7)
    geom.lam_vol[...] = geom.lam_an
    for es in range(len(geom.elem_p)):
        base = int(geom.offsets[es])
        for hf in geom.faces[es]:
            hf.lam_vol_face = geom.lam_vol[base + hf.local_idx, hf.axis, :]
    rhs = NavierStokesRhs(geom, GAS0, SchemeConfig(mode="ec", viscous=False))
    q = np.tile(conserved(1.0, np.array([0.1, 0.2, -0.3]), 1.0, GAS0),
                (geom.ndof, 1))
    assert np.max(np.abs(rhs.rhs(0.0, q))) > 1e-6


# -- entropy -----------------------------------------------------------------


def test_entropy_conserved_ec_mode_random_states():
    geom = make(cells=3, p_min=2, p_max=3, seed=7)
    rhs = NavierStokesRhs(geom, GAS0, SchemeConfig(mode="ec", viscous=False))
    rng = np.random.default_rng(0)
    for _ in range(5):
        q = random_state(geom, rng, GAS0)
        c = rhs.entropy_contraction(0.0, q)
        assert abs(c) <= 1e-10


def test_entropy_dissipated_es_mode():
    geom = make(cells=2, p_min=2, p_max=3, seed=5)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))
    rng = np.random.default_rng(1)
    for _ in range(5):
        q = random_state(geom, rng)
        assert rhs.entropy_contraction(0.0, q) <= 1e-10


def test_viscous_contraction_quadratic_form():
    """w-weighted viscous terms equal the negative quadratic gradient form."""
    geom = make(cells=2, p_min=2, p_max=3, seed=11)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="ec", viscous=True))
    q = smooth_state(geom)
    r = rhs.rhs(0.0, q, breakdown=True)
    _, w = entropy_and_vars(q, GAS)
    wgt = geom.mass() * geom.jac
    visc = r.viscous_volume + r.ldg_interface
    contraction = float(np.einsum("i,iv,iv->", wgt, w, visc))
    theta = rhs.ldg_gradients(0.0, q)
    chat = curvilinear_viscous_coeffs(q, geom.lam_an, geom.jac, GAS)
    quad = float(np.einsum("i,ilv,ilavc,iac->", geom.mass(), theta, chat, theta))
    # periodic: boundary terms vanish, contraction = -quadratic form <= 0
    assert quad >= -1e-12
    assert contraction == pytest.approx(-quad, rel=1e-10, abs=1e-10)


def test_ip_contraction_nonpositive():
    geom = make(cells=2, p_min=2, p_max=3, seed=13)
    base = SchemeConfig(mode="ec", viscous=True)
    with_ip = SchemeConfig(mode="es", dissipation=0.0, ip=True, viscous=True)
    rng = np.random.default_rng(2)
    _, w = None, None
    for _ in range(3):
        q = random_state(geom, rng)
        r0 = NavierStokesRhs(geom, GAS, base).rhs(0.0, q, breakdown=True)
        r1 = NavierStokesRhs(geom, GAS, with_ip).rhs(0.0, q, breakdown=True)
        _, w = entropy_and_vars(q, GAS)
        wgt = (geom.mass() * geom.jac)[:, None]
        ip_contraction = float(np.sum(wgt * w * r1.ip))
        assert ip_contraction <= 1e-12
        assert np.max(np.abs(r1.ip)) > 0.0


def test_dissipation_contraction_nonpositive_bulk():
    geom = make(cells=2, p_min=2, p_max=3, seed=17)
    ec = SchemeConfig(mode="ec", viscous=False)
    es = SchemeConfig(mode="es", ip=False, viscous=False)
    rng = np.random.default_rng(3)
    worst = -np.inf
    for _ in range(20):
        q = random_state(geom, rng, GAS0)
        r0 = NavierStokesRhs(geom, GAS0, ec).rhs(0.0, q, breakdown=True)
        r1 = NavierStokesRhs(geom, GAS0, es).rhs(0.0, q, breakdown=True)
        _, w = entropy_and_vars(q, GAS0)
        wgt = (geom.mass() * geom.jac)[:, None]
        diss = float(np.sum(wgt * w * (r1.inviscid_interface
                                       - r0.inviscid_interface)))
        worst = max(worst, diss)
    assert worst <= 1e-12


def test_constant_state_zero_ip_and_dissipation():
    geom = make(cells=2, p_min=2, p_max=3, seed=19)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))
    q = np.tile(conserved(1.1, np.array([0.4, -0.1, 0.2]), 0.9, GAS),
                (geom.ndof, 1))
    r = rhs.rhs(0.0, q, breakdown=True)
    assert np.max(np.abs(r.ip)) < 1e-12
    theta = rhs.ldg_gradients(0.0, q)
    assert np.max(np.abs(theta)) < 1e-12


# -- conservation ------------------------------------------------------------


def test_global_conservation_periodic():
    geom = make(cells=3, p_min=2, p_max=3, seed=7)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))
    rng = np.random.default_rng(4)
    q = random_state(geom, rng)
    rate = rhs.conservation_rate(0.0, q)
    assert np.max(np.abs(rate)) <= 1e-11


def test_interface_flux_antisymmetry():
    geom = make(cells=2, p_min=2, p_max=3, seed=7)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))
    q = smooth_state(geom)
    assert rhs.interface_flux_mismatch(0.0, q) <= 1e-11


# -- macro-operator equivalences ----------------------------------------------


def test_ldg_gradients_match_dense_coupled_derivative():
    geom = make(cells=3, p_min=2, p_max=3, seed=21)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))
    q = smooth_state(geom)
    _, w = entropy_and_vars(q, GAS)
    theta = rhs.ldg_gradients(0.0, q)
    for axis in range(3):
        ref = dense_coupled_d(geom, axis) @ w
        assert np.max(np.abs(theta[:, axis, :] - ref)) < 1e-11


def test_viscous_rhs_matches_dense_macro_form():
    """Element-wise viscous assembly equals J^-1 sum_la D_l Chat_la D_a w
    with the dense coupled derivative (spans all interfaces)."""
    geom = make(cells=3, p_min=2, p_max=3, seed=23)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="ec", viscous=True))
    q = smooth_state(geom)
    _, w = entropy_and_vars(q, GAS)
    r = rhs.rhs(0.0, q, breakdown=True)
    got = r.viscous_volume + r.ldg_interface
    Ds = [dense_coupled_d(geom, axis) for axis in range(3)]
    theta = [D @ w for D in Ds]
    chat = curvilinear_viscous_coeffs(q, geom.lam_an, geom.jac, GAS)
    ref = np.zeros_like(w)
    for l in range(3):
        acc = np.zeros_like(w)
        for a in range(3):
            acc += np.einsum("nvc,nc->nv", chat[:, l, a], theta[a])
        ref += Ds[l] @ acc
    ref /= geom.jac[:, None]
    scale = max(1.0, np.max(np.abs(ref)))
    assert np.max(np.abs(got - ref)) / scale < 1e-12


def test_conforming_reduction_identity_interpolation():
    """Equal-degree interfaces use exact identity operators end to end."""
    geom = make(cells=2, p_min=3, p_max=3, seed=25)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))
    for rec in rhs.tables.iface:
        assert rec["po"] == rec["pp"]
        assert np.array_equal(rec["Th"], np.eye(rec["Th"].shape[0]))
        assert np.array_equal(rec["Thp"], np.eye(rec["Thp"].shape[0]))


def test_nonconforming_entropy_identity_vs_conforming():
    """Entropy conservation holds identically through degree gaps 1 and 2."""
    rng = np.random.default_rng(5)
    for p_max in (3, 4):
        geom = make(cells=2, p_min=2, p_max=p_max, seed=29)
        rhs = NavierStokesRhs(geom, GAS0, SchemeConfig(mode="ec", viscous=False))
        q = random_state(geom, rng, GAS0)
        assert abs(rhs.entropy_contraction(0.0, q)) <= 1e-10


# -- misc ---------------------------------------------------------------------


def test_inadmissible_state_reported_with_location():
    geom = make(cells=2, p_min=2, p_max=2, seed=3)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))
    q = np.tile(conserved(1.0, np.zeros(3), 1.0, GAS), (geom.ndof, 1))
    q[100, 4] = -1.0
    with pytest.raises(AdmissibilityError, match="element"):
        rhs.rhs(0.0, q)


def test_breakdown_total_ordered_sum():
    geom = make(cells=2, p_min=2, p_max=3, seed=3)
    rhs = NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))
    q = smooth_state(geom)
    r = rhs.rhs(0.0, q, breakdown=True)
    acc = r.inviscid_volume.copy()
    for name in RhsBreakdown.PARTS[1:]:
        acc += getattr(r, name)
    assert np.array_equal(acc, r.total)
    assert np.array_equal(r.total, rhs.rhs(0.0, q))


def test_missing_boundary_provider_rejected():
    geom = make(cells=2, p_min=2, p_max=2, seed=3, periodic=False)
    with pytest.raises(ValueError, match="provider"):
        NavierStokesRhs(geom, GAS, SchemeConfig(mode="es"))


def test_single_cartesian_element_mms_order():
    """Volume discretization converges at design order against the analytic
    flux divergence of a smooth field (two-resolution comparison)."""
    p = 3
    errs = []
    for cells in (2, 4):
        mesh = generate_mesh(cells, [0, 0, 0], [1, 1, 1], p, p, seed=1,
                             periodic=True, perturb=False)
        geom = build_geometry(mesh)
        rhs = NavierStokesRhs(geom, GAS0, SchemeConfig(mode="ec", viscous=False))
        x = geom.coords

        def qfun(x):
            rho = 1.0 + 0.1 * np.sin(2 * np.pi * x[..., 0])
            u = 0.1 * np.stack([np.sin(2 * np.pi * x[..., 1]),
                                np.cos(2 * np.pi * x[..., 2]),
                                np.sin(2 * np.pi * x[..., 0])], axis=-1)
            T = 1.0 + 0.1 * np.cos(2 * np.pi * x[..., 1])
            return conserved(rho, u, T, GAS0)

        got = rhs.rhs(0.0, qfun(x))
        from esdg.physics import euler_flux

        h = 1e-5
        ref = np.zeros_like(got)
        for m in range(3):
            dx = np.zeros(3)
            dx[m] = h
            ref -= (euler_flux(qfun(x + dx), m + 1, GAS0)
                    - euler_flux(qfun(x - dx), m + 1, GAS0)) / (2 * h)
        errs.append(np.max(np.abs(got - ref)))
    order = np.log2(errs[0] / errs[1])
    assert order > p - 0.5
