import numpy as np
import pytest

from esdg.geometry import build_geometry, generate_mesh
from esdg.rhs import RhsBreakdown, ScalarRhs, SchemeConfig

from helpers import dense_coupled_d, dense_norm


def make(cells=2, p_min=2, p_max=2, seed=3, perturb=True, periodic=True,
         box=((0, 0, 0), (1, 1, 1)), boundary_tag="exact"):
    mesh = generate_mesh(cells, box[0], box[1], p_min, p_max, seed=seed,
                         periodic=periodic, perturb=perturb)
    return build_geometry(mesh, boundary_tag=boundary_tag)


def test_constant_state_rhs_vanishes():
    geom = make(p_min=2, p_max=3, seed=5)
    sch = SchemeConfig(mode="es", a=(0.7, -0.4, 0.2), b=(0.05, 0.02, 0.01))
    rhs = ScalarRhs(geom, sch)
    u = np.full((geom.ndof, 1), 2.5)
    r = rhs.rhs(0.0, u, breakdown=True)
    assert np.max(np.abs(r.total)) < 1e-12
    assert r.gcl_certified


def test_breakdown_total_is_ordered_sum():
    geom = make(p_min=2, p_max=3, seed=5)
    sch = SchemeConfig(mode="es", a=(1.0, 0.5, -0.25), b=(0.03, 0.0, 0.01))
    rhs = ScalarRhs(geom, sch)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((geom.ndof, 1))
    r = rhs.rhs(0.0, u, breakdown=True)
    acc = r.inviscid_volume.copy()
    for name in RhsBreakdown.PARTS[1:]:
        acc += getattr(r, name)
    assert np.array_equal(acc, r.total)


def test_cartesian_conforming_matches_dense_split_oracle():
    """On a Cartesian mesh (constant metrics, B = 0) the discretization equals
    the dense split-form operator built from the coupled derivative."""
    geom = make(cells=2, p_min=2, p_max=2, seed=1, perturb=False)
    a = np.array([0.9, -0.6, 0.3])
    sch = SchemeConfig(mode="ec", a=tuple(a), b=(0.0, 0.0, 0.0), viscous=False)
    rhs = ScalarRhs(geom, sch)
    x = geom.coords
    u = np.sin(2 * np.pi * x[:, 0]) * np.cos(2 * np.pi * x[:, 1]) \
        * np.sin(2 * np.pi * x[:, 2])
    u = u[:, None]
    got = rhs.rhs(0.0, u)
    ref = np.zeros_like(u)
    for axis in range(3):
        D = dense_coupled_d(geom, axis)
        lam = np.diag(geom.lam_vol[:, axis, :] @ a)
        ref += -0.5 * (D @ lam + lam @ D) @ u
    ref /= geom.jac[:, None]
    assert np.max(np.abs(got - ref)) < 1e-13


def test_ldg_gradients_match_dense_coupled_derivative():
    geom = make(cells=3, p_min=2, p_max=3, seed=7)
    sch = SchemeConfig(mode="es", b=(0.1, 0.1, 0.1))
    rhs = ScalarRhs(geom, sch)
    rng = np.random.default_rng(1)
    u = rng.standard_normal((geom.ndof, 1))
    theta = rhs.ldg_gradients(0.0, u)
    for axis in range(3):
        ref = dense_coupled_d(geom, axis) @ u[:, 0]
        assert np.max(np.abs(theta[:, axis, 0] - ref)) < 1e-12


def test_ldg_constant_gradient_zero():
    geom = make(cells=2, p_min=2, p_max=3, seed=7)
    rhs = ScalarRhs(geom, SchemeConfig(mode="es", b=(0.1, 0.1, 0.1)))
    u = np.full((geom.ndof, 1), 3.0)
    theta = rhs.ldg_gradients(0.0, u)
    assert np.max(np.abs(theta)) < 1e-13


def test_ldg_linear_field_exact_gradient_on_affine_mesh():
    # interior interfaces only: a linear field is not periodic
    geom = make(cells=2, p_min=2, p_max=3, seed=7, perturb=False,
                periodic=False, boundary_tag=None)
    rhs = ScalarRhs(geom, SchemeConfig(mode="es", b=(0.1, 0.1, 0.1)))
    c = np.array([0.4, -1.2, 0.7])
    u = (geom.coords @ c)[:, None]
    theta = rhs.ldg_gradients(0.0, u)
    # exact curvilinear gradient: theta_a = sum_m dx_m/dxi_a c_m; on this
    # affine lattice dx/dxi = h/2 * I
    ref = np.einsum("nam,m->na", geom.lam_an, c) * 0.0
    # invert the metric identity: lam = J dxi/dx -> dx/dxi = J lam^{-T} ... use
    # direct FD-free relation via jacobian: dxdxi[a,m] = J^{-1} adj, simplest
    # here: the affine map has dx_m/dxi_a = 0.25 delta_am for a unit box with 2
    # cells
    ref = 0.25 * np.broadcast_to(c, (geom.ndof, 3))
    assert np.max(np.abs(theta[:, :, 0] - ref)) < 1e-12


def test_viscous_rhs_matches_dense_macro_operator():
    """Element-wise LDG assembly equals J^-1 sum_la D_l Chat_la D_a u built
    from the dense coupled derivative (all interfaces, wrap included)."""
    geom = make(cells=3, p_min=2, p_max=3, seed=11)
    b = np.array([0.07, 0.03, 0.05])
    sch = SchemeConfig(mode="ec", a=(0, 0, 0), b=tuple(b))
    rhs = ScalarRhs(geom, sch)
    rng = np.random.default_rng(2)
    u = rng.standard_normal((geom.ndof, 1))
    r = rhs.rhs(0.0, u, breakdown=True)
    got = r.viscous_volume + r.ldg_interface
    Ds = [dense_coupled_d(geom, axis) for axis in range(3)]
    theta = [D @ u[:, 0] for D in Ds]
    ref = np.zeros(geom.ndof)
    for l in range(3):
        acc = np.zeros(geom.ndof)
        for a in range(3):
            chat = np.einsum("nm,m,nm->n", geom.lam_an[:, l, :], b,
                             geom.lam_an[:, a, :]) / geom.jac
            acc += chat * theta[a]
        ref += Ds[l] @ acc
    # dense form uses D_l = M^-1 Q_l; elementwise divergence applies the
    # transposed-structure face terms, equal because every face is coupled
    ref /= geom.jac
    assert np.max(np.abs(got[:, 0] - ref)) < 1e-11


def test_energy_contraction_nonpositive_with_diffusion():
    geom = make(cells=2, p_min=2, p_max=3, seed=13)
    sch = SchemeConfig(mode="ec", a=(1.0, -0.5, 0.25), b=(0.1, 0.05, 0.2))
    rhs = ScalarRhs(geom, sch)
    rng = np.random.default_rng(3)
    for _ in range(5):
        u = rng.standard_normal((geom.ndof, 1))
        rate = rhs.energy_rate(0.0, u)
        assert rate <= 1e-10


def test_energy_conservation_pure_advection_ec():
    geom = make(cells=2, p_min=2, p_max=3, seed=13)
    sch = SchemeConfig(mode="ec", a=(1.0, -0.5, 0.25), b=(0, 0, 0),
                       viscous=False)
    rhs = ScalarRhs(geom, sch)
    rng = np.random.default_rng(4)
    u = rng.standard_normal((geom.ndof, 1))
    assert abs(rhs.energy_rate(0.0, u)) < 1e-12


def test_es_mode_dissipates_and_ip_sign():
    geom = make(cells=2, p_min=2, p_max=3, seed=13)
    rng = np.random.default_rng(5)
    u = rng.standard_normal((geom.ndof, 1))
    base = SchemeConfig(mode="ec", a=(1.0, 0.3, -0.2), b=(0.1, 0.1, 0.1))
    es = SchemeConfig(mode="es", a=(1.0, 0.3, -0.2), b=(0.1, 0.1, 0.1))
    r_ec = ScalarRhs(geom, base).rhs(0.0, u, breakdown=True)
    r_es = ScalarRhs(geom, es).rhs(0.0, u, breakdown=True)
    wgt = (geom.mass() * geom.jac)[:, None]
    diss = float(np.sum(wgt * u * (r_es.inviscid_interface
                                   - r_ec.inviscid_interface)))
    ip = float(np.sum(wgt * u * r_es.ip))
    assert diss <= 1e-12
    assert ip <= 1e-12


def test_scalar_upwind_limit_conforming_cartesian():
    """With the entropy-variable dissipation at unit coefficient, a conforming
    Cartesian interface reproduces the classical upwind flux."""
    geom = make(cells=2, p_min=2, p_max=2, seed=1, perturb=False)
    a = np.array([1.0, 0.0, 0.0])
    es = SchemeConfig(mode="es", a=tuple(a), b=(0, 0, 0), viscous=False)
    rhs = ScalarRhs(geom, es)
    rng = np.random.default_rng(6)
    u = rng.standard_normal((geom.ndof, 1))
    got = rhs.rhs(0.0, u)

    # hand-assembled upwind reference: central coupled flux + |a.n|/2 jump
    from esdg.rhs import RhsBreakdown
    ec = SchemeConfig(mode="ec", a=tuple(a), b=(0, 0, 0), viscous=False)
    r_ec = ScalarRhs(geom, ec).rhs(0.0, u, breakdown=True)
    ref = r_ec.total.copy()
    for rec in rhs.tables.iface:
        nf, no = rec["own"].shape
        for f in range(nf):
            own = rec["own"][f]
            par = rec["par"][f]
            an = rec["lho"][f] @ a
            jump = u[own, 0] - u[par, 0]
            pen = -0.5 * np.abs(an) * jump * rec["omega"]
            ref[own, 0] += pen / geom.jac[own]
    assert np.max(np.abs(got - ref)) < 1e-13


def test_identical_traces_no_interface_terms():
    """A globally polynomial field below every element degree leaves zero
    interface jumps, so dissipation and penalties vanish."""
    geom = make(cells=2, p_min=2, p_max=3, seed=17, periodic=False,
                boundary_tag=None)
    sch = SchemeConfig(mode="es", a=(0.5, 0.5, 0.5), b=(0.1, 0.1, 0.1))
    rhs = ScalarRhs(geom, sch)
    u = (1.5 + geom.coords @ np.array([0.3, -0.2, 0.9]))[:, None]
    r = rhs.rhs(0.0, u, breakdown=True)
    assert np.max(np.abs(r.ip)) < 1e-12
