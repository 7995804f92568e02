import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from esdg.sbp import (OperatorBank, SbpOp1D, TensorGrid, apply_tensor_derivative,
                      build_lgl_sbp, lgl_nodes_weights, tensor_operator_dense,
                      verify_sbp_definition)

DEGREES = list(range(1, 9))


def lgl_oracle(p):
    """Independent LGL nodes/weights: roots of (1-x^2) P'_p and Lagrange
    integrals with a 64-point Gauss rule."""
    cp = np.zeros(p + 1)
    cp[-1] = 1.0
    interior = npleg.legroots(npleg.legder(cp))
    nodes = np.concatenate([[-1.0], np.sort(interior), [1.0]])
    xg, wg = npleg.leggauss(64)
    weights = np.empty(p + 1)
    for j in range(p + 1):
        vals = np.ones_like(xg)
        for k in range(p + 1):
            if k != j:
                vals *= (xg - nodes[k]) / (nodes[j] - nodes[k])
        weights[j] = wg @ vals
    return nodes, weights


@pytest.mark.parametrize("p", DEGREES)
def test_nodes_weights_match_quadrature_oracle(p):
    x, w = lgl_nodes_weights(p)
    xo, wo = lgl_oracle(p)
    assert np.max(np.abs(x - xo)) < 1e-12
    assert np.max(np.abs(w - wo)) < 1e-12


def test_p1_closed_form():
    op = build_lgl_sbp(1)
    assert np.allclose(op.nodes, [-1.0, 1.0], atol=0)
    assert np.allclose(op.weights, [1.0, 1.0], atol=0)
    assert np.allclose(op.D, [[-0.5, 0.5], [-0.5, 0.5]], atol=1e-15)


def test_p2_closed_form():
    op = build_lgl_sbp(2)
    assert np.allclose(op.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    assert np.allclose(op.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)


@pytest.mark.parametrize("p", DEGREES)
def test_sbp_definition_invariants(p):
    op = build_lgl_sbp(p)
    d = verify_sbp_definition(op)
    assert d.accuracy <= 1e-12
    assert d.sbp_identity <= 1e-14
    assert d.skewness <= 1e-14
    assert d.min_weight > 0.0
    assert d.weight_sum_error <= 1e-12
    assert d.quadrature <= 1e-12
    assert d.node_symmetry <= 1e-14
    assert np.max(np.abs(op.D @ np.ones(op.n))) <= 1e-13


def test_degree_bounds_rejected():
    with pytest.raises(ValueError):
        build_lgl_sbp(0)
    with pytest.raises(ValueError):
        build_lgl_sbp(99)


def test_fault_injection_flagged():
    op = build_lgl_sbp(3)
    d_bad = op.D.copy()
    d_bad[0, 0] += 1e-3
    bad = SbpOp1D(p=op.p, nodes=op.nodes, weights=op.weights, D=d_bad,
                  Q=np.diag(op.weights) @ d_bad, E=op.E,
                  S=np.diag(op.weights) @ d_bad - 0.5 * op.E,
                  e1=op.e1, eN=op.eN)
    diag = verify_sbp_definition(bad)
    assert diag.accuracy == pytest.approx(1e-3, rel=1e-6)
    assert not diag.ok()


@pytest.mark.parametrize("p", [1, 2, 4])
def test_tensor_derivative_matches_kronecker(p):
    rng = np.random.default_rng(p)
    op = build_lgl_sbp(p)
    grid = TensorGrid(op, width=2)
    u = rng.standard_normal(((p + 1) ** 3, 2))
    for direction in (1, 2, 3):
        dense = tensor_operator_dense(op, op.D, direction)
        got = apply_tensor_derivative(grid, direction, u)
        assert np.max(np.abs(got - dense @ u)) < 1e-13


def test_tensor_derivative_exactness_and_sparsity():
    op = build_lgl_sbp(3)
    n = op.n
    grid = TensorGrid(op)
    xi = op.nodes
    x1 = np.broadcast_to(xi[:, None, None], (n, n, n)).reshape(-1, 1)
    x2 = np.broadcast_to(xi[None, :, None], (n, n, n)).reshape(-1, 1)
    d1 = apply_tensor_derivative(grid, 1, x1)
    assert np.max(np.abs(d1 - 1.0)) < 1e-13
    # constant along direction-1 lines
    d1b = apply_tensor_derivative(grid, 1, x2**3)
    assert np.max(np.abs(d1b)) < 1e-13


def test_tensor_directions_commute():
    rng = np.random.default_rng(0)
    op = build_lgl_sbp(4)
    grid = TensorGrid(op)
    u = rng.standard_normal((op.n**3, 1))
    d12 = apply_tensor_derivative(grid, 1, apply_tensor_derivative(grid, 2, u))
    d21 = apply_tensor_derivative(grid, 2, apply_tensor_derivative(grid, 1, u))
    assert np.max(np.abs(d12 - d21)) < 1e-12


def test_dimension_mismatch_rejected():
    op = build_lgl_sbp(2)
    with pytest.raises(ValueError):
        apply_tensor_derivative(TensorGrid(op), 1, np.zeros((5, 1)))
    with pytest.raises(ValueError):
        apply_tensor_derivative(TensorGrid(op), 4, np.zeros((27, 1)))


def test_operator_bank_caches():
    bank = OperatorBank()
    assert bank.get(3) is bank.get(3)
    assert bank.degrees() == [3]
