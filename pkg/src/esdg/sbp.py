"""One-dimensional diagonal-norm SBP operators on Legendre-Gauss-Lobatto nodes.

The operators collocate a degree-p Lagrange basis on the p+1 LGL points of
[-1, 1].  The derivative matrix D, the diagonal quadrature norm P, and the
boundary matrix E = diag(-1, 0, ..., 0, 1) satisfy the summation-by-parts
decomposition

    D = P^{-1} Q,   Q + Q^T = E,   S = Q - E/2 skew-symmetric,

which is the discrete analogue of integration by parts.  Three-dimensional
fields are handled by tensor products of the same 1D operator in each
direction; those applications are always matrix-free (line-wise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

from .kernels import apply_line_derivative

MAX_DEGREE = 16
_NEWTON_TOL = 1e-15


def lgl_nodes_weights(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Legendre-Gauss-Lobatto nodes and quadrature weights for degree p.

    The p+1 nodes are the roots of (1 - x^2) P'_p(x), computed by Newton
    iteration from Chebyshev-Gauss-Lobatto initial guesses; the weights are
    w_i = 2 / (p (p+1) P_p(x_i)^2).  Exact for polynomials through degree
    2p - 1.
    """
    n = p + 1
    if p == 1:
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])

    x = -np.cos(np.pi * np.arange(n) / p)
    # Interior nodes are the roots of P'_p; Newton from Chebyshev-Lobatto guesses.
    cp = np.zeros(n)
    cp[-1] = 1.0
    dcoef = npleg.legder(cp)
    d2coef = npleg.legder(cp, 2)
    xi = x[1:-1]
    for _ in range(100):
        step = npleg.legval(xi, dcoef) / npleg.legval(xi, d2coef)
        xi = xi - step
        if np.max(np.abs(step)) < _NEWTON_TOL:
            break
    x[1:-1] = xi
    # Nodes of symmetric weight come in +/- pairs; symmetrize exactly.
    x = 0.5 * (x - x[::-1])
    x[0], x[-1] = -1.0, 1.0
    cl = np.zeros(n)
    cl[-1] = 1.0
    pl = npleg.legval(x, cl)
    w = 2.0 / (p * n * pl**2)
    return x, w


def _barycentric_weights(x: np.ndarray) -> np.ndarray:
    n = x.size
    w = np.ones(n)
    for j in range(n):
        w[j] = 1.0 / np.prod(x[j] - np.delete(x, j))
    return w


def lagrange_derivative_matrix(x: np.ndarray) -> np.ndarray:
    """Collocation derivative of the Lagrange basis on nodes x."""
    n = x.size
    wb = _barycentric_weights(x)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                d[i, j] = (wb[j] / wb[i]) / (x[i] - x[j])
        d[i, i] = -np.sum(d[i, :])
    return d


@dataclass(frozen=True)
class SbpOp1D:
    """Degree-p diagonal-norm SBP operator bundle on LGL nodes."""

    p: int
    nodes: np.ndarray
    weights: np.ndarray        # diagonal of P
    D: np.ndarray
    Q: np.ndarray
    E: np.ndarray
    S: np.ndarray
    e1: np.ndarray = field(repr=False, default=None)
    eN: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.p + 1


def build_lgl_sbp(p: int) -> SbpOp1D:
    """Construct the degree-p LGL collocation SBP operator.

    Q is assembled as S + E/2 with S the exact skew part of P D, so the
    decomposition Q + Q^T = E holds to rounding by construction while the
    accuracy conditions D x^j = j x^{j-1}, j <= p, are inherited from the
    collocation derivative.
    """
    if p < 1:
        raise ValueError(f"SBP degree must be >= 1, got {p}")
    if p > MAX_DEGREE:
        raise ValueError(
            f"degree {p} exceeds supported maximum {MAX_DEGREE} "
            f"(LGL node solve validated to tolerance {_NEWTON_TOL:g} only up to there)"
        )
    x, w = lgl_nodes_weights(p)
    d = lagrange_derivative_matrix(x)
    n = p + 1
    e = np.zeros((n, n))
    e[0, 0], e[-1, -1] = -1.0, 1.0
    q0 = np.diag(w) @ d
    s = 0.5 * (q0 - q0.T)
    q = s + 0.5 * e
    d = q / w[:, None]
    e1 = np.zeros(n)
    e1[0] = 1.0
    en = np.zeros(n)
    en[-1] = 1.0
    return SbpOp1D(p=p, nodes=x, weights=w, D=d, Q=q, E=e, S=s, e1=e1, eN=en)


@dataclass(frozen=True)
class TensorGrid:
    """Tensor-product extension of one SBP operator to an N^3 grid."""

    op: SbpOp1D
    width: int = 1

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.op.n
        return (n, n, n)


def apply_tensor_derivative(grid: TensorGrid, direction: int, u: np.ndarray) -> np.ndarray:
    """Matrix-free derivative along one tensor direction.

    ``u`` has shape (N^3, width) with C-order node index (i1, i2, i3); the
    direction-l application touches only lines along axis l-1.  Equivalent to
    the dense Kronecker product action of D in that slot.
    """
    n = grid.op.n
    if u.shape[0] != n**3:
        raise ValueError(f"field has {u.shape[0]} nodes, expected {n**3}")
    if direction not in (1, 2, 3):
        raise ValueError(f"direction must be 1..3, got {direction}")
    width = 1 if u.ndim == 1 else u.shape[1]
    out = np.empty_like(u)
    apply_line_derivative(
        grid.op.D, u.reshape(n**3, width), out.reshape(n**3, width), n, direction - 1
    )
    return out


def tensor_operator_dense(op: SbpOp1D, mat1d: np.ndarray, direction: int) -> np.ndarray:
    """Dense Kronecker assembly of a 1D matrix in one tensor slot (test oracle)."""
    n = op.n
    eye = np.eye(n)
    mats = [eye, eye, eye]
    mats[direction - 1] = mat1d
    return np.kron(np.kron(mats[0], mats[1]), mats[2])


@dataclass(frozen=True)
class SbpDiagnostics:
    """Residual report for the SBP definition of one operator."""

    p: int
    accuracy: float          # max_j ||D x^j - j x^{j-1}||_inf, j <= p
    sbp_identity: float      # ||Q + Q^T - E||_max
    skewness: float          # ||S + S^T||_max with S = Q - E/2
    min_weight: float
    weight_sum_error: float  # |1^T P 1 - 2|
    quadrature: float        # max_{j<=2p-1} |1^T P x^j - int x^j|
    node_symmetry: float

    def ok(self, tol: float = 1e-12) -> bool:
        return (
            self.accuracy <= tol
            and self.sbp_identity <= 1e-14
            and self.skewness <= 1e-14
            and self.min_weight > 0.0
            and self.weight_sum_error <= tol
            and self.quadrature <= tol
        )


def verify_sbp_definition(op: SbpOp1D) -> SbpDiagnostics:
    """Numerically check every clause of the SBP definition (report only)."""
    x, w = op.nodes, op.weights
    acc = 0.0
    for j in range(op.p + 1):
        target = j * x ** (j - 1) if j > 0 else np.zeros_like(x)
        acc = max(acc, np.max(np.abs(op.D @ x**j - target)))
    quad = 0.0
    for j in range(2 * op.p):
        exact = (1.0 - (-1.0) ** (j + 1)) / (j + 1)
        quad = max(quad, abs(w @ x**j - exact))
    return SbpDiagnostics(
        p=op.p,
        accuracy=acc,
        sbp_identity=np.max(np.abs(op.Q + op.Q.T - op.E)),
        skewness=np.max(np.abs(op.S + op.S.T)),
        min_weight=float(np.min(w)),
        weight_sum_error=abs(np.sum(w) - 2.0),
        quadrature=quad,
        node_symmetry=float(np.max(np.abs(x + x[::-1]))),
    )


class OperatorBank:
    """Cache of SBP operators keyed by degree, shared across a whole mesh."""

    def __init__(self):
        self._ops: dict[int, SbpOp1D] = {}

    def get(self, p: int) -> SbpOp1D:
        if p not in self._ops:
            self._ops[p] = build_lgl_sbp(p)
        return self._ops[p]

    def degrees(self):
        return sorted(self._ops)
