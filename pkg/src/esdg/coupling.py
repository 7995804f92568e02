"""Norm-compatible interpolation pairs and two-element macro operators.

A nonconforming interface couples a low-degree trace (L) to a high-degree
trace (H).  The forward operator interpolates degree-pL data exactly,

    I_l2h = V_H V_L^{-1},   V_X = [xi_X^0, ..., xi_X^pL],

and the reverse operator is fixed by the norm-adjoint relation

    P_L I_h2l = I_l2h^T P_H,

which is exactly the condition under which the coupled two-element "macro"
first-derivative operator retains the SBP structure.  The reverse operator
is exact only through degree pL - 1; that one-degree loss is the price of
the adjoint relation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sbp import SbpOp1D


@dataclass(frozen=True)
class InterpolationPair:
    """Coupled low->high / high->low interface interpolation operators."""

    p_lo: int
    p_hi: int
    l2h: np.ndarray     # (pH+1, pL+1)
    h2l: np.ndarray     # (pL+1, pH+1)

    @property
    def conforming(self) -> bool:
        return self.p_lo == self.p_hi


def build_interpolation_pair(op_lo: SbpOp1D, op_hi: SbpOp1D) -> InterpolationPair:
    """Build the norm-compatible interpolation pair for (op_lo, op_hi)."""
    if op_hi.p < op_lo.p:
        raise ValueError("high-side degree must be >= low-side degree")
    if op_hi.p == op_lo.p:
        eye = np.eye(op_lo.n)
        return InterpolationPair(op_lo.p, op_hi.p, eye.copy(), eye.copy())
    v_lo = np.vander(op_lo.nodes, op_lo.n, increasing=True)
    v_hi = np.vander(op_hi.nodes, op_lo.n, increasing=True)
    l2h = np.linalg.solve(v_lo.T, v_hi.T).T
    h2l = (l2h.T * op_hi.weights[None, :]) / op_lo.weights[:, None]
    return InterpolationPair(op_lo.p, op_hi.p, l2h, h2l)


def face_interp_2d(pair_1d: np.ndarray) -> np.ndarray:
    """Tensor-square of a 1D interface operator for full-face data."""
    return np.kron(pair_1d, pair_1d)


@dataclass(frozen=True)
class MacroOperator:
    """Two-element coupled operators for an interface normal to direction 1.

    Element L sits on the minus side (its +xi_1 face touches the interface),
    element H on the plus side.  Matrices are dense over the stacked node
    set [L nodes, H nodes]; directions 2 and 3 stay block diagonal.
    """

    op_lo: SbpOp1D
    op_hi: SbpOp1D
    pair: InterpolationPair
    M: np.ndarray        # diagonal (as vector) of the stacked 3D norm
    S1: np.ndarray
    E1: np.ndarray
    Q1: np.ndarray
    D1: np.ndarray

    @property
    def sizes(self) -> tuple[int, int]:
        return self.op_lo.n**3, self.op_hi.n**3

    def dense_d(self, direction: int) -> np.ndarray:
        """Dense coupled derivative for direction 1, block diagonal for 2, 3."""
        if direction == 1:
            return self.D1
        blocks = []
        for op in (self.op_lo, self.op_hi):
            eye = np.eye(op.n)
            mats = [eye, eye, eye]
            mats[direction - 1] = op.D
            blocks.append(np.kron(np.kron(mats[0], mats[1]), mats[2]))
        n_lo = blocks[0].shape[0]
        n_hi = blocks[1].shape[0]
        out = np.zeros((n_lo + n_hi, n_lo + n_hi))
        out[:n_lo, :n_lo] = blocks[0]
        out[n_lo:, n_lo:] = blocks[1]
        return out


def _norm3(op: SbpOp1D) -> np.ndarray:
    w = op.weights
    return np.kron(np.kron(w, w), w)


def assemble_macro_operator(op_lo: SbpOp1D, op_hi: SbpOp1D,
                            pair: InterpolationPair | None = None) -> MacroOperator:
    """Assemble the coupled first-derivative operator of the element pair.

    The off-diagonal blocks carry the interface coupling

        S12 = +1/2 (eN_L e1_H^T) x (P_L I_h2l) x (P_L I_h2l),
        S21 = -S12^T,

    so the stacked S1 is skew-symmetric by the adjoint relation, while E1
    keeps only the two outer-boundary faces.
    """
    if pair is None:
        pair = build_interpolation_pair(op_lo, op_hi)
    nl, nh = op_lo.n, op_hi.n
    n3l, n3h = nl**3, nh**3
    wl, wh = op_lo.weights, op_hi.weights

    pl_ih2l = wl[:, None] * pair.h2l
    s12 = 0.5 * np.kron(np.kron(np.outer(op_lo.eN, op_hi.e1), pl_ih2l), pl_ih2l)

    s1 = np.zeros((n3l + n3h, n3l + n3h))
    s1[:n3l, :n3l] = np.kron(np.kron(op_lo.S, np.diag(wl)), np.diag(wl))
    s1[n3l:, n3l:] = np.kron(np.kron(op_hi.S, np.diag(wh)), np.diag(wh))
    s1[:n3l, n3l:] = s12
    s1[n3l:, :n3l] = -s12.T

    e1 = np.zeros_like(s1)
    e1[:n3l, :n3l] = np.kron(np.kron(-np.outer(op_lo.e1, op_lo.e1), np.diag(wl)),
                             np.diag(wl))
    e1[n3l:, n3l:] = np.kron(np.kron(np.outer(op_hi.eN, op_hi.eN), np.diag(wh)),
                             np.diag(wh))

    m = np.concatenate([_norm3(op_lo), _norm3(op_hi)])
    q1 = s1 + 0.5 * e1
    d1 = q1 / m[:, None]
    return MacroOperator(op_lo, op_hi, pair, m, s1, e1, q1, d1)


@dataclass(frozen=True)
class PairDiagnostics:
    """Residual report for an interpolation pair and its macro operator."""

    p_lo: int
    p_hi: int
    adjoint: float          # ||P_L I_h2l - I_l2h^T P_H||_max
    l2h_accuracy: float     # worst monomial error through degree pL
    h2l_accuracy: float     # worst monomial error through degree pL - 1
    h2l_degree_pl: float    # witness error at degree pL (expected nonzero)
    constants: float
    macro_skewness: float   # ||S1 + S1^T||_max
    macro_sbp: float        # ||Q1 + Q1^T - E1||_max
    macro_nullvec: float    # ||D1 1||_inf

    def ok(self, tol: float = 1e-12) -> bool:
        return (
            self.adjoint <= 1e-14
            and self.l2h_accuracy <= tol
            and self.h2l_accuracy <= tol
            and self.constants <= 1e-14
            and self.macro_skewness <= 1e-14
            and self.macro_sbp <= 1e-14
            and self.macro_nullvec <= tol
        )


def verify_macro_sbp(op_lo: SbpOp1D, op_hi: SbpOp1D,
                     macro: MacroOperator | None = None) -> PairDiagnostics:
    """Check the interpolation pair and macro operator properties (report only)."""
    if macro is None:
        macro = assemble_macro_operator(op_lo, op_hi)
    pair = macro.pair
    xl, xh = op_lo.nodes, op_hi.nodes
    adjoint = np.max(np.abs(op_lo.weights[:, None] * pair.h2l
                            - pair.l2h.T * op_hi.weights[None, :]))
    acc_l2h = max(
        np.max(np.abs(pair.l2h @ xl**j - xh**j)) for j in range(op_lo.p + 1)
    )
    acc_h2l = max(
        np.max(np.abs(pair.h2l @ xh**j - xl**j)) for j in range(max(op_lo.p, 1))
    )
    witness = np.max(np.abs(pair.h2l @ xh**op_lo.p - xl**op_lo.p))
    const = max(np.max(np.abs(pair.l2h.sum(axis=1) - 1.0)),
                np.max(np.abs(pair.h2l.sum(axis=1) - 1.0)))
    ones = np.ones(macro.D1.shape[0])
    return PairDiagnostics(
        p_lo=op_lo.p,
        p_hi=op_hi.p,
        adjoint=adjoint,
        l2h_accuracy=acc_l2h,
        h2l_accuracy=acc_h2l,
        h2l_degree_pl=witness,
        constants=const,
        macro_skewness=np.max(np.abs(macro.S1 + macro.S1.T)),
        macro_sbp=np.max(np.abs(macro.Q1 + macro.Q1.T - macro.E1)),
        macro_nullvec=np.max(np.abs(macro.D1 @ ones)),
    )
