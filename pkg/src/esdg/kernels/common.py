"""Shared layout constants for the kernel backends.

Nodal "derived state" array layout (one row per node):

    0 rho   1 u1   2 u2   3 u3   4 p   5 T
    6 beta = rho / (2 p)          (inverse-temperature variable of the
                                   entropy-consistent two-point flux)
    7 ln rho   8 ln beta   9 k = |u|^2 / 2

Metric arrays ``lam`` have shape (nnodes, 3, 3) with ``lam[node, l, m]``
holding the scaled contravariant basis J * d(xi_l)/d(x_m).

Two-point log means are guarded by a series expansion once the squared
relative difference drops below LOGMEAN_EPS.
"""

RHO, U1, U2, U3, PRES, TEMP, BETA, LNRHO, LNBETA, KIN = range(10)
NPRIM = 10

LOGMEAN_EPS = 1.0e-4
