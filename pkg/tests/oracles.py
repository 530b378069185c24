"""Independent oracles used by the test suite.

Each function here computes an expected value by a route disjoint from the
library code it checks: finite closed-form sums for the determinant
quadrature, explicit eigenvector formulas for the overlap machinery, and
brute-force bracketing for the cubic velocity root.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp


def log_determinant_series(z: complex, r: float, tau: float, N: int) -> float:
    """Exact finite double sum for the bare determinant integral.

    Expanding ``(q^2 + |z|^2)^N`` binomially reduces the Bessel-kernel
    integral to Gaussian moments, each a Laguerre polynomial of negative
    argument: all terms positive, so a log-sum-exp over

        C(N,j) |z|^{2j} ((N-j)!/2) (tau/N)^{N-j+1} L_{N-j}(-N r^2 / tau)

    is exact and overflow-free.  Matches ``log_d_quadrature`` with
    ``kernel_normalized=False``.
    """
    z2 = abs(z) ** 2
    x = N * r * r / tau
    lt = math.log(tau / N)
    lz2 = math.log(z2) if z2 > 0 else -math.inf
    lx = math.log(x) if x > 0 else -math.inf
    terms = []
    for j in range(N + 1):
        m = N - j
        base = (
            gammaln(N + 1)
            - gammaln(j + 1)
            + (j * lz2 if j else 0.0)
            - math.log(2.0)
            + (m + 1) * lt
        )
        for k in range(m + 1):
            lag = (
                gammaln(m + 1)
                - gammaln(k + 1)
                - gammaln(m - k + 1)
                + (k * lx if k else 0.0)
                - gammaln(k + 1)
            )
            terms.append(base + lag)
    terms = np.array(terms)
    return float(logsumexp(terms[np.isfinite(terms)]))


def overlaps_2x2_upper_triangular(a: complex, b: complex) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and diagonal overlaps of ``[[0, a], [0, b]]`` by hand.

    Right eigenvectors (1,0) and (a,b); the dual left set follows from the
    explicit 2x2 inverse.  Both diagonal overlaps equal ``1 + |a/b|^2``.
    """
    if b == 0:
        raise ValueError("needs distinct eigenvalues (b != 0)")
    right = np.array([[1.0, a], [0.0, b]], dtype=complex)
    left = np.linalg.inv(right)
    o = np.sum(np.abs(left) ** 2, axis=1) * np.sum(np.abs(right) ** 2, axis=0)
    lam = np.array([0.0, b], dtype=complex)
    return lam, o.real


def bracketed_positive_root(
    z: complex, r: float, tau: float, v_max: float = 4.0, n_scan: int = 4000
) -> float:
    """Physical cubic root by dense sign-scan plus bisection.

    Scans ``f(v) = v(|z|^2 + (r + tau v)^2) - (r + tau v)`` on ``(0, v_max]``
    and bisects the right-most sign change, independent of any closed-form
    solver.
    """
    c = abs(z) ** 2

    def f(v: float) -> float:
        s = r + tau * v
        return v * (c + s * s) - s

    grid = np.linspace(v_max / n_scan, v_max, n_scan)
    vals = f(grid)
    sign_change = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if len(sign_change) == 0:
        return 0.0
    lo, hi = grid[sign_change[-1]], grid[sign_change[-1] + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
