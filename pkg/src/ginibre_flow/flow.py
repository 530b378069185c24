"""Inviscid Burgers flow of the log-determinant at infinite matrix dimension.

The radial velocity field ``v`` solves ``d_tau v = v d_r v`` by straight-line
characteristics ``r = xi - v0(xi) tau`` starting from the zero-matrix profile
``v0(xi) = xi / (|z|^2 + xi^2)``.  Characteristics cross on a caustic once
``tau >= |z|^2`` and a shock sits at ``r = 0``; the post-shock branch is
fixed by the mirror symmetry of the two signed sections through the origin
of the transverse plane.  On any point the field solves the cubic

    tau^2 v^3 + 2 r tau v^2 + (r^2 + |z|^2 - tau) v - r = 0

whose unique positive root is the physical branch for r > 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy.optimize import brentq

__all__ = [
    "FlowPoint",
    "Characteristic",
    "CausticPoint",
    "v0_initial",
    "v0_derivative",
    "solve_v",
    "solve_v_signed",
    "characteristics_fan",
    "caustic_locus",
    "shock_birth_time",
    "g_analytic",
    "rho_analytic",
    "petermann_analytic",
]


@dataclass(frozen=True)
class FlowPoint:
    """Velocity and Green's-function values of the inviscid flow at one point.

    ``n_branches`` counts the distinct real solution branches of the cubic
    there (3 strictly inside the caustic cone, 1 outside, 2 exactly on the
    caustic); ``real_roots`` carries them all, ascending, so the turning
    point of the multivalued S-curve is available to callers.
    """

    v: float
    g: complex
    z: complex
    r: float
    tau: float
    n_branches: int = 1
    real_roots: tuple[float, ...] = ()


@dataclass(frozen=True)
class Characteristic:
    """One straight characteristic ``r(tau) = xi - v0(xi) tau``.

    ``tau_range`` is the interval on which the line is the physical branch;
    it ends where the line is absorbed at ``r = 0`` (the shock), at
    ``tau = |z|^2 + xi^2``.
    """

    xi: float
    slope: float
    tau_range: tuple[float, float]

    def r_at(self, tau: float) -> float:
        return self.xi + self.slope * tau


@dataclass(frozen=True)
class CausticPoint:
    """Point where neighboring characteristics cross: ``1 = tau v0'(xi*)``.

    ``r_star = xi* - v0(xi*) tau`` is the signed position on the section
    through the origin; the pair of caustics of the full rotationally
    symmetric picture sits at ``+|r_star|`` and ``-|r_star|``.
    """

    tau: float
    r_star: float
    xi_star: float


def v0_initial(xi: float, abs_z: float) -> float:
    """Initial velocity profile ``xi / (|z|^2 + xi^2)`` of the zero-matrix flow.

    Finite everywhere: at ``abs_z = 0`` it reduces to ``1/xi`` with the odd
    extension ``v0(0) = 0``.
    """
    denom = abs_z * abs_z + xi * xi
    if denom == 0.0:
        return 0.0
    return xi / denom


def v0_derivative(xi: float, abs_z: float) -> float:
    """``v0'(xi) = (|z|^2 - xi^2) / (|z|^2 + xi^2)^2``."""
    c = abs_z * abs_z
    denom = c + xi * xi
    if denom == 0.0:
        return math.inf
    return (c - xi * xi) / denom**2


def _cubic_real_roots(a: float, b: float, c: float, d: float) -> tuple[list[float], int]:
    """Real roots of ``a x^3 + b x^2 + c x + d`` (a != 0), ascending.

    Closed form: trigonometric branch for three real roots, Cardano branch
    for one.  Returns the distinct real roots and the count of distinct
    branches (2 flags a double root within tolerance of the discriminant).
    """
    b, c, d = b / a, c / a, d / a
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0
    disc = -4.0 * p**3 - 27.0 * q * q
    scale = max(abs(4.0 * p**3), abs(27.0 * q * q), 1e-300)
    if abs(disc) <= 1e-10 * scale:
        # degenerate: double (or triple) root
        if abs(p) < 1e-14 * max(1.0, abs(q)) ** (2.0 / 3.0):
            return [shift], 1  # triple root
        double = -1.5 * q / p
        simple = 3.0 * q / p + shift
        roots = sorted({double + shift, simple})
        return roots, 2
    if disc > 0.0:
        m = 2.0 * math.sqrt(-p / 3.0)
        theta = math.acos(max(-1.0, min(1.0, 3.0 * q / (p * m))))
        roots = sorted(m * math.cos((theta - 2.0 * math.pi * k) / 3.0) + shift for k in range(3))
        return roots, 3
    # single real root via Cardano with a cancellation-safe branch
    sq = cmath.sqrt(q * q / 4.0 + p**3 / 27.0)
    u = -q / 2.0 + sq if q <= 0 else -q / 2.0 - sq
    u_c = u ** (1.0 / 3.0)
    root = (u_c + (-p / 3.0) / u_c).real + shift if u != 0 else shift
    return [root], 1


def _cubic_coeffs(c: float, r: float, tau: float) -> tuple[float, float, float, float]:
    return tau * tau, 2.0 * r * tau, r * r + c - tau, -r


def _polish(v: float, c: float, r: float, tau: float, steps: int = 2) -> float:
    # Newton on f(v) = v(c + (r + tau v)^2) - (r + tau v)
    for _ in range(steps):
        s = r + tau * v
        f = v * (c + s * s) - s
        fp = c + s * s + 2.0 * tau * v * s - tau
        if fp == 0.0:
            break
        step = f / fp
        v -= step
        if abs(step) <= 1e-16 * max(1.0, abs(v)):
            break
    return v


def solve_v(z: complex, r: float, tau: float) -> FlowPoint:
    """Physical velocity-field value at ``(z, r, tau)``.

    The returned root is the branch continuously connected to ``v0`` as
    ``tau -> 0``; in the multivalued region it is the post-shock value of the
    symmetric construction with the shock pinned at the origin of the
    transverse plane, which at ``r -> 0`` gives ``sqrt(tau - |z|^2)/tau``
    inside the spectral disc and ``0`` outside.  For ``r > 0`` this is the
    unique positive real root of the cubic.

    Also fills ``g = conj(z) / (|z|^2 + (r + tau v)^2)``, the value carried
    by the same characteristic.
    """
    if not tau > 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if r < 0.0:
        raise ValueError(f"r must be >= 0, got {r}")
    c = abs(z) ** 2
    roots, n_branches = _cubic_real_roots(*_cubic_coeffs(c, r, tau))
    roots = [_polish(root, c, r, tau) for root in roots]
    if r == 0.0:
        # branch limit r -> 0+: positive root inside the disc, 0 outside
        v = max(roots) if tau > c else 0.0
    else:
        v = max(roots)  # unique positive root
    xi = r + tau * v
    g = z.conjugate() / (c + xi * xi) if (c + xi * xi) > 0 else complex(math.inf)
    return FlowPoint(
        v=v, g=g, z=complex(z), r=r, tau=tau, n_branches=n_branches, real_roots=tuple(roots)
    )


def solve_v_signed(z: complex, mu: float, tau: float) -> float:
    """Physical root on the signed section: odd in ``mu``, jump at the shock.

    For ``mu > 0`` this equals ``solve_v(z, mu, tau).v``; for ``mu < 0`` the
    mirrored branch ``-solve_v(z, -mu, tau).v``, making the two sections of
    the rotationally symmetric solution explicit.
    """
    if mu >= 0.0:
        return solve_v(z, mu, tau).v
    return -solve_v(z, -mu, tau).v


def characteristics_fan(
    abs_z: float, tau_max: float, xi_grid: list[float]
) -> list[Characteristic]:
    """One characteristic line per ``xi >= 0`` label.

    The validity interval stops where the line reaches the shock at
    ``r = 0`` (at ``tau = |z|^2 + xi^2``) or at ``tau_max``.
    """
    out = []
    c = abs_z * abs_z
    for xi in xi_grid:
        if xi < 0:
            raise ValueError(f"characteristic labels must be >= 0, got {xi}")
        v0 = v0_initial(xi, abs_z)
        tau_end = tau_max if v0 == 0.0 else min(tau_max, c + xi * xi)
        out.append(Characteristic(xi=xi, slope=-v0, tau_range=(0.0, tau_end)))
    return out


def caustic_locus(abs_z: float, tau: float) -> list[CausticPoint]:
    """Crossing points of neighboring characteristics at time ``tau``.

    Solves ``1 = tau v0'(xi)`` for ``xi >= 0``.  In terms of ``y = xi^2``
    this is the quadratic ``y^2 + (2|z|^2 + tau) y + |z|^2(|z|^2 - tau) = 0``,
    which has a non-negative root exactly when ``tau >= |z|^2``; below the
    first singular time the list is empty.
    """
    if not tau > 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    c = abs_z * abs_z
    disc = tau * tau + 8.0 * c * tau
    y = 0.5 * (-(2.0 * c + tau) + math.sqrt(disc))
    if y < 0.0:
        return []
    xi = math.sqrt(y)
    # polish on F(xi) = 1 - tau v0'(xi)
    for _ in range(2):
        denom = c + xi * xi
        f = 1.0 - tau * (c - xi * xi) / denom**2
        fp = -tau * (-2.0 * xi * denom**2 - (c - xi * xi) * 2.0 * denom * 2.0 * xi) / denom**4
        if fp != 0.0 and xi > 0.0:
            xi -= f / fp
    xi = max(xi, 0.0)
    r_star = xi - v0_initial(xi, abs_z) * tau
    return [CausticPoint(tau=tau, r_star=r_star, xi_star=xi)]


def shock_birth_time(abs_z: float) -> float:
    """First time a caustic touches ``r = 0``, found by root bracketing.

    Solves ``tau * max_xi v0'(xi) = 1``; the maximum of the initial slope
    sits at ``xi = 0``, so this is the first singular time of the flow.
    """
    c = abs_z * abs_z
    if c == 0.0:
        return 0.0
    f = lambda tau: tau * v0_derivative(0.0, abs_z) - 1.0
    return float(brentq(f, 1e-12, 8.0 * c + 8.0, xtol=1e-14, rtol=1e-15))


def g_analytic(z: complex, tau: float) -> complex:
    """Green's function of the grown spectrum: ``1/z`` outside, ``conj(z)/tau`` inside.

    The two branches match continuously on the shock circle ``|z|^2 = tau``.
    """
    if not tau > 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if abs(z) ** 2 > tau:
        return 1.0 / z
    return z.conjugate() / tau


def rho_analytic(z: complex, tau: float) -> float:
    """Uniform spectral density ``1/(pi tau)`` on the disc ``|z|^2 < tau``, else 0."""
    if not tau > 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    return 1.0 / (math.pi * tau) if abs(z) ** 2 <= tau else 0.0


def petermann_analytic(z: complex, tau: float) -> float | None:
    """Rescaled Petermann factor ``K/N = 1 - |z|^2 / tau`` on the spectral disc.

    Returns ``None`` outside the disc, where eigenvalues (and the factor)
    are absent.
    """
    if not tau > 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    c = abs(z) ** 2
    if c > tau * (1.0 + 4.0 * 2.2e-16):  # boundary itself is in-domain
        return None
    return max(1.0 - c / tau, 0.0)
