"""Dysonian dynamics of the complex Ginibre ensemble.

A library plus experiment CLI for matrices whose entries undergo complex
Brownian motion: reproducible Monte Carlo sampling, eigenvalue and
eigenvector-overlap observables, the inviscid Burgers flow of the
log-determinant (characteristics, caustics, shock), and the exact finite-N
characteristic determinant with its Erfc edge profile.
"""

__version__ = "0.1.0"

from .dynamics import (
    DiffusionParams,
    InitialCondition,
    MatrixState,
    evolve_increment,
    make_initial,
    rng_stream,
    sample_at_time,
)
from .spectral import (
    LogDeterminant,
    MeanLogDeterminant,
    QuaternionPoint,
    RadialProfile,
    SpectralSample,
    eigen_full,
    estimate_density,
    estimate_mean_determinant,
    estimate_overlap_correlator,
    estimate_petermann,
    quaternionic_determinant,
    resolvent_trace,
    resolvent_trace_eigs,
)
from .flow import (
    CausticPoint,
    Characteristic,
    FlowPoint,
    caustic_locus,
    characteristics_fan,
    g_analytic,
    petermann_analytic,
    rho_analytic,
    shock_birth_time,
    solve_v,
    solve_v_signed,
    v0_initial,
)
from .finiten import (
    EdgeCoords,
    QuadratureSpec,
    burgers_residual_g,
    burgers_residual_v,
    d_quadrature,
    flow_constraint_residual,
    rho_edge_erfc,
    rho_finite,
    rho_finite_normalization,
    rho_finite_reference,
)

__all__ = [name for name in dir() if not name.startswith("_")]
