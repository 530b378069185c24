"""Per-sample spectral observables and ensemble estimators.

Eigenvalues, bi-orthogonal left/right eigenvector overlaps, resolvent traces
and the characteristic determinant ``det(|z - X|^2 + |w|^2)`` of a single
matrix, plus annulus-binned ensemble estimators for the spectral density and
the Petermann factor.  Everything that can overflow at matrix dimensions in
the hundreds is carried in log domain.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .dynamics import MatrixState

__all__ = [
    "SpectralSample",
    "QuaternionPoint",
    "LogDeterminant",
    "MeanLogDeterminant",
    "RadialProfile",
    "SpectralPointError",
    "eigen_full",
    "resolvent_trace",
    "resolvent_trace_eigs",
    "quaternionic_determinant",
    "log_determinants_batch",
    "estimate_mean_determinant",
    "estimate_density",
    "estimate_petermann",
    "estimate_overlap_correlator",
    "default_bin_edges",
]

#: eigenvector-matrix condition number beyond which a sample is flagged
#: near-defective and excluded from overlap statistics
DEFAULT_CONDITION_LIMIT = 1e12


class SpectralPointError(ValueError):
    """Raised when an evaluation point sits numerically on the spectrum."""


@dataclass(frozen=True)
class QuaternionPoint:
    """Evaluation point ``(z, w)`` of the characteristic determinant.

    ``r = |w|`` is cached; the determinant depends on ``w`` only through it.
    """

    z: complex
    w: complex
    r: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", abs(self.w))

    @classmethod
    def from_radius(cls, z: complex, r: float) -> "QuaternionPoint":
        if r < 0:
            raise ValueError(f"radius must be >= 0, got {r}")
        return cls(z=complex(z), w=complex(r))


@dataclass(frozen=True)
class LogDeterminant:
    """A positive determinant stored as its natural log (-inf marks zero)."""

    log_value: float

    @property
    def value(self) -> float:
        return float(np.exp(self.log_value))


@dataclass(frozen=True)
class MeanLogDeterminant:
    """Log of an ensemble-mean determinant with its log-domain standard error.

    ``dominated`` is set when the effective sample size of the max-shifted
    mean drops below 10, i.e. a handful of samples carry the average.
    """

    log_mean: float
    log_std_error: float
    effective_sample_size: float
    num_samples: int

    @property
    def dominated(self) -> bool:
        return self.effective_sample_size < 10.0


@dataclass
class SpectralSample:
    """Eigenvalues and bi-orthogonal overlap data of one matrix.

    ``diag_overlaps[i]`` is ``<L_i|L_i><R_i|R_i>`` with the normalization
    ``<L_i|R_j> = delta_ij`` enforced by construction, hence always >= 1.
    ``condition_flag`` marks near-defective decompositions whose overlaps
    are untrustworthy.
    """

    eigenvalues: np.ndarray
    diag_overlaps: np.ndarray
    full_overlaps: np.ndarray | None = None
    condition_number: float = np.nan
    condition_flag: bool = False

    @property
    def N(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass
class RadialProfile:
    """Annulus-binned radial statistic with per-bin standard errors."""

    bin_edges: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    counts: np.ndarray

    def __post_init__(self) -> None:
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def areas(self) -> np.ndarray:
        return np.pi * np.diff(self.bin_edges**2)


def default_bin_edges(tau: float, width_factor: float = 0.05, rmax_factor: float = 1.2) -> np.ndarray:
    """Annulus edges 0 .. rmax_factor*sqrt(tau) in steps of width_factor*sqrt(tau)."""
    width = width_factor * np.sqrt(tau)
    n = int(np.ceil(rmax_factor / width_factor))
    return width * np.arange(n + 1)


def eigen_full(
    state: MatrixState,
    *,
    keep_full_overlaps: bool = False,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
) -> SpectralSample:
    """Full eigendecomposition with bi-orthogonal overlaps.

    Right eigenvectors come from the dense solver; left eigenvectors are the
    rows of the inverse right-eigenvector matrix, so ``<L_i|R_j> = delta_ij``
    holds exactly by construction.  The diagonal overlap is then
    ``O_ii = |L_i|^2 |R_i|^2 >= 1``.

    Raises ``numpy.linalg.LinAlgError`` if the decomposition fails, and sets
    ``condition_flag`` (without raising) when the eigenvector matrix condition
    number exceeds ``condition_limit``.
    """
    x = state.entries
    lam, right = np.linalg.eig(x)
    cond = np.linalg.cond(right)
    left = np.linalg.inv(right)  # rows are the left eigenvectors

    trace_dev = abs(lam.sum() - np.trace(x))
    scale = max(abs(np.trace(x)), float(np.linalg.norm(x)), 1.0)
    if trace_dev > 1e-8 * state.N * scale:
        raise np.linalg.LinAlgError(
            f"eigenvalue sum deviates from trace by {trace_dev:.3e}"
        )

    o_diag = np.sum(np.abs(left) ** 2, axis=1) * np.sum(np.abs(right) ** 2, axis=0)
    full = None
    if keep_full_overlaps:
        full = (left @ left.conj().T) * (right.conj().T @ right).T
    return SpectralSample(
        eigenvalues=lam,
        diag_overlaps=o_diag.real,
        full_overlaps=full,
        condition_number=float(cond),
        condition_flag=bool(cond > condition_limit),
    )


def resolvent_trace(state: MatrixState, z: complex, *, rcond_limit: float = 1e-13) -> complex:
    """Normalized resolvent trace ``(1/N) tr (z - X)^{-1}`` via an LU solve."""
    n = state.N
    a = z * np.eye(n) - state.entries
    anorm = scipy.linalg.norm(a, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # exact singularity is a handled case
        lu, piv = scipy.linalg.lu_factor(a)
    rcond, _ = scipy.linalg.lapack.zgecon(lu, anorm)
    if not np.isfinite(rcond) or rcond < rcond_limit:
        raise SpectralPointError(
            f"z={z} is numerically on the spectrum (rcond={rcond:.2e})"
        )
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(n, dtype=complex))
    return complex(np.trace(inv) / n)


def resolvent_trace_eigs(eigenvalues: np.ndarray, z: complex) -> complex:
    """Resolvent trace from precomputed eigenvalues: ``mean(1 / (z - lam))``."""
    d = z - np.asarray(eigenvalues)
    if np.any(d == 0):
        raise SpectralPointError(f"z={z} coincides with an eigenvalue")
    return complex(np.mean(1.0 / d))


def _log_det_from_singular_values(sv: np.ndarray, r: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.sum(np.log(sv**2 + r**2), axis=-1)


def quaternionic_determinant(state: MatrixState, p: QuaternionPoint) -> LogDeterminant:
    """``log det[(z - X)(z - X)^dag + |w|^2]`` for one sample.

    Computed from the singular values ``s_i`` of ``z - X`` as
    ``sum_i log(s_i^2 + |w|^2)``, which never forms the squared matrix and
    stays exact down to ``w = 0`` where the result is ``log |det(z - X)|^2``
    (``-inf`` if ``z`` is an eigenvalue).
    """
    a = p.z * np.eye(state.N) - state.entries
    sv = np.linalg.svd(a, compute_uv=False)
    return LogDeterminant(float(_log_det_from_singular_values(sv, p.r)))


def log_determinants_batch(matrices: np.ndarray, p: QuaternionPoint) -> np.ndarray:
    """Vectorized ``quaternionic_determinant`` over a stack of matrices."""
    matrices = np.asarray(matrices)
    n = matrices.shape[-1]
    a = p.z * np.eye(n) - matrices
    sv = np.linalg.svd(a, compute_uv=False)
    return _log_det_from_singular_values(sv, p.r)


def mean_log_from_logs(log_values: np.ndarray) -> MeanLogDeterminant:
    """Max-shifted (log-sum-exp) mean of ``exp(log_values)`` with standard error."""
    logs = np.asarray(log_values, dtype=float)
    if logs.size < 2:
        raise ValueError("need at least 2 samples to form a mean with an error bar")
    a = logs.max()
    x = np.exp(logs - a)
    m = x.mean()
    se_log = float(x.std(ddof=1) / np.sqrt(x.size) / m)
    ess = float(x.sum() ** 2 / np.sum(x**2))
    return MeanLogDeterminant(
        log_mean=float(a + np.log(m)),
        log_std_error=se_log,
        effective_sample_size=ess,
        num_samples=int(x.size),
    )


def estimate_mean_determinant(
    samples: Sequence[MatrixState], p: QuaternionPoint
) -> MeanLogDeterminant:
    """Log of the ensemble-mean characteristic determinant.

    The reduction is overflow-free: per-sample log-determinants are shifted
    by their maximum before exponentiating, and the standard error is
    propagated in log domain.
    """
    stack = np.stack([s.entries for s in samples])
    return mean_log_from_logs(log_determinants_batch(stack, p))


def _bin_index(moduli: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Left-closed annulus index per eigenvalue; out-of-range marked -1."""
    idx = np.searchsorted(edges, moduli, side="right") - 1
    nb = len(edges) - 1
    return np.where((idx >= 0) & (idx < nb) & (moduli >= edges[0]), idx, -1)


def _binned_moduli(samples: Sequence[SpectralSample], edges: np.ndarray):
    nb = len(edges) - 1
    for s in samples:
        idx = _bin_index(np.abs(s.eigenvalues), edges)
        yield np.bincount(idx[idx >= 0], minlength=nb)


def estimate_density(
    samples: Sequence[SpectralSample],
    bin_edges: np.ndarray | None = None,
    tau: float = 1.0,
) -> RadialProfile:
    """Radial eigenvalue density ``count / (num_samples * N * annulus_area)``.

    The per-bin standard error is the spread of per-sample densities over
    ``sqrt(num_samples)`` (per-bin Poisson error for a single sample).  Empty
    bins report value 0 with an infinite standard error.  Summing
    ``value * area`` over bins recovers the fraction of eigenvalues covered
    by the edges exactly.
    """
    if len(samples) < 1:
        raise ValueError("need at least one sample")
    if bin_edges is None:
        bin_edges = default_bin_edges(tau)
    edges = np.asarray(bin_edges, dtype=float)
    n_dim = samples[0].N
    per_sample = np.stack(list(_binned_moduli(samples, edges)))
    areas = np.pi * np.diff(edges**2)
    norm = n_dim * areas
    counts = per_sample.sum(axis=0)
    values = counts / (len(samples) * norm)
    if len(samples) >= 2:
        std_errors = per_sample.std(axis=0, ddof=1) / np.sqrt(len(samples)) / norm
    else:
        std_errors = np.sqrt(counts) / norm
    std_errors = np.where(counts == 0, np.inf, std_errors)
    return RadialProfile(bin_edges=edges, values=values, std_errors=std_errors, counts=counts)


def _overlap_bin_sums(
    samples: Sequence[SpectralSample], edges: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Per-bin sum, sum of squares and count of diagonal overlaps.

    Condition-flagged samples are excluded; the number used is returned.
    """
    nb = len(edges) - 1
    s1 = np.zeros(nb)
    s2 = np.zeros(nb)
    cnt = np.zeros(nb, dtype=np.int64)
    used = 0
    for s in samples:
        if s.condition_flag:
            continue
        used += 1
        idx = _bin_index(np.abs(s.eigenvalues), edges)
        ok = idx >= 0
        np.add.at(s1, idx[ok], s.diag_overlaps[ok])
        np.add.at(s2, idx[ok], s.diag_overlaps[ok] ** 2)
        np.add.at(cnt, idx[ok], 1)
    return s1, s2, cnt, used


def estimate_petermann(
    samples: Sequence[SpectralSample], bin_edges: np.ndarray
) -> RadialProfile:
    """Petermann factor per annulus: the mean diagonal overlap O_ii there.

    This equals the ratio of the binned overlap correlator to ``pi`` times
    the binned density, rescaled by N, identically on the same samples and
    bins.  Bins without any eigenvalue are undefined (NaN value, infinite
    error); condition-flagged samples are skipped.
    """
    if len(samples) < 1:
        raise ValueError("need at least one sample")
    edges = np.asarray(bin_edges, dtype=float)
    s1, s2, cnt, _ = _overlap_bin_sums(samples, edges)
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(cnt > 0, s1 / np.maximum(cnt, 1), np.nan)
        var = s2 / np.maximum(cnt, 1) - values**2
        std_errors = np.where(
            cnt > 1, np.sqrt(np.maximum(var, 0.0) / np.maximum(cnt - 1, 1)), np.inf
        )
    return RadialProfile(bin_edges=edges, values=values, std_errors=std_errors, counts=cnt)


def estimate_overlap_correlator(
    samples: Sequence[SpectralSample], bin_edges: np.ndarray
) -> RadialProfile:
    """Binned eigenvector correlator: ``(pi/N^2) <sum_i O_ii delta^2(z - lam_i)>``.

    Per annulus this is ``(pi/N^2) * (overlap sum per sample) / area``.  Its
    ratio to ``pi`` times the density estimator times N reproduces
    ``estimate_petermann`` exactly.
    """
    if len(samples) < 1:
        raise ValueError("need at least one sample")
    edges = np.asarray(bin_edges, dtype=float)
    n_dim = samples[0].N
    s1, s2, cnt, used = _overlap_bin_sums(samples, edges)
    if used == 0:
        raise ValueError("all samples are condition-flagged")
    areas = np.pi * np.diff(edges**2)
    scale = np.pi / (n_dim**2 * used * areas)
    values = s1 * scale
    std_errors = np.sqrt(np.maximum(s2, 0.0)) * scale  # crude upper bound
    return RadialProfile(bin_edges=edges, values=values, std_errors=std_errors, counts=cnt)
