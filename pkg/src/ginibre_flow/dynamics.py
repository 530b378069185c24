"""Brownian-motion sampling of complex Ginibre matrices.

Matrix entries perform independent complex Brownian motion with per-entry
complex variance ``dtau / N`` (``dtau / 2N`` in each of the real and imaginary
parts).  Every sample owns a counter-based RNG stream keyed by
``(master_seed, sample_index)``, so ensembles are bit-reproducible under any
degree of parallelism and any execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DiffusionParams",
    "InitialCondition",
    "MatrixState",
    "make_initial",
    "rng_stream",
    "sample_at_time",
    "evolve_increment",
]

_MAX_SEED = 2**64


@dataclass(frozen=True)
class DiffusionParams:
    """Parameters of one diffusion ensemble.

    Attributes
    ----------
    N : int
        Matrix dimension, at least 1.
    tau : float
        Diffusion time, non-negative.
    master_seed : int
        64-bit master seed; combined with the sample index to key one
        independent RNG stream per sample.
    num_samples : int
        Ensemble size, at least 1.
    """

    N: int
    tau: float
    master_seed: int
    num_samples: int = 1

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"matrix dimension must be >= 1, got {self.N}")
        if not self.tau >= 0.0:
            raise ValueError(f"diffusion time must be >= 0, got {self.tau}")
        if self.num_samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {self.num_samples}")
        if not 0 <= self.master_seed < _MAX_SEED:
            raise ValueError("master_seed must fit in 64 bits")


@dataclass(frozen=True)
class InitialCondition:
    """Initial matrix of the diffusion: zero, nilpotent, or user-supplied.

    ``zero`` gives the all-zeros matrix; ``nilpotent(a)`` is zero except for
    entry (0, 1) equal to ``a``; ``custom`` carries an explicit matrix.
    """

    kind: str
    amplitude: complex = 1.0
    matrix: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def zero(cls) -> "InitialCondition":
        return cls(kind="zero")

    @classmethod
    def nilpotent(cls, amplitude: complex = 1.0) -> "InitialCondition":
        return cls(kind="nilpotent", amplitude=amplitude)

    @classmethod
    def custom(cls, matrix: np.ndarray) -> "InitialCondition":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"custom initial condition must be square, got shape {m.shape}")
        return cls(kind="custom", matrix=m)

    def build(self, N: int) -> np.ndarray:
        if N < 1:
            raise ValueError(f"matrix dimension must be >= 1, got {N}")
        if self.kind == "zero":
            return np.zeros((N, N), dtype=complex)
        if self.kind == "nilpotent":
            m = np.zeros((N, N), dtype=complex)
            if N < 2:
                raise ValueError("nilpotent initial condition needs dimension >= 2")
            m[0, 1] = self.amplitude
            return m
        if self.kind == "custom":
            assert self.matrix is not None
            if self.matrix.shape != (N, N):
                raise ValueError(
                    f"custom matrix has shape {self.matrix.shape}, expected {(N, N)}"
                )
            return self.matrix.copy()
        raise ValueError(f"unknown initial condition kind {self.kind!r}")


@dataclass(frozen=True)
class MatrixState:
    """One matrix sample on a diffusion path.

    ``entries`` is read-only once constructed; states are safe to share
    across workers.  ``seed_lineage`` records ``(master_seed, sample_index,
    step_count)`` so any state can be regenerated.
    """

    entries: np.ndarray
    tau: float
    seed_lineage: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"entries must be a square matrix, got shape {entries.shape}")
        if not np.all(np.isfinite(entries.view(float))):
            raise ValueError("matrix entries must be finite")
        if not self.tau >= 0.0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def N(self) -> int:
        return self.entries.shape[0]


def make_initial(kind: InitialCondition, N: int) -> MatrixState:
    """Build the initial matrix state at ``tau = 0``."""
    return MatrixState(entries=kind.build(N), tau=0.0)


def rng_stream(master_seed: int, sample_index: int) -> np.random.Generator:
    """Independent counter-based stream for one ``(master_seed, sample_index)``.

    Philox streams with distinct keys never overlap, which is what makes
    sample-parallel generation reproducible regardless of scheduling.
    """
    key = np.array([master_seed, sample_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _gaussian_increment(rng: np.random.Generator, N: int, dtau: float) -> np.ndarray:
    scale = np.sqrt(dtau / (2.0 * N))
    return scale * (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)))


def sample_at_time(
    params: DiffusionParams, init: InitialCondition, sample_index: int
) -> MatrixState:
    """Draw sample ``sample_index`` of the ensemble directly at time ``tau``.

    Returns ``X0 + sqrt(tau) * G`` with ``G`` an i.i.d. complex Gaussian
    matrix of per-entry variance ``1/N``.  Identical ``(master_seed,
    sample_index)`` give bit-identical matrices.
    """
    if not 0 <= sample_index < params.num_samples:
        raise ValueError(
            f"sample_index {sample_index} outside [0, {params.num_samples})"
        )
    x0 = init.build(params.N)
    if params.tau == 0.0:
        return MatrixState(entries=x0, tau=0.0, seed_lineage=(params.master_seed, sample_index, 0))
    rng = rng_stream(params.master_seed, sample_index)
    x = x0 + _gaussian_increment(rng, params.N, params.tau)
    return MatrixState(
        entries=x, tau=params.tau, seed_lineage=(params.master_seed, sample_index, 1)
    )


def evolve_increment(
    state: MatrixState, dtau: float, rng: np.random.Generator
) -> MatrixState:
    """Advance a state by one Brownian increment of duration ``dtau``.

    The increment has independent complex Gaussian entries of variance
    ``dtau / N``; increments over successive calls compose to the direct
    ``sample_at_time`` law.
    """
    if not dtau > 0.0:
        raise ValueError(f"dtau must be > 0, got {dtau}")
    master_seed, sample_index, steps = state.seed_lineage
    x = state.entries + _gaussian_increment(rng, state.N, dtau)
    return MatrixState(
        entries=x,
        tau=state.tau + dtau,
        seed_lineage=(master_seed, sample_index, steps + 1),
    )
