"""Experiment configuration: flat key-value files with CLI overrides.

A config file holds ``key = value`` lines (``#`` comments allowed); values
given on the command line via ``--set key=value`` win over the file, and
dedicated flags (``--out``, ``--workers``) win over both.  Lists are
comma-separated, evaluation points semicolon-separated tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any

EXPERIMENTS = (
    "density",
    "petermann",
    "greens",
    "characteristics",
    "edge",
    "verify-burgers",
    "determinant-check",
)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    out: str = "."
    N: int = 100
    tau: float = 1.0
    tau_grid: tuple[float, ...] | None = None
    num_samples: int = 1000
    master_seed: int = 20260810
    workers: int | None = None
    # annulus binning
    bin_scheme: str = "width"  # "width" | "equal_area"
    bin_width_factor: float = 0.05
    bin_rmax_factor: float = 1.2
    bin_count: int = 24
    # petermann / greens target radii
    abs_z_list: tuple[float, ...] = (0.0, 0.5, 0.8)
    scale_abs_z_by_sqrt_tau: bool = True
    annulus_half_width_factor: float = 0.075
    phase: float = 0.0
    condition_limit: float = 1e12
    outlier_radius_factor: float = 1.1
    # characteristics
    abs_z: float = 1.0
    tau_max: float = 3.0
    xi_min: float = 0.0
    xi_max: float = 2.4
    xi_count: int = 25
    tau_count: int = 121
    # edge profile
    eta_min: float = -3.0
    eta_max: float = 3.0
    eta_count: int = 25
    # quadrature / residual checks
    quad_rel_tol: float | None = None
    fd_step: float = 1e-3
    check_points: tuple[tuple[float, ...], ...] = ()
    residual_tol: float = 1e-5
    constraint_tol: float = 1e-6
    sigma_tol: float = 3.0

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.N < 1 or self.num_samples < 1:
            raise ConfigError("N and num_samples must be >= 1")
        if not self.tau >= 0:
            raise ConfigError("tau must be >= 0")
        if self.bin_scheme not in ("width", "equal_area"):
            raise ConfigError(f"unknown bin_scheme {self.bin_scheme!r}")

    @property
    def taus(self) -> tuple[float, ...]:
        return self.tau_grid if self.tau_grid else (self.tau,)

    def to_mapping(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            out[f.name] = v
        return out


class ConfigError(ValueError):
    """Invalid configuration: unknown key, bad type, or bad value."""


_BOOL = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}


def _parse_scalar(text: str):
    s = text.strip()
    low = s.lower()
    if low in _BOOL:
        return _BOOL[low]
    if low in ("none", "null", ""):
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def parse_value(key: str, text: str):
    """Parse one raw string according to the key's declared type."""
    s = text.strip()
    if key == "check_points":
        pts = []
        for group in s.split(";"):
            group = group.strip()
            if not group:
                continue
            pts.append(tuple(float(x) for x in group.split(",")))
        return tuple(pts)
    if key in ("tau_grid", "abs_z_list"):
        if s.lower() in ("none", "null", ""):
            return None
        return tuple(float(x) for x in s.split(","))
    return _parse_scalar(s)


def parse_config_file(path: str) -> dict[str, Any]:
    raw: dict[str, Any] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
            key, _, value = stripped.partition("=")
            raw[key.strip()] = parse_value(key.strip(), value)
    return raw


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}

# experiment-specific defaults applied when the user did not set the key
_EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "density": {"N": 200, "num_samples": 1000},
    "petermann": {"N": 100, "num_samples": 3000, "tau_grid": (0.5, 1.0, 2.0)},
    "greens": {"N": 200, "num_samples": 1000, "abs_z_list": (0.5, 1.5)},
    "edge": {"N": 200},
    "verify-burgers": {
        "N": 10,
        "check_points": ((1.0, 0.0, 0.5, 1.0), (1.0, 0.5, 0.5, 1.0)),
    },
    "determinant-check": {
        "N": 20,
        "num_samples": 20000,
        "check_points": (
            (1.2, 0.0, 0.3),
            (0.5, 0.0, 0.5),
            (0.0, 0.0, 0.4),
            (1.5, 0.0, 0.2),
            (0.8, 0.0, 0.1),
        ),
    },
}


def build_config(
    experiment: str,
    file_values: dict[str, Any] | None = None,
    set_values: dict[str, Any] | None = None,
    out: str | None = None,
    workers: int | None = None,
) -> ExperimentConfig:
    """Merge defaults, experiment defaults, config file and overrides (in that order)."""
    merged: dict[str, Any] = dict(_EXPERIMENT_DEFAULTS.get(experiment, {}))
    for source in (file_values or {}), (set_values or {}):
        for key, value in source.items():
            if key == "experiment":
                continue  # the subcommand decides
            if key not in _FIELD_NAMES:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    if out is not None:
        merged["out"] = out
    if workers is not None:
        merged["workers"] = workers
    try:
        return ExperimentConfig(experiment=experiment, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_set_args(pairs: list[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        out[key.strip()] = parse_value(key.strip(), value)
    return out
