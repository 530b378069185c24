"""Experiment implementations behind the CLI.

Each experiment samples (or evaluates closed forms), writes CSV data files
plus a ``manifest.json`` run record, and returns the manifest.  Rerunning
with an identical configuration reproduces every data file bit-identically,
whatever the worker count: sampling uses keyed per-sample RNG streams and all
floating-point reductions run over per-sample results in index order.
"""

from __future__ import annotations

import math
import os
import time

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .csvio import sha256_file, write_csv, write_json, write_radial_profile
from .dynamics import DiffusionParams, InitialCondition, sample_at_time
from .finiten import QuadratureSpec, burgers_residual_g, burgers_residual_v, flow_constraint_residual, log_d_quadrature, log_rho_finite, rho_edge_erfc, rho_finite_normalization, rho_finite_reference
from .flow import caustic_locus, characteristics_fan, g_analytic, petermann_analytic, shock_birth_time
from .parallel import resolve_workers, run_chunked
from .spectral import (
    QuaternionPoint,
    SpectralSample,
    estimate_density,
    estimate_petermann,
    log_determinants_batch,
    mean_log_from_logs,
)

__all__ = ["run"]

_ZERO = InitialCondition.zero()


# ---------------------------------------------------------------- workers

def _spectral_chunk(args) -> list:
    """Eigen-data for one chunk of sample indices.

    Returns per-sample tuples ``(eigenvalues, diag_overlaps | None,
    condition_flag, condition_number)``; overlaps are computed only when
    requested.
    """
    n_dim, tau, seed, num_samples, need_overlaps, condition_limit, lo, hi = args
    from .spectral import eigen_full  # local import keeps spawn start cheap

    params = DiffusionParams(N=n_dim, tau=tau, master_seed=seed, num_samples=num_samples)
    out = []
    for i in range(lo, hi):
        state = sample_at_time(params, _ZERO, i)
        if need_overlaps:
            s = eigen_full(state, condition_limit=condition_limit)
            out.append((s.eigenvalues, s.diag_overlaps, s.condition_flag, s.condition_number))
        else:
            lam = np.linalg.eigvals(state.entries)
            out.append((lam, None, False, float("nan")))
    return out


def _logdet_chunk(args) -> np.ndarray:
    """Log-determinants, shape (n_points, chunk), for one chunk of samples."""
    n_dim, tau, seed, num_samples, points, lo, hi = args
    params = DiffusionParams(N=n_dim, tau=tau, master_seed=seed, num_samples=num_samples)
    stack = np.stack([sample_at_time(params, _ZERO, i).entries for i in range(lo, hi)])
    rows = []
    for (z_re, z_im, r) in points:
        p = QuaternionPoint.from_radius(complex(z_re, z_im), r)
        rows.append(log_determinants_batch(stack, p))
    return np.stack(rows)


def _gather_samples(cfg: ExperimentConfig, tau: float, seed: int, need_overlaps: bool):
    chunks = run_chunked(
        _spectral_chunk,
        (cfg.N, tau, seed, cfg.num_samples, need_overlaps, cfg.condition_limit),
        cfg.num_samples,
        workers=resolve_workers(cfg.workers),
    )
    samples = []
    for chunk in chunks:
        for lam, overlaps, flag, cond in chunk:
            samples.append(
                SpectralSample(
                    eigenvalues=lam,
                    diag_overlaps=overlaps if overlaps is not None else np.array([]),
                    condition_flag=flag,
                    condition_number=cond,
                )
            )
    return samples


# ------------------------------------------------------------- binning

def bin_edges_for(cfg: ExperimentConfig, tau: float) -> np.ndarray:
    rmax = cfg.bin_rmax_factor * math.sqrt(tau)
    if cfg.bin_scheme == "equal_area":
        return rmax * np.sqrt(np.linspace(0.0, 1.0, cfg.bin_count + 1))
    width = cfg.bin_width_factor * math.sqrt(tau)
    n = int(np.ceil(cfg.bin_rmax_factor / cfg.bin_width_factor))
    return width * np.arange(n + 1)


def target_annuli(cfg: ExperimentConfig, tau: float) -> list[tuple[float, float, float]]:
    """(target, lo, hi) annuli around each requested radius."""
    scale = math.sqrt(tau) if cfg.scale_abs_z_by_sqrt_tau else 1.0
    half = cfg.annulus_half_width_factor * math.sqrt(tau)
    out = []
    for t in cfg.abs_z_list:
        center = t * scale
        out.append((center, max(0.0, center - half), center + half))
    return out


# ----------------------------------------------------------- experiments

def _run_density(cfg: ExperimentConfig, out_dir: str):
    samples = _gather_samples(cfg, cfg.tau, cfg.master_seed, need_overlaps=False)
    edges = bin_edges_for(cfg, cfg.tau)
    prof = estimate_density(samples, edges, tau=cfg.tau)
    files = {}
    files["density_profile.csv"] = write_radial_profile(
        os.path.join(out_dir, "density_profile.csv"), prof
    )
    centers = prof.centers
    files["density_reference.csv"] = write_csv(
        os.path.join(out_dir, "density_reference.csv"),
        ["abs_z", "value"],
        [(c, rho_finite_reference(c, cfg.tau, cfg.N)) for c in centers],
    )
    moduli = np.concatenate([np.abs(s.eigenvalues) for s in samples])
    outside = float(np.mean(moduli > cfg.outlier_radius_factor * math.sqrt(cfg.tau)))
    total = float(np.sum(prof.values * prof.areas))
    summary = {
        "eigenvalues_total": int(moduli.size),
        "outside_fraction": outside,
        "covered_mass": total,
        "bulk_value_expected": 1.0 / (math.pi * cfg.tau),
    }
    return files, summary, []


def _run_petermann(cfg: ExperimentConfig, out_dir: str):
    rows = []
    profile_files = {}
    excluded = 0
    total = 0
    for k, tau in enumerate(cfg.taus):
        seed = cfg.master_seed + k  # independent ensemble per diffusion time
        samples = _gather_samples(cfg, tau, seed, need_overlaps=True)
        excluded += sum(s.condition_flag for s in samples)
        total += len(samples)
        annuli = target_annuli(cfg, tau)
        edges_flat: list[float] = []
        for center, lo, hi in annuli:
            prof = estimate_petermann(samples, np.array([lo, hi]))
            knorm = prof.values[0] / cfg.N
            kerr = prof.std_errors[0] / cfg.N
            theory = petermann_analytic(center, tau)
            rows.append(
                (
                    tau,
                    center,
                    lo,
                    hi,
                    knorm,
                    kerr,
                    prof.counts[0],
                    theory if theory is not None else float("nan"),
                )
            )
            edges_flat.extend((lo, hi))
        full = estimate_petermann(samples, bin_edges_for(cfg, tau))
        name = f"petermann_profile_tau{k}.csv"
        profile_files[name] = write_radial_profile(os.path.join(out_dir, name), full)
    files = dict(profile_files)
    files["petermann.csv"] = write_csv(
        os.path.join(out_dir, "petermann.csv"),
        ["tau", "abs_z", "bin_lo", "bin_hi", "value", "std_error", "count", "theory"],
        rows,
    )
    summary = {
        "samples_total": total,
        "samples_excluded_near_defective": int(excluded),
        "exclusion_rate": excluded / total if total else 0.0,
        "value_is": "petermann factor rescaled by 1/N",
    }
    return files, summary, []


def _run_greens(cfg: ExperimentConfig, out_dir: str):
    samples = _gather_samples(cfg, cfg.tau, cfg.master_seed, need_overlaps=False)
    scale = math.sqrt(cfg.tau) if cfg.scale_abs_z_by_sqrt_tau else 1.0
    zs = [t * scale * complex(math.cos(cfg.phase), math.sin(cfg.phase)) for t in cfg.abs_z_list]
    rows = []
    for z in zs:
        vals = np.array([np.mean(1.0 / (z - s.eigenvalues)) for s in samples])
        mean = vals.mean()
        se_re = vals.real.std(ddof=1) / math.sqrt(len(vals))
        se_im = vals.imag.std(ddof=1) / math.sqrt(len(vals))
        theory = g_analytic(z, cfg.tau)
        rows.append(
            (abs(z), z.real, z.imag, mean.real, mean.imag, se_re, se_im, theory.real, theory.imag)
        )
    files = {
        "greens.csv": write_csv(
            os.path.join(out_dir, "greens.csv"),
            ["abs_z", "z_re", "z_im", "mean_re", "mean_im", "std_error_re", "std_error_im", "theory_re", "theory_im"],
            rows,
        )
    }
    return files, {"num_samples": cfg.num_samples}, []


def _run_characteristics(cfg: ExperimentConfig, out_dir: str):
    xi_grid = np.linspace(cfg.xi_min, cfg.xi_max, cfg.xi_count)
    lines = characteristics_fan(cfg.abs_z, cfg.tau_max, list(xi_grid))
    char_rows = []
    for line in lines:
        taus = np.linspace(line.tau_range[0], line.tau_range[1], cfg.tau_count)
        for t in taus:
            char_rows.append((line.xi, t, line.r_at(t)))
    birth = shock_birth_time(cfg.abs_z)
    caustic_rows = []
    for t in np.linspace(birth, cfg.tau_max, cfg.tau_count):
        for pt in caustic_locus(cfg.abs_z, t):
            caustic_rows.append((pt.xi_star, pt.tau, pt.r_star))
            caustic_rows.append((pt.xi_star, pt.tau, -pt.r_star))
    shock_rows = [(t, 0.0) for t in np.linspace(birth, cfg.tau_max, cfg.tau_count)]
    files = {
        "characteristics.csv": write_csv(
            os.path.join(out_dir, "characteristics.csv"), ["xi", "tau", "r"], char_rows
        ),
        "caustics.csv": write_csv(
            os.path.join(out_dir, "caustics.csv"), ["xi", "tau", "r"], caustic_rows
        ),
        "shock.csv": write_csv(os.path.join(out_dir, "shock.csv"), ["tau", "r"], shock_rows),
    }
    summary = {"shock_birth_tau": birth, "abs_z": cfg.abs_z}
    return files, summary, []


def _run_edge(cfg: ExperimentConfig, out_dir: str):
    spec = QuadratureSpec(rel_tol=cfg.quad_rel_tol) if cfg.quad_rel_tol else None
    etas = np.linspace(cfg.eta_min, cfg.eta_max, cfg.eta_count)
    mass = rho_finite_normalization(cfg.tau, cfg.N, spec)
    rows = []
    max_dev = 0.0
    for eta in etas:
        az = math.sqrt(cfg.tau) + eta / math.sqrt(cfg.N)
        value = math.exp(log_rho_finite(az, cfg.tau, cfg.N, spec)) if az > 0 else float("nan")
        ref = rho_edge_erfc(eta, cfg.tau)
        rows.append((eta, az, value, value / mass, ref))
        max_dev = max(max_dev, abs(value - ref))
    files = {
        "edge.csv": write_csv(
            os.path.join(out_dir, "edge.csv"),
            ["eta", "abs_z", "value", "value_renormalized", "reference_value"],
            rows,
        )
    }
    summary = {
        "normalization_mass": mass,
        "max_abs_deviation": max_dev,
        "bulk_value": 1.0 / (math.pi * cfg.tau),
    }
    return files, summary, []


def _run_verify_burgers(cfg: ExperimentConfig, out_dir: str):
    spec = QuadratureSpec(rel_tol=cfg.quad_rel_tol) if cfg.quad_rel_tol else None
    rows = []
    checks = []
    for pt in cfg.check_points:
        z_re, z_im, r = pt[0], pt[1], pt[2]
        tau = pt[3] if len(pt) > 3 else cfg.tau
        z = complex(z_re, z_im)
        res_v = burgers_residual_v(z, r, tau, cfg.N, cfg.fd_step, spec)
        res_g = burgers_residual_g(z, r, tau, cfg.N, cfg.fd_step, spec)
        constr = flow_constraint_residual(z, r, tau, cfg.N, cfg.fd_step, spec)
        res_v_inviscid = burgers_residual_v(
            z, r, tau, cfg.N, cfg.fd_step, spec, include_viscous=False
        )
        rows.append((z_re, z_im, r, tau, cfg.N, cfg.fd_step, res_v, res_g, constr, res_v_inviscid))
        label = f"z={z:g} r={r:g} tau={tau:g}"
        checks.append(
            {"name": f"velocity-equation residual [{label}]", "measured": res_v,
             "threshold": cfg.residual_tol, "passed": bool(res_v < cfg.residual_tol)}
        )
        checks.append(
            {"name": f"greens-equation residual [{label}]", "measured": res_g,
             "threshold": cfg.residual_tol, "passed": bool(res_g < cfg.residual_tol)}
        )
        checks.append(
            {"name": f"gradient constraint [{label}]", "measured": constr,
             "threshold": cfg.constraint_tol, "passed": bool(constr < cfg.constraint_tol)}
        )
    files = {
        "burgers_residuals.csv": write_csv(
            os.path.join(out_dir, "burgers_residuals.csv"),
            ["z_re", "z_im", "r", "tau", "N", "fd_step", "residual_v", "residual_g",
             "constraint", "residual_v_inviscid"],
            rows,
        )
    }
    return files, {"points": len(rows)}, checks


def _run_determinant_check(cfg: ExperimentConfig, out_dir: str):
    spec = QuadratureSpec(rel_tol=cfg.quad_rel_tol) if cfg.quad_rel_tol else None
    points = tuple((p[0], p[1], p[2]) for p in cfg.check_points)
    chunks = run_chunked(
        _logdet_chunk,
        (cfg.N, cfg.tau, cfg.master_seed, cfg.num_samples, points),
        cfg.num_samples,
        workers=resolve_workers(cfg.workers),
        chunk_size=256,
    )
    logs = np.concatenate(chunks, axis=1)  # (n_points, num_samples)
    rows = []
    checks = []
    for (z_re, z_im, r), point_logs in zip(points, logs):
        m = mean_log_from_logs(point_logs)
        quad_log = log_d_quadrature(complex(z_re, z_im), r, cfg.tau, cfg.N, spec)
        n_sigma = abs(m.log_mean - quad_log) / m.log_std_error
        rows.append(
            (z_re, z_im, r, cfg.tau, m.log_mean, m.log_std_error,
             m.effective_sample_size, quad_log, n_sigma)
        )
        checks.append(
            {
                "name": f"quadrature vs MC mean determinant [z={complex(z_re, z_im):g} r={r:g}]",
                "measured": n_sigma,
                "threshold": cfg.sigma_tol,
                "passed": bool(n_sigma < cfg.sigma_tol and not m.dominated),
            }
        )
    files = {
        "determinant_check.csv": write_csv(
            os.path.join(out_dir, "determinant_check.csv"),
            ["z_re", "z_im", "r", "tau", "log_mean_mc", "log_std_error",
             "effective_sample_size", "log_quadrature", "n_sigma"],
            rows,
        )
    }
    return files, {"num_samples": cfg.num_samples}, checks


_RUNNERS = {
    "density": _run_density,
    "petermann": _run_petermann,
    "greens": _run_greens,
    "characteristics": _run_characteristics,
    "edge": _run_edge,
    "verify-burgers": _run_verify_burgers,
    "determinant-check": _run_determinant_check,
}


def run(cfg: ExperimentConfig) -> dict:
    """Execute one experiment; returns the manifest written to the output dir.

    The manifest echoes the full configuration, lists every data file with
    its SHA-256, and records embedded-check verdicts; ``manifest['passed']``
    is False when any embedded numerical check failed.
    """
    out_dir = cfg.out
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    files, summary, checks = _RUNNERS[cfg.experiment](cfg, out_dir)
    wall = time.perf_counter() - t0
    manifest = {
        "experiment": cfg.experiment,
        "version": __version__,
        "config": cfg.to_mapping(),
        "rng": {
            "scheme": "philox-2x64 keyed by (master_seed, sample_index)",
            "master_seed": cfg.master_seed,
        },
        "files": {
            name: {"rows": rows, "sha256": sha256_file(os.path.join(out_dir, name))}
            for name, rows in files.items()
        },
        "summary": summary,
        "checks": checks,
        "passed": all(c["passed"] for c in checks) if checks else True,
        "wall_time_s": wall,
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    if not manifest["passed"]:
        write_json(
            os.path.join(out_dir, "failure_report.json"),
            {"experiment": cfg.experiment, "failed_checks": [c for c in checks if not c["passed"]]},
        )
    return manifest
