"""Fidelity evaluation, u_err fits and the error-vs-GVM sweeps."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import perturb
from .core import (
    ComplexWaveform,
    PhotonStatistics,
    WaveformSpec,
    build_grid,
    build_waveform,
    photon_stats_from_config,
    to_spectrum,
    write_columns,
)
from .design import ChirpBoundary, PhaseProfile, chirp_scale_for_compression, design_chirp_cdf
from .errors import ConfigurationError, FitError, QWCError
from .propagate import OMEGA, DispersionParams, EscortConfig, run_transfer

NORMALIZED_TOL = 1e-9


def overlap_fidelity(
    input: ComplexWaveform,
    chirp: PhaseProfile,
    a2_final: ComplexWaveform,
    stats: PhotonStatistics | None = None,
) -> float:
    """F = |sum_n |c_n|^2 O^n| with O = <-exp(-i phi) A | A2(T)>."""
    if abs(input.norm() - 1.0) > NORMALIZED_TOL:
        raise ConfigurationError(f"overlap_fidelity needs a normalized input (norm {input.norm():.12g})")
    ideal = -np.exp(-1j * chirp.phi) * input.samples
    o = complex(np.vdot(ideal, a2_final.samples) * input.grid.dz)
    if stats is None:
        return abs(o)
    p = stats.probabilities
    n = np.arange(len(p))
    return float(abs(np.sum(p * o**n)))


def entangled_fidelity(weights, pure_fidelities) -> float:
    w = np.asarray(weights, dtype=float)
    f = np.asarray(pure_fidelities, dtype=float)
    if w.shape != f.shape:
        raise ConfigurationError(f"{len(w)} weights for {len(f)} fidelities")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ConfigurationError(f"weights sum to {w.sum():.12g}, not 1")
    return float(np.dot(w, f))


@dataclass(frozen=True)
class SweepRow:
    compression: float
    u: float
    error_sim: float
    error_pert: float
    n_points: int
    n_steps: int
    ratio: float = 0.0
    status: str = "ok"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FitResult:
    u_err_fit: float
    residual: float
    n_used: int


def fit_u_err(rows) -> FitResult:
    """Fixed-slope log-log fit of error = (u/u_err)^2.

    Rows with non-positive (or failed) simulated error are dropped; the
    residual is the RMS relative deviation of the data from the fit.
    """
    pts = [(r.u, r.error_sim) for r in rows if r.u > 0 and math.isfinite(r.error_sim) and r.error_sim > 0]
    if len({u for u, _ in pts}) < 3:
        raise FitError(f"need at least 3 rows with distinct u > 0 and positive error, got {len(pts)}")
    u = np.array([p[0] for p in pts])
    e = np.array([p[1] for p in pts])
    log_uerr = float(np.mean(np.log(u) - 0.5 * np.log(e)))
    u_err = math.exp(log_uerr)
    model = (u / u_err) ** 2
    residual = float(np.sqrt(np.mean(((e - model) / model) ** 2)))
    return FitResult(u_err, residual, len(pts))


@dataclass(frozen=True)
class CaseConfig:
    """One conversion case: input pulse, target compression, GVM ratio and numerics.

    ``n_points = 0`` picks the grid size from the compression ratio.
    ``delta_scale`` multiplies the optimal compensation phase (1 = optimal).
    ``gvd_phase`` > 0 switches on equal GVD in all three modes with the
    magnitude that produces that much phase over the output bandwidth in T.
    """

    tau: float = 1.0
    rise: float = 0.02
    compression: float = 100.0
    ratio: float = -2.0 / 3.0
    u_values: tuple = (0.004, 0.008, 0.013, 0.02)
    n_points: int = 0
    z_min: float = -1.0
    z_max: float = 11.0
    n_steps: int = 2048
    coverage: str = "full-spectrum"
    delta_scale: float = 1.0
    photons: object = 1
    gvd_phase: float = 0.0
    jobs: int = 0

    def __post_init__(self):
        if not self.compression > 0:
            raise ConfigurationError("compression must be > 0")
        object.__setattr__(self, "u_values", tuple(float(u) for u in self.u_values))
        ChirpBoundary.from_name(self.coverage)
        if self.n_points:
            build_grid(self.n_points, self.z_min, self.z_max)

    @property
    def grid_points(self) -> int:
        if self.n_points:
            return int(self.n_points)
        n = 4096
        while n < 4096 * self.compression / 100.0:
            n *= 2
        return n

    def grid(self):
        return build_grid(self.grid_points, self.z_min, self.z_max)

    def stats(self) -> PhotonStatistics:
        return photon_stats_from_config(self.photons)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["u_values"] = list(self.u_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CaseConfig":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ConfigurationError(f"unknown case fields {sorted(extra)}")
        d = dict(d)
        if "u_values" in d:
            d["u_values"] = tuple(d["u_values"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class CaseSetup:
    config: CaseConfig
    input: ComplexWaveform
    chirp: PhaseProfile
    stats: PhotonStatistics
    beta: float = 0.0


def gvd_for_phase(input: ComplexWaveform, chirp: PhaseProfile, phase: float, power: float = 0.99,
                  transfer_time: float = 1.0) -> float:
    """beta with beta k_bw^2 T / 2 = phase, k_bw the half-band holding ``power`` of the output."""
    spec = to_spectrum(input.with_samples(np.exp(-1j * chirp.phi) * input.samples))
    k = np.abs(spec.grid.k)
    p = np.abs(spec.samples) ** 2
    order = np.argsort(k)
    cum = np.cumsum(p[order]) / p.sum()
    k_bw = float(k[order][np.searchsorted(cum, power)])
    return 2 * phase / (k_bw**2 * transfer_time)


def setup_case(config: CaseConfig) -> CaseSetup:
    grid = config.grid()
    a = build_waveform(WaveformSpec.exponential(config.tau, config.rise), grid)
    chirp = design_chirp_cdf(
        a, chirp_scale_for_compression(config.tau, config.compression), ChirpBoundary.from_name(config.coverage)
    )
    beta = gvd_for_phase(a, chirp, config.gvd_phase) if config.gvd_phase > 0 else 0.0
    return CaseSetup(config, a, chirp, config.stats(), beta)


def case_models(setup: CaseSetup, u: float):
    """(disp, escort cfg, Delta) for one GVM value with the configured compensation."""
    c = setup.config
    disp = DispersionParams(u=u, beta1=setup.beta, beta2=setup.beta)
    cfg = EscortConfig(setup.chirp, omega=OMEGA, u_e=c.ratio * u, beta3=setup.beta)
    delta = c.delta_scale * perturb.optimal_compensation(setup.chirp, disp, cfg)
    return disp, cfg.with_compensation(delta), delta


def simulate_error(setup: CaseSetup, u: float) -> float:
    disp, cfg, _ = case_models(setup, u)
    res = run_transfer(setup.input, cfg, disp, n_steps=setup.config.n_steps)
    return 1.0 - overlap_fidelity(setup.input, setup.chirp, res.a2_final, setup.stats)


def perturbative_case_error(setup: CaseSetup, u: float) -> float:
    disp, cfg, delta = case_models(setup, u)
    return perturb.perturbative_error(setup.input, setup.chirp, delta, disp, cfg, setup.stats, warn=False).error


def _row(args) -> SweepRow:
    config, u = args
    setup = setup_case(config)
    err_pert = perturbative_case_error(setup, u)
    try:
        err_sim = simulate_error(setup, u)
        status = "ok"
    except QWCError as exc:
        err_sim, status = math.nan, f"{type(exc).__name__}: {exc}"
    return SweepRow(config.compression, u, err_sim, err_pert, config.grid_points, config.n_steps, config.ratio, status)


def resolve_jobs(jobs: int | None) -> int:
    if jobs:
        return max(1, int(jobs))
    env = os.environ.get("QWC_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map(fn, items, jobs):
    jobs = min(resolve_jobs(jobs), max(1, len(items)))
    if jobs == 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def sweep_error_vs_u(config: CaseConfig) -> list[SweepRow]:
    """One row per u (simulated and perturbative error), in input order."""
    return _map(_row, [(config, u) for u in config.u_values], config.jobs)


@dataclass(frozen=True)
class CompressionPoint:
    compression: float
    u_err_fit: float
    u_err_pert: float
    residual: float
    rows: tuple = field(default=(), compare=False)


def sweep_u_err_vs_compression(config: CaseConfig, compressions) -> list[CompressionPoint]:
    """Fit u_err to simulated sweeps at each compression ratio and pair with theory."""
    compressions = [float(r) for r in compressions]
    items = [(replace(config, compression=r), u) for r in compressions for u in config.u_values]
    rows = _map(_row, items, config.jobs)
    out = []
    nu = len(config.u_values)
    for i, r in enumerate(compressions):
        chunk = rows[i * nu:(i + 1) * nu]
        setup = setup_case(replace(config, compression=r))
        pert = perturb.perturbative_u_err(setup.input, setup.chirp, config.ratio, setup.stats)
        if len(chunk) >= 3:
            fit = fit_u_err(chunk)
            out.append(CompressionPoint(r, fit.u_err_fit, pert, fit.residual, tuple(chunk)))
        else:
            # too few points for a fit: pass the single-point estimate through
            ok = [c for c in chunk if c.error_sim > 0]
            est = ok[0].u / math.sqrt(ok[0].error_sim) if ok else math.nan
            out.append(CompressionPoint(r, est, pert, 0.0, tuple(chunk)))
    return out


def write_rows_csv(rows, path) -> None:
    write_columns(
        path,
        ("compression", "u", "error_sim", "error_pert", "n_points", "n_steps"),
        (
            [r.compression for r in rows],
            [r.u for r in rows],
            [r.error_sim for r in rows],
            [r.error_pert for r in rows],
            [r.n_points for r in rows],
            [r.n_steps for r in rows],
        ),
    )


def write_compression_csv(points, path) -> None:
    write_columns(
        path,
        ("compression", "u_err_fit", "u_err_pert", "residual"),
        (
            [p.compression for p in points],
            [p.u_err_fit for p in points],
            [p.u_err_pert for p in points],
            [p.residual for p in points],
        ),
    )
