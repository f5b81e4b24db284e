"""Split-step integration of the two coupled c-number mode amplitudes.

Dimensionless convention: Omega = pi/2 so the transfer time T = pi/(2 Omega)
is 1, lengths in units of L, and the GVM scale v0 = Omega L / (2 pi) = 1/4.

Equations of motion (comoving frame at (v1 + v2)/2)::

    dA1/dt = -v dA1/dz + (i beta1/2) d2A1/dz2 + Omega exp(+i chi) A2
    dA2/dt = +v dA2/dz + (i beta2/2) d2A2/dz2 - Omega exp(-i chi) A1

with the escort phase chi(z, t) = phi(z - ve t) + Delta(z - ve t)
- (beta3 t / 2) phi'(z)^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ComplexWaveform, Grid
from .design import PhaseProfile
from .errors import ConfigurationError, ResolutionError, SimulationInvalidError

OMEGA = math.pi / 2
NORM_DRIFT_TOL = 1e-9
ALIAS_FRACTION = 1e-6
ALIAS_BAND = 0.10


def v0(omega: float = OMEGA, length: float = 1.0) -> float:
    return omega * length / (2 * math.pi)


@dataclass(frozen=True)
class DispersionParams:
    """Group-velocity mismatch u (dimensionless) and GVD of modes 1 and 2."""

    u: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0

    def v(self, omega: float = OMEGA, length: float = 1.0) -> float:
        return self.u * v0(omega, length)

    def to_dict(self) -> dict:
        return {"u": self.u, "beta1": self.beta1, "beta2": self.beta2}


@dataclass(frozen=True, eq=False)
class EscortConfig:
    """Classical escort: coupling rate, GVM, GVD, chirp and compensation phase."""

    chirp: PhaseProfile
    omega: float = OMEGA
    u_e: float = 0.0
    beta3: float = 0.0
    compensation: np.ndarray | None = None
    imaginary_gvd: bool = False

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigurationError(f"EscortConfig invariant violated: omega={self.omega} must be > 0")
        if self.compensation is not None:
            c = np.asarray(self.compensation, dtype=float)
            if c.shape != (self.chirp.grid.n_points,):
                raise ConfigurationError("EscortConfig invariant violated: compensation not on the chirp grid")
            c.setflags(write=False)
            object.__setattr__(self, "compensation", c)

    @property
    def grid(self) -> Grid:
        return self.chirp.grid

    @property
    def transfer_time(self) -> float:
        return math.pi / (2 * self.omega)

    def v_e(self, length: float = 1.0) -> float:
        return self.u_e * v0(self.omega, length)

    def with_compensation(self, delta) -> "EscortConfig":
        return replace(self, compensation=delta)


@dataclass(frozen=True, eq=False)
class TransferResult:
    a1_final: ComplexWaveform
    a2_final: ComplexWaveform
    transfer_time: float
    norm_drift: float
    steps: int
    t_final: float = field(default=None)


class _EscortPhase:
    """Precomputed cubic-Hermite data for evaluating chi(z, t) at sub-grid shifts."""

    def __init__(self, cfg: EscortConfig):
        g = cfg.grid
        self.grid = g
        phi, dphi = cfg.chirp.phi, cfg.chirp.dphi
        if cfg.compensation is not None:
            delta = np.asarray(cfg.compensation, dtype=float)
            ddelta = np.gradient(delta, g.dz, edge_order=2)
        else:
            delta = np.zeros(g.n_points)
            ddelta = delta
        self.y = phi + delta
        self.dy = dphi + ddelta
        self.ve = cfg.v_e()
        self.beta3 = cfg.beta3
        self.dphi2 = dphi**2
        self.d2phi = cfg.chirp.d2phi
        self.imag = cfg.imaginary_gvd and self.d2phi is not None and cfg.beta3 != 0

    def shifted(self, s: float) -> np.ndarray:
        """y(z - s) by cubic Hermite interpolation, clamped at the grid ends."""
        if s == 0.0:
            return self.y.copy()
        dz = self.grid.dz
        n = self.grid.n_points
        q = -s / dz
        m = math.floor(q)
        x = q - m
        i0 = np.clip(np.arange(n) + m, 0, n - 1)
        i1 = np.clip(i0 + 1, 0, n - 1)
        h00 = 2 * x**3 - 3 * x**2 + 1
        h10 = x**3 - 2 * x**2 + x
        h01 = -2 * x**3 + 3 * x**2
        h11 = x**3 - x**2
        return h00 * self.y[i0] + h10 * dz * self.dy[i0] + h01 * self.y[i1] + h11 * dz * self.dy[i1]

    def chi(self, t: float) -> np.ndarray:
        out = self.shifted(self.ve * t)
        if self.beta3:
            out = out - 0.5 * self.beta3 * t * self.dphi2
        return out

    def coupling(self, t: float) -> np.ndarray:
        """exp(i chi); with the optional imaginary GVD term the modulus departs from 1."""
        e = np.exp(1j * self.chi(t))
        if self.imag:
            e = e * np.exp(-0.5 * self.beta3 * t * self.d2phi)
        return e


def escort_phase(cfg: EscortConfig, t: float) -> np.ndarray:
    return _EscortPhase(cfg).chi(t)


def check_aliasing(samples: np.ndarray, grid: Grid, fraction: float = ALIAS_FRACTION, band: float = ALIAS_BAND):
    """Raise ResolutionError if too much power sits in the outer band of the k-grid."""
    p = np.abs(np.fft.fft(samples)) ** 2
    total = p.sum()
    if total == 0:
        return 0.0
    edge = np.abs(grid.k) > (1 - band) * grid.k_nyquist
    frac = float(p[edge].sum() / total)
    if frac > fraction:
        raise ResolutionError(
            f"{frac:.3g} of the spectral power lies in the outer {band:.0%} of the k-grid "
            f"(limit {fraction:g}); increase n_points"
        )
    return frac


def _linear_multipliers(grid: Grid, disp: DispersionParams, omega: float, dt: float):
    k = grid.k
    v = disp.v(omega)
    m1 = np.exp(-1j * v * k * dt - 0.5j * disp.beta1 * k**2 * dt)
    m2 = np.exp(1j * v * k * dt - 0.5j * disp.beta2 * k**2 * dt)
    return m1, m2


def _rotate(a1, a2, c, s, e):
    b1 = c * a1 + s * e * a2
    b2 = -s * np.conj(e) * a1 + c * a2
    return b1, b2


def _rotate_general(a1, a2, omega_dt, e):
    # coupling exp(i chi) with complex chi: rotation generator is no longer anti-Hermitian
    mod = np.abs(e)
    c = np.cos(omega_dt * mod)
    s = np.sin(omega_dt * mod)
    ph = e / np.where(mod > 0, mod, 1.0)
    return c * a1 + s * ph * a2, -s * np.conj(ph) * a1 + c * a2


def propagate_step(a1, a2, cfg: EscortConfig, disp: DispersionParams, t: float, dt: float, _phase=None):
    """One Strang step: half linear, exact pointwise rotation at t + dt/2, half linear."""
    T = cfg.transfer_time
    if dt > T / 256 * (1 + 1e-12):
        raise ConfigurationError(f"dt={dt:g} exceeds T/256")
    grid = cfg.grid
    phase = _phase or _EscortPhase(cfg)
    x1 = np.asarray(a1.samples if isinstance(a1, ComplexWaveform) else a1, dtype=complex)
    x2 = np.asarray(a2.samples if isinstance(a2, ComplexWaveform) else a2, dtype=complex)
    h1, h2 = _linear_multipliers(grid, disp, cfg.omega, dt / 2)
    x1 = np.fft.ifft(h1 * np.fft.fft(x1))
    x2 = np.fft.ifft(h2 * np.fft.fft(x2))
    x1, x2 = _rotate(x1, x2, math.cos(cfg.omega * dt), math.sin(cfg.omega * dt), phase.coupling(t + dt / 2))
    x1 = np.fft.ifft(h1 * np.fft.fft(x1))
    x2 = np.fft.ifft(h2 * np.fft.fft(x2))
    _check_spectra(np.fft.fft(x1), np.fft.fft(x2), grid)
    if isinstance(a1, ComplexWaveform):
        return a1.with_samples(x1), a1.with_samples(x2)
    return x1, x2


def run_transfer(
    input: ComplexWaveform,
    cfg: EscortConfig,
    disp: DispersionParams,
    n_steps: int = 4096,
    t_final: float | None = None,
    check_every: int = 64,
) -> TransferResult:
    """Integrate from t = 0 (A1 = input, A2 = 0) to T = pi/(2 Omega).

    ``t_final`` overrides the end time (used for half-time and time-reversal
    probes); the step is then t_final / n_steps.
    """
    if n_steps < 256:
        raise ConfigurationError(f"n_steps={n_steps} < 256")
    if input.grid != cfg.grid:
        raise ConfigurationError("input and escort chirp live on different grids")
    grid = cfg.grid
    T = cfg.transfer_time
    t_end = T if t_final is None else float(t_final)
    dt = t_end / n_steps
    phase = _EscortPhase(cfg)
    h1, h2 = _linear_multipliers(grid, disp, cfg.omega, dt / 2)
    f1, f2 = h1 * h1, h2 * h2
    c, s = math.cos(cfg.omega * dt), math.sin(cfg.omega * dt)
    rotate = _rotate_general if phase.imag else None
    x1 = input.samples.astype(complex)
    x2 = np.zeros_like(x1)
    n0 = float(np.sum(np.abs(x1) ** 2) * grid.dz)

    try:
        check_aliasing(x1, grid)
        # leading half step; consecutive linear half steps are fused into one
        y1, y2 = np.fft.fft(x1) * h1, np.fft.fft(x2) * h2
        for j in range(n_steps):
            x1, x2 = np.fft.ifft(y1), np.fft.ifft(y2)
            e = phase.coupling((j + 0.5) * dt)
            if rotate is None:
                x1, x2 = _rotate(x1, x2, c, s, e)
            else:
                x1, x2 = rotate(x1, x2, cfg.omega * dt, e)
            last = j == n_steps - 1
            y1, y2 = np.fft.fft(x1), np.fft.fft(x2)
            if last:
                y1, y2 = y1 * h1, y2 * h2
            else:
                y1, y2 = y1 * f1, y2 * f2
            if (j + 1) % check_every == 0 or last:
                _check_spectra(y1, y2, grid)
        x1, x2 = np.fft.ifft(y1), np.fft.ifft(y2)
    except ResolutionError as exc:
        raise SimulationInvalidError(str(exc), {"step": j if "j" in locals() else 0}) from exc

    n1 = float(np.sum(np.abs(x1) ** 2) * grid.dz)
    drift = abs(n1 + float(np.sum(np.abs(x2) ** 2) * grid.dz) - n0)
    if not phase.imag and drift > NORM_DRIFT_TOL:
        raise SimulationInvalidError(f"norm drift {drift:.3g} exceeds {NORM_DRIFT_TOL:g}", {"norm_drift": drift})
    return TransferResult(
        a1_final=ComplexWaveform(grid, x1),
        a2_final=ComplexWaveform(grid, x2),
        transfer_time=T,
        norm_drift=drift,
        steps=n_steps,
        t_final=t_end,
    )


def _check_spectra(y1, y2, grid: Grid) -> None:
    # measured against the total (conserved) norm of both modes
    edge = np.abs(grid.k) > (1 - ALIAS_BAND) * grid.k_nyquist
    p1, p2 = np.abs(y1) ** 2, np.abs(y2) ** 2
    total = p1.sum() + p2.sum()
    frac = (p1[edge].sum() + p2[edge].sum()) / total
    if frac > ALIAS_FRACTION:
        raise ResolutionError(
            f"{frac:.3g} of the spectral power lies in the outer {ALIAS_BAND:.0%} of the k-grid; "
            "increase n_points"
        )


def ideal_output(input: ComplexWaveform, cfg: EscortConfig) -> ComplexWaveform:
    """Dispersion-free mode-2 field -exp(-i chi(z, 0)) A(z) at t = T."""
    chi0 = cfg.chirp.phi if cfg.compensation is None else cfg.chirp.phi + cfg.compensation
    return input.with_samples(-np.exp(-1j * chi0) * input.samples)
