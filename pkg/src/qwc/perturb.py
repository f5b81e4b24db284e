"""Second-order perturbative error of the dispersive state transfer.

With h(z) = 4 Omega Delta(z) + pi (v - ve) phi'(z) the Dyson expectation
values are

    <U11> = i theta,     theta = <n>/(4 Omega) int h |A|^2
    Re<U12> = 1/(32 Omega^2) { -<n(n-1)> (int h|A|^2)^2 - <n> int h^2 |A|^2
                               - 4 <n> int |2 v A' - i (v + ve) phi' A|^2 }

and F = |1 + i theta + Re<U12>| to second order.  The h^2 term enters with a
minus sign: it is the single-particle part of -<theta_op^2>/2 for the local
phase operator, so any departure from h = 0 lowers the fidelity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .core import ComplexWaveform, PhotonStatistics
from .design import PhaseProfile
from .propagate import OMEGA, DispersionParams, EscortConfig

VALIDITY_MAX_ERROR = 0.1


class PerturbationValidityWarning(UserWarning):
    """The perturbative error left the regime u << u_err."""


@dataclass(frozen=True)
class ErrorReport:
    theta: float
    re_u12: float
    fidelity: float
    error: float
    u_err: float | None = None
    valid: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def optimal_compensation(
    chirp: PhaseProfile,
    disp: DispersionParams,
    cfg: EscortConfig,
    length: float = 1.0,
) -> np.ndarray:
    """Delta_opt = (u_e - u) phi' L / 8, cross-checked against pi (ve - v) phi' / (4 Omega)."""
    dimless = 0.125 * (cfg.u_e - disp.u) * chirp.dphi * length
    v, ve = disp.v(cfg.omega, length), cfg.v_e(length)
    physical = math.pi * (ve - v) * chirp.dphi / (4 * cfg.omega)
    scale = max(float(np.max(np.abs(dimless))), 1e-300)
    if np.max(np.abs(dimless - physical)) > 1e-12 * max(scale, 1.0):
        raise AssertionError("compensation parameterizations disagree")
    return dimless


def h_profile(delta, chirp: PhaseProfile, disp: DispersionParams, cfg: EscortConfig, length: float = 1.0):
    delta = np.zeros_like(chirp.dphi) if delta is None else np.asarray(delta, dtype=float)
    v, ve = disp.v(cfg.omega, length), cfg.v_e(length)
    return 4 * cfg.omega * delta + math.pi * (v - ve) * chirp.dphi


def g_profiles(delta, chirp: PhaseProfile, cfg: EscortConfig, length: float = 1.0):
    """Diagnostic (g_plus, g_minus) = 4 pi Omega Delta - (pi^2 +/- 8) ve phi'."""
    delta = np.zeros_like(chirp.dphi) if delta is None else np.asarray(delta, dtype=float)
    ve = cfg.v_e(length)
    base = 4 * math.pi * cfg.omega * delta
    gp = base - (math.pi**2 + 8) * ve * chirp.dphi
    gm = base - (math.pi**2 - 8) * ve * chirp.dphi
    gp.setflags(write=False)
    gm.setflags(write=False)
    return gp, gm


def _gvm_integral(input: ComplexWaveform, chirp: PhaseProfile, v: float, ve: float) -> float:
    """int |2 v A' - i (v + ve) phi' A|^2 dz."""
    a = input.samples
    da = input.derivative()
    return float(np.sum(np.abs(2 * v * da - 1j * (v + ve) * chirp.dphi * a) ** 2) * input.grid.dz)


def perturbative_error(
    input: ComplexWaveform,
    chirp: PhaseProfile,
    delta,
    disp: DispersionParams,
    cfg: EscortConfig,
    stats: PhotonStatistics,
    length: float = 1.0,
    warn: bool = True,
) -> ErrorReport:
    om = cfg.omega
    v, ve = disp.v(om, length), cfg.v_e(length)
    dz = input.grid.dz
    p = np.abs(input.samples) ** 2
    h = h_profile(delta, chirp, disp, cfg, length)
    n1, n2 = stats.mean_n, stats.mean_n_n1
    ih = float(np.sum(h * p) * dz)
    ih2 = float(np.sum(h * h * p) * dz)
    gvm = _gvm_integral(input, chirp, v, ve)
    theta = n1 * ih / (4 * om)
    re_u12 = (-n2 * ih**2 - n1 * ih2 - 4 * n1 * gvm) / (32 * om**2)
    fidelity = 1.0 + re_u12 + 0.5 * theta**2
    error = 1.0 - fidelity
    valid = 0.0 <= error <= VALIDITY_MAX_ERROR
    if warn and not valid:
        warnings.warn(
            f"perturbative error {error:.3g} outside [0, {VALIDITY_MAX_ERROR}]; u_err <~ 1 regime exceeded",
            PerturbationValidityWarning,
            stacklevel=2,
        )
    u_err = None
    if disp.u != 0:
        u_err = perturbative_u_err(input, chirp, cfg.u_e / disp.u, stats, length)
    return ErrorReport(theta, re_u12, fidelity, error, u_err, valid)


def gvm_error_integral(input: ComplexWaveform, chirp: PhaseProfile, ratio: float) -> float:
    """int |2 A' - i (1 + u_e/u) phi' A|^2 dz."""
    a = input.samples
    da = input.derivative()
    return float(np.sum(np.abs(2 * da - 1j * (1 + ratio) * chirp.dphi * a) ** 2) * input.grid.dz)


def perturbative_u_err(
    input: ComplexWaveform,
    chirp: PhaseProfile,
    ratio: float,
    stats: PhotonStatistics,
    length: float = 1.0,
) -> float:
    """GVM scale with 1 - F_opt = (u/u_err)^2; inf when no error mechanism remains."""
    s = stats.mean_n * length**2 / (32 * math.pi**2) * gvm_error_integral(input, chirp, ratio)
    if s <= 0:
        return math.inf
    return 1.0 / math.sqrt(s)


def optimized_error(input: ComplexWaveform, chirp: PhaseProfile, u: float, ratio: float, stats, length=1.0) -> float:
    """1 - F_opt = <n> u^2 L^2 / (32 pi^2) int |2A' - i(1 + u_e/u) phi' A|^2."""
    return stats.mean_n * u**2 * length**2 / (32 * math.pi**2) * gvm_error_integral(input, chirp, ratio)


def case_error(input, chirp, u, ratio, stats, omega=OMEGA) -> ErrorReport:
    """Perturbative report at Delta = Delta_opt for dimensionless (u, u_e/u)."""
    disp = DispersionParams(u=u)
    cfg = EscortConfig(chirp, omega=omega, u_e=ratio * u)
    delta = optimal_compensation(chirp, disp, cfg)
    return perturbative_error(input, chirp, delta, disp, cfg, stats)
