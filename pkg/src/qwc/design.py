"""Escort chirp synthesis and output dechirp.

The chirp phi(z) imprinted by the escort is designed by stationary phase:
the local wavenumber phi'(z) maps the cumulative input power onto the
cumulative power of the Gaussian target spectrum,

    phi'(z) = w * erfinv(a + b * P(z)),   P(z) = int_{-inf}^{z} |A|^2,

where w is the target spectral width (amplitude spectrum ~ exp(-k^2/(2 w^2)))
and (a, b) fix which part of the spectrum is covered.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline
from scipy.special import erfcinv, erfinv

from .core import (
    ComplexWaveform,
    Grid,
    SpectralAmplitude,
    WaveformSpec,
    from_spectrum,
    read_columns,
    to_spectrum,
    write_columns,
)
from .errors import BoundaryError, BranchError, ConfigurationError

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    """Escort phase phi(z) with its first (and optionally second) derivative."""

    grid: Grid
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray | None = None
    z_ref: float = 0.0

    def __post_init__(self):
        for name in ("phi", "dphi", "d2phi"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float)
            if v.shape != (self.grid.n_points,):
                raise ConfigurationError(f"PhaseProfile.{name} does not match the grid")
            if not np.all(np.isfinite(v)):
                raise ConfigurationError(f"PhaseProfile.{name} must be finite")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def zero(cls, grid: Grid) -> "PhaseProfile":
        z = np.zeros(grid.n_points)
        return cls(grid, z, z, z)

    def interpolant(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid.z, self.phi, self.dphi, extrapolate=True)

    def scaled(self, s: float) -> "PhaseProfile":
        d2 = None if self.d2phi is None else s * self.d2phi
        return PhaseProfile(self.grid, s * self.phi, s * self.dphi, d2, self.z_ref)

    def to_csv(self, path) -> None:
        write_columns(path, ("z", "phi", "dphi"), (self.grid.z, self.phi, self.dphi))

    @classmethod
    def from_csv(cls, path, grid: Grid | None = None, z_ref: float = 0.0) -> "PhaseProfile":
        cols = read_columns(path)
        if grid is None:
            z = cols["z"]
            n = len(z)
            dz = (z[-1] - z[0]) / (n - 1)
            grid = Grid(n, float(z[0]), float(z[0] + n * dz))
        return cls(grid, cols["phi"], cols["dphi"], z_ref=z_ref)


@dataclass(frozen=True, eq=False)
class SpectralPhase:
    """Output-shaper phase gamma(k), FFT order of ``grid.k``, with gamma(0) = 0."""

    grid: Grid
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (self.grid.n_points,) or not np.all(np.isfinite(g)):
            raise ConfigurationError("SpectralPhase.gamma must be finite and match the grid")
        g = g - g[0]
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    def to_csv(self, path) -> None:
        k = np.fft.fftshift(self.grid.k)
        write_columns(path, ("k", "gamma"), (k, np.fft.fftshift(self.gamma)))


@dataclass(frozen=True)
class ChirpBoundary:
    """Constants (a, b) of the cumulative-power mapping.

    ``full_spectrum`` (a=1, b=-2) sends the leading edge of the input to
    +inf in k and the trailing edge to -inf, covering the whole target
    spectrum.  ``half_spectrum`` (a=1, b=-1) is the literal single-sided
    exponential form and only fills k >= 0.
    """

    a: float = 1.0
    b: float = -2.0
    coverage: str = "full-spectrum"

    def __post_init__(self):
        if self.b == 0:
            raise BoundaryError("ChirpBoundary invariant violated: b must be nonzero")
        for end in (self.a, self.a + self.b):
            if not -1.0 <= end <= 1.0:
                raise BoundaryError(
                    f"ChirpBoundary invariant violated: erf^-1 argument {end} outside [-1, 1]"
                )

    @classmethod
    def full_spectrum(cls) -> "ChirpBoundary":
        return cls(1.0, -2.0, "full-spectrum")

    @classmethod
    def half_spectrum(cls) -> "ChirpBoundary":
        return cls(1.0, -1.0, "half-spectrum")

    @classmethod
    def from_name(cls, name: str) -> "ChirpBoundary":
        if name in ("full", "full-spectrum"):
            return cls.full_spectrum()
        if name in ("half", "half-spectrum"):
            return cls.half_spectrum()
        raise ConfigurationError(f"unknown chirp coverage {name!r}")


def chirp_scale_for_compression(tau: float, ratio: float) -> float:
    """Spectral width w = sqrt(2)/sigma for target duration sigma = tau/ratio.

    sigma is the 1/e^2 intensity half-width of the target, i.e. the target
    amplitude is exp(-z^2/sigma^2).
    """
    return math.sqrt(2.0) * ratio / tau


def target_gaussian(tau: float, ratio: float, center: float = 0.0) -> WaveformSpec:
    """Target pulse reached by the compression-ratio chirp (amplitude width sigma/sqrt(2))."""
    return WaveformSpec.gaussian(sigma=tau / ratio / math.sqrt(2.0), center=center)


def _cumulative_power(a: ComplexWaveform):
    # half weight on the current sample: equal to the trapezoid rule for
    # fields vanishing at the edges, and consistent with midpoint-valued jumps
    p = np.abs(a.samples) ** 2
    dz = a.grid.dz
    lower = (np.cumsum(p) - 0.5 * p) * dz
    upper = (np.cumsum(p[::-1])[::-1] - 0.5 * p) * dz
    total = np.sum(p) * dz
    return lower / total, upper / total, p / total


def _erfinv_split(dist_hi: np.ndarray, dist_lo: np.ndarray, y: np.ndarray) -> np.ndarray:
    """erfinv(y) given 1 - y and 1 + y computed without cancellation."""
    out = np.empty_like(y)
    pos = y >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[pos] = erfcinv(np.clip(dist_hi[pos], 0.0, 2.0))
        out[~pos] = -erfcinv(np.clip(dist_lo[~pos], 0.0, 2.0))
    return out


def _fill_nonfinite(x: np.ndarray) -> np.ndarray:
    """Hold the nearest finite value across runs of inf/nan (one-sided limits)."""
    good = np.isfinite(x)
    if good.all():
        return x
    if not good.any():
        raise BoundaryError("erf^-1 argument never inside (-1, 1); input carries no power")
    idx = np.arange(len(x))
    gi = idx[good]
    nearest = gi[np.clip(np.searchsorted(gi, idx), 0, len(gi) - 1)]
    prev = gi[np.clip(np.searchsorted(gi, idx) - 1, 0, len(gi) - 1)]
    pick = np.where(np.abs(prev - idx) < np.abs(nearest - idx), prev, nearest)
    out = x.copy()
    out[~good] = x[pick[~good]]
    return out


def _integrate_from(dphi: np.ndarray, grid: Grid, z_ref: float) -> np.ndarray:
    phi = integrate.cumulative_trapezoid(dphi, dx=grid.dz, initial=0.0)
    return phi - np.interp(z_ref, grid.z, phi)


def default_reference(grid: Grid) -> float:
    return 0.0 if grid.z_min <= 0.0 <= grid.z_max else grid.z_min


def design_chirp_cdf(
    input: ComplexWaveform,
    target_spectral_width: float,
    boundary: ChirpBoundary | None = None,
    z_ref: float | None = None,
) -> PhaseProfile:
    """Stationary-phase chirp for a Gaussian target of the given spectral width.

    Where no input power lies on one side of a sample the mapping diverges;
    those samples hold the nearest finite value of phi'.
    """
    if boundary is None:
        boundary = ChirpBoundary.full_spectrum()
    if not target_spectral_width > 0:
        raise ConfigurationError("target_spectral_width must be > 0")
    a, b = boundary.a, boundary.b
    lower, upper, density = _cumulative_power(input)
    y = a + b * lower
    dist_hi = (1.0 - a) - b * lower
    dist_lo = (1.0 + a + b) - b * upper
    x = _erfinv_split(dist_hi, dist_lo, y)
    w = target_spectral_width
    dphi = _fill_nonfinite(w * x)
    with np.errstate(over="ignore", invalid="ignore"):
        d2 = w * (SQRT_PI / 2) * np.exp(x**2) * b * density
    d2[~np.isfinite(d2)] = np.nan
    d2 = _fill_nonfinite(d2)
    if z_ref is None:
        z_ref = default_reference(input.grid)
    phi = _integrate_from(dphi, input.grid, z_ref)
    return PhaseProfile(input.grid, phi, dphi, d2, z_ref)


def _exp_gauss_integrand(y: float) -> float:
    # d(zeta) = tau * (2/sqrt(pi)) exp(-y^2) / erf(y) dy with y = erfinv(exp(-zeta/tau))
    if y < 1e-8:
        return 1.0 - y * y / 3.0
    return y * (2.0 / SQRT_PI) * math.exp(-y * y) / math.erf(y)


def exp_gauss_phase(z: np.ndarray, tau: float, sigma: float) -> np.ndarray:
    """(sqrt2/sigma) int_0^z erfinv(exp(-zeta/tau)) dzeta for sorted z >= 0.

    Substituting y = erfinv(exp(-zeta/tau)) removes the logarithmic endpoint
    singularity; each segment is integrated adaptively.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.diff(z) < 0):
        raise ConfigurationError("exp_gauss_phase needs sorted z >= 0")
    with np.errstate(divide="ignore"):
        ys = erfcinv(-np.expm1(-z / tau))
    out = np.zeros_like(z)
    acc = 0.0
    y_prev = math.inf
    for i, y in enumerate(ys):
        if y < y_prev:
            acc += integrate.quad(_exp_gauss_integrand, y, y_prev, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        y_prev = y
        out[i] = acc
    return math.sqrt(2.0) / sigma * tau * out


def chirp_exp_gauss_closed_form(tau: float, sigma: float, grid: Grid) -> PhaseProfile:
    """Exponential-to-Gaussian chirp in its single-sided closed form."""
    if abs(grid.z_min) > 1e-12:
        raise ConfigurationError(f"closed-form exponential chirp needs a grid starting at z=0, got {grid.z_min}")
    if tau / sigma < 5:
        raise ConfigurationError(f"compression tau/sigma={tau / sigma:.3g} < 5 outside stationary-phase regime")
    z = grid.z
    phi = exp_gauss_phase(np.clip(z, 0.0, None), tau, sigma)
    with np.errstate(divide="ignore"):
        y = erfcinv(-np.expm1(-z / tau))
        dphi = math.sqrt(2.0) / sigma * y
        d2phi = -math.sqrt(2.0) / sigma * (SQRT_PI / 2) * np.exp(y**2 - z / tau) / tau
    return PhaseProfile(grid, phi, _fill_nonfinite(dphi), _fill_nonfinite(d2phi), 0.0)


def chirp_gauss_gauss(mu: float, sigma: float, grid: Grid) -> PhaseProfile:
    """phi = sigma z^2 / (2 mu) for Gaussian input width mu and spectral width sigma."""
    if not (mu > 0 and sigma > 0):
        raise ConfigurationError("mu and sigma must be positive")
    z = grid.z
    return PhaseProfile(grid, sigma * z**2 / (2 * mu), sigma * z / mu, np.full_like(z, sigma / mu), 0.0)


def dechirp_gauss_gauss(mu: float, sigma: float, grid: Grid) -> SpectralPhase:
    k = grid.k
    return SpectralPhase(grid, -mu * k**2 / (2 * sigma))


def converted_field(input: ComplexWaveform, chirp: PhaseProfile) -> ComplexWaveform:
    """Ideal mode-2 output -exp(-i phi) A of a complete transfer."""
    return input.with_samples(-np.exp(-1j * chirp.phi) * input.samples, normalized=input.normalized)


def unwrap_spectral_phase(spec: SpectralAmplitude, field: ComplexWaveform, mask_rel: float = 1e-8):
    """Continuous arg of a spectrum in sorted-k order.

    The phase derivative is taken from the group delay Im(A~'/A~), which does
    not alias even when the phase changes by more than pi between k samples;
    its integral only guides the choice of 2*pi branch.
    Returns (k_sorted, phase_sorted, valid_mask_sorted).
    """
    g = spec.grid
    zfield = field.with_samples(-1j * g.z * field.samples)
    dspec = to_spectrum(zfield).samples
    k = np.fft.fftshift(g.k)
    s = np.fft.fftshift(spec.samples)
    ds = np.fft.fftshift(dspec)
    mag = np.abs(s)
    valid = mag >= mask_rel * mag.max()
    wrapped = np.angle(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.imag(ds / s)
    slope[~valid] = 0.0
    i0 = int(np.argmin(np.abs(k)))
    guide = integrate.cumulative_trapezoid(slope, k, initial=0.0)
    guide -= guide[i0]
    guide += wrapped[i0]
    phase = guide + np.angle(np.exp(1j * (wrapped - guide)))
    return k, phase, valid


def _extrapolate_linear(k: np.ndarray, y: np.ndarray, valid: np.ndarray) -> np.ndarray:
    if valid.all():
        return y
    idx = np.flatnonzero(valid)
    lo, hi = idx[0], idx[-1]
    out = y.copy()
    if lo > 0:
        j = min(lo + 1, hi)
        slope = (y[j] - y[lo]) / (k[j] - k[lo]) if j != lo else 0.0
        out[:lo] = y[lo] + slope * (k[:lo] - k[lo])
    if hi < len(y) - 1:
        j = max(hi - 1, lo)
        slope = (y[hi] - y[j]) / (k[hi] - k[j]) if j != hi else 0.0
        out[hi + 1:] = y[hi] + slope * (k[hi + 1:] - k[hi])
    # interior holes: linear interpolation between valid neighbours
    inner = ~valid
    inner[:lo] = False
    inner[hi + 1:] = False
    if inner.any():
        out[inner] = np.interp(k[inner], k[valid], y[valid])
    return out


def _sorted_to_fft(x_sorted: np.ndarray) -> np.ndarray:
    return np.fft.ifftshift(x_sorted)


def design_dechirp(
    input: ComplexWaveform,
    chirp: PhaseProfile,
    mode: str = "numeric",
    mask_rel: float = 1e-8,
) -> SpectralPhase:
    """Spectral phase that makes the converted pulse transform-limited.

    The phase is designed on the field the converter actually emits,
    -exp(-i phi) A.  ``numeric`` takes minus the unwrapped arg of its
    spectrum; ``closed-form`` evaluates the stationary-phase expression
    gamma(k) = phi(z_k) + k z_k - const with -phi'(z_k) = k, locating z_k
    by bisection on the monotone branch of phi'.
    """
    out = converted_field(input, chirp)
    if mode == "numeric":
        spec = to_spectrum(out)
        k, phase, valid = unwrap_spectral_phase(spec, out, mask_rel)
        phase = _extrapolate_linear(k, phase, valid)
        return SpectralPhase(input.grid, _sorted_to_fft(-phase))
    if mode in ("closed-form", "closed_form"):
        return _closed_form_dechirp(input, chirp)
    raise ConfigurationError(f"unknown dechirp mode {mode!r}")


def _closed_form_dechirp(input: ComplexWaveform, chirp: PhaseProfile) -> SpectralPhase:
    g = input.grid
    power = np.abs(input.samples) ** 2
    support = power >= 1e-12 * power.max()
    zs = g.z[support]
    kloc = -chirp.dphi[support]
    d = np.diff(kloc)
    if np.all(d >= 0):
        order = slice(None)
    elif np.all(d <= 0):
        order = slice(None, None, -1)
    else:
        raise BranchError("phi' is not monotone over the input support; closed-form dechirp undefined")
    kb, zb = kloc[order], zs[order]
    k = np.fft.fftshift(g.k)
    kc = np.clip(k, kb[0], kb[-1])
    j = np.clip(np.searchsorted(kb, kc), 1, len(kb) - 1)
    frac = np.where(kb[j] > kb[j - 1], (kc - kb[j - 1]) / (kb[j] - kb[j - 1]), 0.0)
    zk = zb[j - 1] + frac * (zb[j] - zb[j - 1])
    # arg of the converted spectrum at k is -phi(z_k) - k z_k
    gamma = chirp.interpolant()(zk) + k * zk
    return SpectralPhase(g, _sorted_to_fft(gamma - np.interp(0.0, k, gamma)))


def apply_dechirp(w: ComplexWaveform, g: SpectralPhase) -> ComplexWaveform:
    if w.grid != g.grid:
        raise ConfigurationError("waveform and spectral phase live on different grids")
    spec = to_spectrum(w)
    out = from_spectrum(SpectralAmplitude(w.grid, spec.samples * np.exp(1j * g.gamma)))
    return out


def chirped_spectrum(input: ComplexWaveform, chirp: PhaseProfile) -> SpectralAmplitude:
    return to_spectrum(input.with_samples(input.samples * np.exp(1j * chirp.phi)))


def spectral_mismatch(input: ComplexWaveform, chirp: PhaseProfile, target: ComplexWaveform) -> float:
    """Relative L2 distance between |spectrum of A e^{i phi}| and |target spectrum|."""
    s = np.abs(chirped_spectrum(input, chirp).samples)
    t = np.abs(to_spectrum(target).samples)
    s = s / math.sqrt(np.sum(s**2))
    t = t / math.sqrt(np.sum(t**2))
    return float(np.sqrt(np.sum((s - t) ** 2)))


def envelope_mismatch(output: ComplexWaveform, target: ComplexWaveform) -> float:
    """Relative L2 distance between |output| and |target| after normalization."""
    o = np.abs(output.samples)
    t = np.abs(target.samples)
    o = o / math.sqrt(np.sum(o**2))
    t = t / math.sqrt(np.sum(t**2))
    return float(np.sqrt(np.sum((o - t) ** 2)))
