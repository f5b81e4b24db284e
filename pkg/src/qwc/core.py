"""Grids, sampled fields, spectral transforms and photon statistics.

Everything here works in dimensionless units: c = 1 and lengths are measured
in units of the input's characteristic length (L = c*tau for an exponential
emitter pulse).  Times and lengths are therefore interchangeable.

The Fourier convention is fixed throughout the package::

    A~(k) = (2 pi)^(-1/2) * integral A(z) exp(-i k z) dz

so that sum |A~|^2 dk == sum |A|^2 dz on the discrete grids.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erfc

from .errors import ConfigurationError, StateError, TruncationError

NORM_TOL = 1e-12
DEFAULT_N_MAX = 16


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic z-grid with its discrete-Fourier conjugate k-grid."""

    n_points: int
    z_min: float
    z_max: float

    def __post_init__(self):
        if not isinstance(self.n_points, (int, np.integer)) or not _is_power_of_two(int(self.n_points)):
            raise ConfigurationError(f"Grid invariant violated: n_points={self.n_points} is not a power of two")
        if self.n_points < 64:
            raise ConfigurationError(f"Grid invariant violated: n_points={self.n_points} < 64")
        if not (math.isfinite(self.z_min) and math.isfinite(self.z_max)) or self.z_max <= self.z_min:
            raise ConfigurationError(f"Grid invariant violated: empty interval [{self.z_min}, {self.z_max}]")

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / self.n_points

    @property
    def length(self) -> float:
        return self.z_max - self.z_min

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.dz * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dz)

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.length

    @property
    def k_nyquist(self) -> float:
        return np.pi / self.dz

    def index_of(self, z0: float) -> int:
        return int(np.clip(np.rint((z0 - self.z_min) / self.dz), 0, self.n_points - 1))

    def to_dict(self) -> dict:
        return {"n_points": int(self.n_points), "z_min": float(self.z_min), "z_max": float(self.z_max)}


def build_grid(n_points: int, z_min: float, z_max: float) -> Grid:
    return Grid(int(n_points), float(z_min), float(z_max))


@dataclass(frozen=True, eq=False)
class ComplexWaveform:
    """Complex mode amplitude sampled on a grid (units of length^-1/2)."""

    grid: Grid
    samples: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n_points,):
            raise ConfigurationError(f"waveform has {s.shape} samples, grid expects {self.grid.n_points}")
        if not np.all(np.isfinite(s)):
            raise ConfigurationError("waveform samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.normalized and abs(self.norm() - 1.0) > NORM_TOL:
            raise ConfigurationError(f"waveform flagged normalized but norm = {self.norm():.16g}")

    def norm(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.grid.dz)

    def normalize(self) -> "ComplexWaveform":
        n = self.norm()
        if n <= 0:
            raise ConfigurationError("cannot normalize a zero waveform")
        return ComplexWaveform(self.grid, self.samples / math.sqrt(n), normalized=True)

    def inner(self, other: "ComplexWaveform") -> complex:
        """<self|other> = integral conj(self) * other dz."""
        return complex(np.vdot(self.samples, other.samples) * self.grid.dz)

    def with_samples(self, samples, normalized=False) -> "ComplexWaveform":
        return ComplexWaveform(self.grid, samples, normalized=normalized)

    def derivative(self) -> np.ndarray:
        return spectral_derivative(self.samples, self.grid)


@dataclass(frozen=True, eq=False)
class SpectralAmplitude:
    """Unitary Fourier transform of a waveform, stored in FFT order of ``grid.k``."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.grid.dk)

    def shifted(self):
        """(k, samples) sorted by increasing k."""
        return np.fft.fftshift(self.grid.k), np.fft.fftshift(self.samples)


def _phase_ramp(grid: Grid) -> np.ndarray:
    return np.exp(-1j * grid.k * grid.z_min)


def to_spectrum(w: ComplexWaveform) -> SpectralAmplitude:
    g = w.grid
    return SpectralAmplitude(g, g.dz / math.sqrt(2 * np.pi) * _phase_ramp(g) * np.fft.fft(w.samples))


def from_spectrum(s: SpectralAmplitude, normalized: bool = False) -> ComplexWaveform:
    g = s.grid
    samples = np.fft.ifft(s.samples / _phase_ramp(g)) * math.sqrt(2 * np.pi) / g.dz
    return ComplexWaveform(g, samples, normalized=normalized)


def spectral_derivative(samples: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    k = grid.k
    out = np.fft.ifft((1j * k) ** order * np.fft.fft(samples))
    if np.isrealobj(samples):
        return out.real
    return out


@dataclass(frozen=True)
class WaveformSpec:
    """Canonical input/target waveform description.

    ``kind`` is one of ``"exponential"`` (uses ``tau`` and ``rise``),
    ``"gaussian"`` (uses ``sigma`` and ``center``; amplitude
    exp(-(z - center)^2 / (2 sigma^2))) or ``"custom"`` (uses ``samples``).
    """

    kind: str
    tau: float = 1.0
    rise: float = 0.0
    sigma: float = 1.0
    center: float = 0.0
    samples: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("exponential", "gaussian", "custom"):
            raise ConfigurationError(f"unknown waveform kind {self.kind!r}")
        if self.kind == "exponential":
            if not self.tau > 0:
                raise ConfigurationError(f"WaveformSpec invariant violated: tau={self.tau} must be > 0")
            if not self.rise >= 0:
                raise ConfigurationError(f"WaveformSpec invariant violated: rise={self.rise} must be >= 0")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ConfigurationError(f"WaveformSpec invariant violated: sigma={self.sigma} must be > 0")
        if self.kind == "custom" and self.samples is None:
            raise ConfigurationError("custom waveform requires samples")

    @classmethod
    def exponential(cls, tau: float, rise: float = 0.0) -> "WaveformSpec":
        return cls("exponential", tau=tau, rise=rise)

    @classmethod
    def gaussian(cls, sigma: float, center: float = 0.0) -> "WaveformSpec":
        return cls("gaussian", sigma=sigma, center=center)

    def to_dict(self) -> dict:
        if self.kind == "exponential":
            return {"kind": "exponential", "tau": self.tau, "rise": self.rise}
        if self.kind == "gaussian":
            return {"kind": "gaussian", "sigma": self.sigma, "center": self.center}
        return {"kind": "custom", "samples": [[float(np.real(c)), float(np.imag(c))] for c in self.samples]}

    @classmethod
    def from_dict(cls, d: dict) -> "WaveformSpec":
        d = dict(d)
        kind = d.pop("kind")
        if kind == "custom":
            samples = tuple(complex(re, im) for re, im in d.pop("samples"))
            return cls("custom", samples=samples)
        allowed = {"tau", "rise", "sigma", "center"}
        extra = set(d) - allowed
        if extra:
            raise ConfigurationError(f"unknown waveform fields {sorted(extra)}")
        return cls(kind, **{key: float(v) for key, v in d.items()})


def _exponential_samples(z: np.ndarray, tau: float, rise: float) -> np.ndarray:
    a = np.zeros_like(z)
    pos = z >= 0
    a[pos] = np.exp(-z[pos] / (2 * tau))
    if rise > 0:
        a[pos] *= -np.expm1(-z[pos] / rise)
    else:
        # the sample sitting on the jump carries the midpoint intensity so that
        # grid quadratures stay second order across the discontinuity
        a[np.isclose(z, 0.0, rtol=0, atol=1e-12 * max(1.0, np.ptp(z)))] = math.sqrt(0.5)
    return a


def _outside_fraction(spec: WaveformSpec, grid: Grid) -> float:
    lo, hi = grid.z_min, grid.z_max + grid.dz
    if spec.kind == "exponential":
        right = math.exp(-hi / spec.tau) if hi > 0 else 1.0
        left = -math.expm1(-lo / spec.tau) if lo > 0 else 0.0
        return right + left
    if spec.kind == "gaussian":
        s = spec.sigma
        return 0.5 * (erfc((hi - spec.center) / s) + erfc((spec.center - lo) / s))
    return 0.0


def build_waveform(spec: WaveformSpec, grid: Grid, tol: float = 0.01) -> ComplexWaveform:
    """Sample and normalize a canonical waveform on ``grid``.

    Raises TruncationError when more than ``tol`` of the analytic norm lies
    outside the grid.
    """
    frac = _outside_fraction(spec, grid)
    if frac > tol:
        raise TruncationError(f"{frac:.3g} of the {spec.kind} waveform norm lies outside the grid")
    z = grid.z
    if spec.kind == "exponential":
        a = _exponential_samples(z, spec.tau, spec.rise)
    elif spec.kind == "gaussian":
        a = np.exp(-((z - spec.center) ** 2) / (2 * spec.sigma**2))
    else:
        a = np.asarray(spec.samples, dtype=complex)
        if a.shape != (grid.n_points,):
            raise ConfigurationError("custom samples do not match the grid")
    return ComplexWaveform(grid, a).normalize()


def waveform_overlap_mismatch(a: np.ndarray, b: np.ndarray, dz: float) -> float:
    """Relative L2 distance ||a - b|| / ||b||."""
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) * dz / (np.sum(np.abs(b) ** 2) * dz)))


@dataclass(frozen=True, eq=False)
class PhotonStatistics:
    """Number-state coefficients c_n of a single-mode pure state."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    @property
    def mean_n(self) -> float:
        n = np.arange(len(self.coefficients))
        return float(np.sum(n * self.probabilities))

    @property
    def mean_n_n1(self) -> float:
        """<n(n-1)>."""
        n = np.arange(len(self.coefficients))
        return float(np.sum(n * (n - 1) * self.probabilities))

    @classmethod
    def fock(cls, n: int) -> "PhotonStatistics":
        c = np.zeros(n + 1, dtype=complex)
        c[n] = 1.0
        return cls(c)

    def to_dict(self) -> dict:
        return {"coefficients": [[float(c.real), float(c.imag)] for c in self.coefficients]}


def photon_stats(c: Sequence[complex], n_max: int = DEFAULT_N_MAX) -> PhotonStatistics:
    c = np.asarray(c, dtype=complex)
    if c.ndim != 1 or not np.all(np.isfinite(c)):
        raise StateError("photon coefficients must be a finite 1-d list")
    if len(c) > n_max + 1:
        c = c[: n_max + 1]
    total = np.sum(np.abs(c) ** 2)
    if total == 0:
        raise StateError("all-zero coefficient list is not a state")
    return PhotonStatistics(c / math.sqrt(total))


def photon_stats_from_config(d) -> PhotonStatistics:
    """Accepts an integer (number state), a real list, or a list of [re, im] pairs."""
    if d is None:
        return PhotonStatistics.fock(1)
    if isinstance(d, (int, np.integer)):
        return PhotonStatistics.fock(int(d))
    if isinstance(d, dict):
        if "fock" in d:
            return PhotonStatistics.fock(int(d["fock"]))
        d = d["coefficients"]
    coeffs = [complex(*x) if isinstance(x, (list, tuple)) else complex(x) for x in d]
    return photon_stats(coeffs)


# -- serialization -----------------------------------------------------------

def fmt(x: float) -> str:
    return "%.17g" % float(x)


def write_columns(path, header: Iterable[str], columns: Sequence[np.ndarray]) -> None:
    """Write equal-length columns as CSV with round-trip exact float text."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in zip(*cols):
            w.writerow([fmt(x) for x in row])


def read_columns(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body]) if body else np.zeros((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def save_waveform_csv(w: ComplexWaveform, path) -> None:
    write_columns(path, ("z", "re", "im"), (w.grid.z, w.samples.real, w.samples.imag))


def load_waveform_csv(path, normalized: bool = False) -> ComplexWaveform:
    cols = read_columns(path)
    z = cols["z"]
    n = len(z)
    dz = (z[-1] - z[0]) / (n - 1)
    grid = build_grid(n, float(z[0]), float(z[0] + n * dz))
    if not np.allclose(grid.z, z, rtol=0, atol=1e-9 * max(1.0, abs(grid.length))):
        raise ConfigurationError("CSV z column is not a uniform grid")
    return ComplexWaveform(grid, cols["re"] + 1j * cols["im"], normalized=normalized)


def waveform_to_json(w: ComplexWaveform) -> str:
    rec = {
        "grid": w.grid.to_dict(),
        "normalized": w.normalized,
        "re": [float(x) for x in w.samples.real],
        "im": [float(x) for x in w.samples.imag],
    }
    return json.dumps(rec)


def waveform_from_json(text: str) -> ComplexWaveform:
    rec = json.loads(text)
    grid = build_grid(**rec["grid"])
    return ComplexWaveform(grid, np.array(rec["re"]) + 1j * np.array(rec["im"]), normalized=rec["normalized"])
