"""Refractive-index data and the group-velocity parameters of a conversion case.

Wavelengths are in nm at the API boundary and in um inside the Sellmeier
model, n^2 = 1 + sum_j A_j lam^2 / (lam^2 - B_j).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError, MaterialError

C_LIGHT = 299_792_458.0
REL_STEP = 1e-4
# the second difference loses ~eps/h^2 to roundoff, so it needs a wider stencil
REL_STEP_2 = 1e-2
DERIV_TOL = 1e-6


def escort_wavelength(lam_in: float, lam_out: float) -> float:
    """Escort wavelength from 1/lam3 = 1/lam_in - 1/lam_out."""
    if not (lam_in > 0 and lam_out > 0):
        raise ConfigurationError("wavelengths must be positive")
    if lam_in == lam_out:
        raise ConfigurationError("degenerate wavelengths: lam_in == lam_out leaves no escort frequency")
    if lam_out < lam_in:
        raise ConfigurationError("expected lam_out > lam_in (down-conversion)")
    return 1.0 / (1.0 / lam_in - 1.0 / lam_out)


@dataclass(frozen=True)
class SellmeierAxis:
    coefficients: tuple  # ((A, B_um2), ...)
    range_um: tuple
    source: str = ""

    def n2(self, lam_um: float) -> float:
        l2 = lam_um * lam_um
        return 1.0 + sum(a * l2 / (l2 - b) for a, b in self.coefficients)


@dataclass(frozen=True)
class SellmeierSet:
    material: str
    axes: dict

    @classmethod
    def from_records(cls, records) -> "SellmeierSet":
        axes, names = {}, set()
        for rec in records:
            if rec.get("model") != "sellmeier":
                raise MaterialError(f"unsupported model {rec.get('model')!r}")
            try:
                coeffs = tuple((float(a), float(b)) for a, b in rec["coefficients"])
                lo, hi = (float(x) for x in rec["range_um"])
                axis = str(rec["axis"])
            except (KeyError, TypeError, ValueError) as exc:
                raise MaterialError(f"malformed Sellmeier record: {exc}") from exc
            if not 0 < lo < hi:
                raise MaterialError(f"bad validity range {lo}..{hi} um")
            if axis in axes:
                raise MaterialError(f"axis {axis!r} given twice")
            ax = SellmeierAxis(coeffs, (lo, hi), rec.get("source", ""))
            for lam in (lo, 0.5 * (lo + hi), hi):
                if not ax.n2(lam) > 1:
                    raise MaterialError(f"n^2 <= 1 at {lam} um on axis {axis!r}")
            axes[axis] = ax
            names.add(rec.get("material", ""))
        if not axes:
            raise MaterialError("no Sellmeier records")
        return cls(" / ".join(sorted(names)), axes)

    @classmethod
    def from_files(cls, *paths) -> "SellmeierSet":
        recs = []
        for p in paths:
            try:
                recs.append(json.loads(Path(p).read_text()))
            except (OSError, json.JSONDecodeError) as exc:
                raise MaterialError(f"cannot read {p}: {exc}") from exc
        return cls.from_records(recs)

    @classmethod
    def bundled(cls, name: str = "linbo3") -> "SellmeierSet":
        data = resources.files("qwc") / "data"
        files = sorted(f for f in data.iterdir() if f.name.startswith(name + "_") and f.name.endswith(".json"))
        if not files:
            raise MaterialError(f"no bundled data for {name!r}")
        return cls.from_records(json.loads(f.read_text()) for f in files)

    def axis(self, name: str) -> SellmeierAxis:
        try:
            return self.axes[name]
        except KeyError:
            raise MaterialError(f"axis {name!r} not in {sorted(self.axes)}") from None


def _lam_um(s: SellmeierSet, lam_nm: float, axis: str):
    ax = s.axis(axis)
    lam = lam_nm * 1e-3
    lo, hi = ax.range_um
    if not lo <= lam <= hi:
        raise MaterialError(f"{lam_nm} nm outside the {lo}-{hi} um validity range of axis {axis!r}")
    return ax, lam


def sellmeier_index(s: SellmeierSet, lam_nm: float, axis: str = "e") -> float:
    ax, lam = _lam_um(s, lam_nm, axis)
    return math.sqrt(ax.n2(lam))


def _richardson(f, x: float, order: int) -> float:
    """Central difference of order 1 or 2, two Richardson levels (h, h/2, h/4)."""
    h0 = (REL_STEP if order == 1 else REL_STEP_2) * x

    def d(h):
        if order == 1:
            return (f(x + h) - f(x - h)) / (2 * h)
        return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)

    d0, d1, d2 = d(h0), d(h0 / 2), d(h0 / 4)
    r1a, r1b = (4 * d1 - d0) / 3, (4 * d2 - d1) / 3
    r2 = (16 * r1b - r1a) / 15
    # floor: roundoff of f/x^order for a derivative that vanishes
    scale = max(abs(r2), 1e-9 * abs(f(x)) / x**order)
    if abs(r2 - r1b) > DERIV_TOL * scale:
        raise MaterialError(f"derivative did not converge at {x}: {r1b!r} vs {r2!r}")
    return r2


def index_derivatives(s: SellmeierSet, lam_nm: float, axis: str = "e"):
    """(n, dn/dlam, d2n/dlam2) with lam in um."""
    ax, lam = _lam_um(s, lam_nm, axis)

    # the stencil may poke 1e-4 past the range ends; the formula is smooth there
    def n(x):
        return math.sqrt(ax.n2(x))

    return n(lam), _richardson(n, lam, 1), _richardson(n, lam, 2)


@dataclass(frozen=True)
class ModeDispersion:
    wavelength_nm: float
    n: float
    n_group: float
    v_group: float
    beta: float  # m^2/s, coefficient of (i beta/2) d^2/dz^2


def mode_dispersion(s: SellmeierSet, lam_nm: float, axis: str = "e") -> ModeDispersion:
    """v_g = c/(n - lam n'), beta = -c lam^3 n'' / (2 pi n_g^3)."""
    n, dn, d2n = index_derivatives(s, lam_nm, axis)
    lam = lam_nm * 1e-3
    ng = n - lam * dn
    beta = -C_LIGHT * (lam * 1e-6) ** 3 * (d2n * 1e12) / (2 * math.pi * ng**3)
    return ModeDispersion(lam_nm, n, ng, C_LIGHT / ng, beta)


@dataclass(frozen=True)
class DispersionTriple:
    lambdas_nm: tuple
    v_groups: tuple
    betas: tuple
    v: float
    v_e: float
    omega: float | None = None
    length: float | None = None
    u: float | None = None
    u_e: float | None = None

    @property
    def v0(self) -> float | None:
        if self.omega is None:
            return None
        return self.omega * self.length / (2 * math.pi)

    def to_dict(self) -> dict:
        return asdict(self)


def gvm_pair(v1: float, v2: float, v3: float) -> tuple[float, float]:
    """(v, v_e) = ((v1 - v2)/2, v3 - (v1 + v2)/2)."""
    return 0.5 * (v1 - v2), v3 - 0.5 * (v1 + v2)


def group_params(
    s: SellmeierSet,
    lam1: float,
    lam2: float,
    lam3: float | None = None,
    axes=("e", "e", "e"),
    omega: float | None = None,
    length: float | None = None,
) -> DispersionTriple:
    """Group velocities of input (1), output (2) and escort (3) and the GVM pair (v, v_e).

    ``omega`` in rad/s and ``length`` in m give u = v/v0 and u_e = v_e/v0
    with v0 = omega L / (2 pi).
    """
    if lam3 is None:
        lam3 = escort_wavelength(lam1, lam2)
    elif abs(1 / lam3 - (1 / lam1 - 1 / lam2)) > 1e-6 * abs(1 / lam3):
        raise ConfigurationError("1/lam3 = 1/lam1 - 1/lam2 violated (energy conservation)")
    if len(axes) != 3:
        raise ConfigurationError("need one axis per mode")
    modes = [mode_dispersion(s, lam, ax) for lam, ax in zip((lam1, lam2, lam3), axes)]
    v1, v2, v3 = (m.v_group for m in modes)
    v, ve = gvm_pair(v1, v2, v3)
    u = ue = None
    if omega is not None or length is not None:
        if not (omega and length and omega > 0 and length > 0):
            raise ConfigurationError("omega and length must both be > 0")
        v0 = omega * length / (2 * math.pi)
        u, ue = v / v0, ve / v0
    return DispersionTriple(
        (lam1, lam2, lam3), (v1, v2, v3), tuple(m.beta for m in modes), v, ve, omega, length, u, ue
    )
