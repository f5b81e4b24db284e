"""Quantum waveform conversion with a chirped escort pulse.

Dimensionless units throughout: L = 1, Omega = pi/2 so the transfer time is
T = 1, and group velocities are u = v/v0 with v0 = Omega L/(2 pi).
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ComplexWaveform,
    Grid,
    PhotonStatistics,
    SpectralAmplitude,
    WaveformSpec,
    build_grid,
    build_waveform,
    from_spectrum,
    photon_stats,
    to_spectrum,
)
from .design import (  # noqa: E402
    ChirpBoundary,
    PhaseProfile,
    SpectralPhase,
    design_chirp_cdf,
    design_dechirp,
)
from .propagate import DispersionParams, EscortConfig, run_transfer  # noqa: E402
from .perturb import perturbative_error, perturbative_u_err  # noqa: E402
from .analysis import CaseConfig, fit_u_err, overlap_fidelity, sweep_error_vs_u  # noqa: E402
