import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qwc.analysis import CaseConfig, setup_case
from qwc.core import ComplexWaveform, PhotonStatistics, WaveformSpec, build_grid, build_waveform
from qwc.design import PhaseProfile, chirp_gauss_gauss
from qwc.perturb import (
    PerturbationValidityWarning,
    case_error,
    g_profiles,
    h_profile,
    optimal_compensation,
    optimized_error,
    perturbative_error,
    perturbative_u_err,
)
from qwc.propagate import DispersionParams, EscortConfig

ONE = PhotonStatistics.fock(1)


def models(chirp, u, ratio):
    disp = DispersionParams(u=u)
    return disp, EscortConfig(chirp, u_e=ratio * u)


def test_no_mismatch_no_error(case1_small):
    disp, cfg = models(case1_small.chirp, 0.0, 0.0)
    rep = perturbative_error(case1_small.input, case1_small.chirp, None, disp, cfg, ONE)
    assert rep.error == 0 and rep.theta == 0


def test_gaussian_analytic_error():
    # h = 0 and phi' = 0: 1 - F = u^2 / (16 pi^2 w^2) from int |A'|^2 = 1/(2 w^2)
    w, u = 0.7, 0.03
    g = build_grid(1024, -10, 10)
    a = build_waveform(WaveformSpec.gaussian(w), g)
    chirp = PhaseProfile.zero(g)
    disp, cfg = models(chirp, u, -0.4)
    rep = perturbative_error(a, chirp, None, disp, cfg, ONE)
    assert rep.error == pytest.approx(u**2 / (16 * math.pi**2 * w**2), rel=1e-12)


def test_compensation_vanishes_for_equal_velocities(case1_small):
    disp, cfg = models(case1_small.chirp, 0.01, 1.0)
    assert np.all(optimal_compensation(case1_small.chirp, disp, cfg) == 0)


def test_compensation_linear(case1_small):
    c = case1_small.chirp
    d1 = optimal_compensation(c, *models(c, 0.01, -1.0))
    d2 = optimal_compensation(c, *models(c, 0.02, -1.0))
    assert np.allclose(d2, 2 * d1, rtol=1e-14, atol=0)


def test_compensation_gaussian_chirp():
    g = build_grid(256, -4, 4)
    mu, sigma, u, ue = 0.8, 20.0, 0.01, -0.02
    c = chirp_gauss_gauss(mu, sigma, g)
    disp, cfg = DispersionParams(u=u), EscortConfig(c, u_e=ue)
    assert np.allclose(optimal_compensation(c, disp, cfg), (ue - u) * sigma * g.z / (8 * mu), rtol=1e-13, atol=1e-16)


def test_h_profile_cases(case1_small):
    c = case1_small.chirp
    disp, cfg = models(c, 0.013, -2 / 3)
    v, ve = disp.v(), cfg.v_e()
    delta = optimal_compensation(c, disp, cfg)
    assert np.max(np.abs(h_profile(delta, c, disp, cfg))) <= 1e-12 * np.max(np.abs(math.pi * v * c.dphi))
    assert np.allclose(h_profile(None, c, disp, cfg), math.pi * (v - ve) * c.dphi, rtol=1e-15, atol=0)
    g = c.grid
    flat = PhaseProfile(g, 2.5 * g.z, np.full(g.n_points, 2.5))
    h = h_profile(None, flat, disp, EscortConfig(flat, u_e=cfg.u_e))
    assert np.allclose(h, math.pi * (v - ve) * 2.5, rtol=1e-15)


def test_reduction_identity(case1):
    for u in (0.004, 0.013):
        rep = case_error(case1.input, case1.chirp, u, -2 / 3, ONE)
        assert rep.error == pytest.approx((u / rep.u_err) ** 2, rel=1e-12)
        assert rep.error == pytest.approx(optimized_error(case1.input, case1.chirp, u, -2 / 3, ONE), rel=1e-12)


def test_u_err_scales_with_photon_number(case1_small):
    a, c = case1_small.input, case1_small.chirp
    base = perturbative_u_err(a, c, -2 / 3, ONE)
    for n in (2, 3, 5):
        assert perturbative_u_err(a, c, -2 / 3, PhotonStatistics.fock(n)) == pytest.approx(base / math.sqrt(n), rel=1e-12)


def test_u_err_unbounded_without_mechanism():
    g = build_grid(64, 0, 4)
    a = ComplexWaveform(g, np.full(64, 0.5)).normalize()
    assert perturbative_u_err(a, PhaseProfile.zero(g), -1.0, ONE) == math.inf


def test_u_err_decreases_with_compression():
    vals = []
    for r in (25, 50, 100, 200):
        s = setup_case(CaseConfig(compression=r))
        vals.append(perturbative_u_err(s.input, s.chirp, -2 / 3, ONE))
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_compensation_optimal_in_theory(case1_small):
    c = case1_small.chirp
    disp, cfg = models(c, 0.013, -2 / 3)
    d = optimal_compensation(c, disp, cfg)
    best = perturbative_error(case1_small.input, c, d, disp, cfg, ONE, warn=False)
    for s in (0.0, 0.5, 1.5, 2.0):
        rep = perturbative_error(case1_small.input, c, s * d, disp, cfg, ONE, warn=False)
        if rep.valid:
            assert rep.error >= best.error


def test_validity_warning(case1_small):
    c = case1_small.chirp
    disp, cfg = models(c, 0.6, -2 / 3)
    with pytest.warns(PerturbationValidityWarning):
        rep = perturbative_error(case1_small.input, c, None, disp, cfg, ONE)
    assert not rep.valid


def test_g_profiles_read_only(case1_small):
    c = case1_small.chirp
    _, cfg = models(c, 0.01, -1.0)
    gp, gm = g_profiles(None, c, cfg)
    with pytest.raises(ValueError):
        gp[0] = 1.0
    assert np.allclose(gp - gm, -16 * cfg.v_e() * c.dphi)


@pytest.mark.filterwarnings("ignore::qwc.perturb.PerturbationValidityWarning")
@given(u=st.floats(1e-4, 0.05), ratio=st.floats(-3.0, 3.0))
def test_optimized_error_nonnegative_and_quadratic(case1_small, u, ratio):
    s = case1_small
    e1 = case_error(s.input, s.chirp, u, ratio, ONE).error
    e2 = case_error(s.input, s.chirp, 2 * u, ratio, ONE).error
    assert e1 >= 0
    assert e2 == pytest.approx(4 * e1, rel=1e-12)

