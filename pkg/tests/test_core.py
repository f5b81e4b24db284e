import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qwc.core import (
    ComplexWaveform,
    PhotonStatistics,
    WaveformSpec,
    build_grid,
    build_waveform,
    from_spectrum,
    load_waveform_csv,
    photon_stats,
    photon_stats_from_config,
    save_waveform_csv,
    to_spectrum,
    waveform_from_json,
    waveform_to_json,
)
from qwc.errors import ConfigurationError, StateError, TruncationError


def test_grid_spacing():
    g = build_grid(256, 0, 8)
    assert g.dz == 0.03125
    assert len(g.z) == 256 and g.z[0] == 0 and g.z[-1] == 8 - g.dz


def test_k_spacing_is_dft_conjugate():
    g = build_grid(64, -4, 4)
    assert g.dk == pytest.approx(2 * math.pi / 8, rel=1e-15)
    assert np.allclose(np.sort(g.k), 2 * math.pi / 8 * np.arange(-32, 32))


@pytest.mark.parametrize("n,lo,hi", [(100, 0, 1), (32, 0, 1), (64, 1, 1), (64, 2, 1)])
def test_grid_rejects_bad_input(n, lo, hi):
    with pytest.raises(ConfigurationError, match="Grid invariant"):
        build_grid(n, lo, hi)


def test_exponential_jump_ratio():
    g = build_grid(4096, 0, 16)
    a = build_waveform(WaveformSpec.exponential(1.0, 0.0), g)
    # A(0+) is read one cell in; the sample on the jump holds the midpoint
    i1 = g.index_of(1.0)
    ratio = abs(a.samples[1]) ** 2 / abs(a.samples[i1]) ** 2
    assert ratio == pytest.approx(math.e * math.exp(-g.dz), rel=1e-12)
    assert abs(a.samples[0]) ** 2 == pytest.approx(0.5 * abs(a.samples[1]) ** 2 * math.exp(g.dz), rel=1e-12)


def test_exponential_zero_before_origin():
    g = build_grid(1024, -2, 14)
    for rise in (0.0, 0.02):
        a = build_waveform(WaveformSpec.exponential(1.0, rise), g)
        assert np.all(a.samples[g.z < 0] == 0)


def test_ramp_vanishes_at_origin():
    g = build_grid(1024, -1, 15)
    a = build_waveform(WaveformSpec.exponential(1.0, 0.02), g)
    assert a.samples[g.index_of(0.0)] == 0


def test_gaussian_normalized():
    g = build_grid(1024, -0.1, 0.1)
    a = build_waveform(WaveformSpec.gaussian(0.01), g)
    assert abs(a.norm() - 1) < 1e-12
    assert a.normalized


def test_truncation_error():
    g = build_grid(1024, 0, 2)
    with pytest.raises(TruncationError):
        build_waveform(WaveformSpec.exponential(1.0), g)


def test_waveform_spec_invariants():
    with pytest.raises(ConfigurationError):
        WaveformSpec.exponential(-1.0)
    with pytest.raises(ConfigurationError):
        WaveformSpec.exponential(1.0, -0.1)
    with pytest.raises(ConfigurationError):
        WaveformSpec.gaussian(0.0)
    spec = WaveformSpec.exponential(2.0, 0.1)
    assert WaveformSpec.from_dict(spec.to_dict()) == spec


def test_gaussian_fourier_pair():
    # e^{-z^2/(2w^2)} -> w e^{-k^2 w^2/2} under the unitary convention
    w, z0 = 0.7, 0.3
    g = build_grid(1024, -12, 12)
    a = ComplexWaveform(g, np.exp(-((g.z - z0) ** 2) / (2 * w**2)))
    s = to_spectrum(a)
    exact = w * np.exp(-(g.k**2) * w**2 / 2) * np.exp(-1j * g.k * z0)
    assert np.max(np.abs(s.samples - exact)) < 1e-12
    # width product: rms z times rms k = 1/2
    pz = np.abs(a.samples) ** 2
    pk = np.abs(s.samples) ** 2
    dz_rms = math.sqrt(np.sum((g.z - z0) ** 2 * pz) / pz.sum())
    dk_rms = math.sqrt(np.sum(g.k**2 * pk) / pk.sum())
    assert dz_rms * dk_rms == pytest.approx(0.5, rel=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_spectrum_roundtrip_and_parseval(seed):
    rng = np.random.default_rng(seed)
    g = build_grid(128, -3.0, 5.0)
    a = ComplexWaveform(g, rng.normal(size=128) + 1j * rng.normal(size=128))
    s = to_spectrum(a)
    assert abs(s.norm() - a.norm()) <= 1e-10 * a.norm()
    back = from_spectrum(s)
    assert np.max(np.abs(back.samples - a.samples)) <= 1e-12 * np.max(np.abs(a.samples))


def test_parseval_exponential(case1):
    s = to_spectrum(case1.input)
    assert abs(s.norm() - 1) < 1e-10


def test_grid_refinement_smooth_norm():
    spec = WaveformSpec.gaussian(0.5, 0.2)
    norms = []
    for n in (512, 1024):
        g = build_grid(n, -5, 5)
        raw = np.exp(-((g.z - 0.2) ** 2) / (2 * 0.25))
        norms.append(np.sum(raw**2) * g.dz)
        assert abs(build_waveform(spec, g).norm() - 1) < 1e-12
    assert abs(norms[1] - norms[0]) < 1e-8


def test_single_photon_moments():
    p = photon_stats([0, 1])
    assert p.mean_n == 1 and p.mean_n_n1 == 0


def test_vacuum():
    assert photon_stats([1]).mean_n == 0


def test_truncated_coherent_moments():
    c = np.array([1, 1, 1 / math.sqrt(2)])
    norm2 = 1 + 1 + 0.5
    mean = (0 * 1 + 1 * 1 + 2 * 0.5) / norm2
    fact = (2 * 1 * 0.5) / norm2
    p = photon_stats(c)
    assert p.mean_n == pytest.approx(mean, rel=1e-15)
    assert p.mean_n_n1 == pytest.approx(fact, rel=1e-15)
    assert np.sum(p.probabilities) == pytest.approx(1, abs=1e-12)


def test_all_zero_state_rejected():
    with pytest.raises(StateError):
        photon_stats([0, 0, 0])


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=1, max_size=8))
def test_photon_moments_nonnegative(c):
    if sum(abs(x) ** 2 for x in c) < 1e-12:
        return
    p = photon_stats(c)
    assert p.mean_n >= 0 and p.mean_n_n1 >= 0
    assert abs(p.probabilities.sum() - 1) < 1e-12


def test_photon_config_forms():
    assert photon_stats_from_config(3).mean_n == 3
    assert photon_stats_from_config({"fock": 2}).mean_n == 2
    assert photon_stats_from_config([[0, 0], [0, 1]]).mean_n == 1
    assert PhotonStatistics.fock(0).mean_n == 0


def test_csv_and_json_roundtrip(tmp_path):
    g = build_grid(64, -1.3, 2.1)
    rng = np.random.default_rng(1)
    a = ComplexWaveform(g, rng.normal(size=64) * 1e-3 + 1j * rng.normal(size=64)).normalize()
    save_waveform_csv(a, tmp_path / "w.csv")
    b = load_waveform_csv(tmp_path / "w.csv")
    assert np.array_equal(a.samples, b.samples)
    c = waveform_from_json(waveform_to_json(a))
    assert np.array_equal(a.samples, c.samples) and c.normalized


def test_immutable_samples():
    g = build_grid(64, 0, 1)
    a = ComplexWaveform(g, np.ones(64))
    with pytest.raises(ValueError):
        a.samples[0] = 2
