import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from e1m1clock.core import (AMU_SI, C_SI, HBAR_SI, AtomSpecies, GaussianWavepacket, GravityFrame, UnitSystem,
                            make_wavepacket, nondimensionalize, preset_catalog, strontium_like, PRESETS)

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())
SR_M = 87.9056 * AMU_SI


def test_wavepacket_unit_norm_numeric():
    psi = make_wavepacket(0, 1.0)
    p = np.linspace(-12, 12, 20001)
    for ax in range(3):
        assert np.trapezoid(np.abs(psi.amplitude_1d(p, ax)) ** 2, p) == pytest.approx(1.0, abs=1e-12)


def test_zero_width_rejected():
    with pytest.raises(ValueError):
        make_wavepacket(0, [1.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        GaussianWavepacket([0, 0, 0], [1.0, -1.0, 1.0])


def test_position_width_from_fourier_transform():
    # numeric FFT of the sampled momentum amplitude, independent of dx
    psi = make_wavepacket([0, 0, 0.4], [1, 1, 0.3], [0, 0, 0.7])
    n, L = 4096, 200.0
    p = (np.arange(n) - n // 2) * (L / n)
    z = np.fft.fftshift(np.fft.fftfreq(n, d=L / n)) * 2 * np.pi
    amp = psi.amplitude_1d(p)
    f = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(amp)))
    w = np.abs(f) ** 2
    w /= w.sum()
    mean = (z * w).sum()
    width = np.sqrt(((z - mean) ** 2 * w).sum())
    assert width == pytest.approx(1.0 / (2 * 0.3), rel=1e-8)
    assert psi.dx[2] == pytest.approx(1.0 / (2 * 0.3), rel=1e-14)


def test_position_amplitude_matches_momentum_amplitude():
    psi = make_wavepacket([0, 0, 0.5], [1, 1, 0.8], [0, 0, -0.3])
    z = np.linspace(-8, 8, 1601)
    p = np.linspace(-8, 9, 6001)
    amp = psi.amplitude_1d(p)
    direct = np.array([np.trapezoid(np.exp(1j * p * zz) * amp, p) for zz in z[::50]]) / np.sqrt(2 * np.pi)
    assert np.allclose(direct, psi.position_amplitude_1d(z[::50]), atol=1e-10)


@given(st.floats(1e-30, 1e-20), st.floats(1.0, 1e4), st.floats(1e-9, 1e-3),
       st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-12))
def test_unit_round_trip(mass, omega, length, value):
    u = UnitSystem(mass, omega, length)
    for kind in ("mass", "length", "time", "frequency", "velocity", "momentum", "acceleration", "dispersion"):
        assert u.to_si(u.to_internal(value, kind), kind) == pytest.approx(value, rel=1e-14)


def test_nondimensionalize_examples():
    units = UnitSystem.natural(SR_M, 500.0)
    out = nondimensionalize({"omega0_rad_s": 500.0, "t_pi_s": np.pi / 500.0}, units)
    assert out["omega0_rad_s"] == pytest.approx(1.0, rel=1e-15)
    assert out["t_pi_s"] == pytest.approx(np.pi, rel=1e-15)
    ident = nondimensionalize({"z_R_m": 5.0, "g_m_s2": 9.81}, UnitSystem.identity())
    assert ident == {"z_R_m": 5.0, "g_m_s2": 9.81}
    zr = nondimensionalize({"z_R_m": 5.0}, UnitSystem(SR_M, 500.0, 5.0))
    assert zr["z_R_m"] == pytest.approx(1.0, rel=1e-15)


def test_incomplete_unit_system():
    with pytest.raises(ValueError, match="missing"):
        nondimensionalize({"z_R_m": 5.0}, UnitSystem(1.0, None, None))


def test_natural_units_hbar_one():
    u = UnitSystem.natural(SR_M, 500.0)
    assert u.hbar == pytest.approx(1.0, rel=1e-14)
    assert u.c == pytest.approx(C_SI / (u.length * 500.0), rel=1e-14)


@given(st.floats(0.1, 100.0), st.floats(-0.099, 0.099))
def test_species_masses(M, eps):
    sp = AtomSpecies(M, eps * M)
    assert sp.M_e - sp.M_g == pytest.approx(sp.delta_M, rel=1e-12, abs=1e-15 * M)
    assert 0.5 * (sp.M_e + sp.M_g) == pytest.approx(M, rel=1e-15)


def test_species_validation():
    with pytest.raises(ValueError):
        AtomSpecies(1.0, 0.1)
    with pytest.raises(ValueError):
        AtomSpecies(0.0, 0.0)
    with pytest.raises(ValueError):
        AtomSpecies(1.0, 1e-3, omega_eg=1.0, c=1.0)


def test_strontium_epsilon_matches_oracle():
    ref = FROZEN["clock_epsilon"]
    sp = strontium_like()
    assert sp.omega_eg == pytest.approx(ref["omega_eg_rad_s"], rel=1e-14)
    assert sp.epsilon == pytest.approx(ref["epsilon"], rel=1e-12)
    assert sp.delta_M * C_SI ** 2 == pytest.approx(HBAR_SI * sp.omega_eg, rel=1e-12)
    # the same species in natural units keeps its epsilon
    assert strontium_like(UnitSystem.natural(SR_M, 500.0)).epsilon == pytest.approx(ref["epsilon"], rel=1e-12)


def test_gravity_frame():
    with pytest.raises(ValueError):
        GravityFrame(-1.0)
    g = GravityFrame(9.81)
    assert g.z_cl(2.0) == pytest.approx(-0.5 * 9.81 * 4)
    assert g.p_cl(2.0, 3.0) == pytest.approx(-3.0 * 9.81 * 2.0)


def test_preset_catalog_lists_provenance():
    text = preset_catalog()
    for key in PRESETS:
        assert key in text
    assert PRESETS["omega0_rad_s"]["value"] == 500.0
