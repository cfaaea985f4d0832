import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from e1m1clock.polarization import (STRONTIUM_LEVELS, ConfigurationError, CouplingSet, LevelSpec, coupling_report,
                                    coupling_report_csv, coupling_set, default_dipoles, helicity, plane_wave,
                                    retro_reflected_pair, transition_allowed)

G, A, E = STRONTIUM_LEVELS["g"], STRONTIUM_LEVELS["a"], STRONTIUM_LEVELS["e"]


def test_e1_ground_to_ancilla_allowed():
    chk = transition_allowed(G, A, "E1", "sigma_plus")
    assert chk.allowed and chk.delta_M == 1
    assert A.L - G.L == 1


def test_j0_to_j0_forbidden():
    for mp in ("E1", "M1"):
        assert not transition_allowed(G, E, mp)
        assert not transition_allowed(E, G, mp)


def test_identical_states_m1_forbidden():
    chk = transition_allowed(G, G, "M1")
    assert not chk.allowed
    assert any("J = 0" in r for r in chk.reasons)


def test_m1_clock_to_ancilla():
    # absorption e -> a with B^* of sigma- helicity from the backward beam
    assert transition_allowed(E, A, "M1", "sigma_plus").allowed
    assert not transition_allowed(E, A, "E1", "sigma_plus").allowed


def test_level_spec_validation():
    with pytest.raises(ValueError):
        LevelSpec("x", 0, 0, 0, 2)
    with pytest.raises(ValueError):
        LevelSpec("x", 1, 1, 1, -1, 2)


def test_sigma_plus_e_has_sigma_minus_b():
    for d in (1, -1):
        for pol in ("sigma_plus", "sigma_minus"):
            f = plane_wave(d, pol, 1.3, 2.0, 10.0)
            assert helicity(f.E) == pol
            other = "sigma_minus" if pol == "sigma_plus" else "sigma_plus"
            assert f.magnetic_polarization == other
            assert np.linalg.norm(f.B) == pytest.approx(np.linalg.norm(f.E) / 10.0, rel=1e-14)


def test_retro_pair_doppler_free():
    f0, f1 = retro_reflected_pair(1.0, 1.0, 10.0)
    assert np.linalg.norm(f0.E) == pytest.approx(np.linalg.norm(f1.E))
    d, mu = default_dipoles()
    cs = coupling_set([f0, f1], d, mu, Delta=100.0)
    assert cs.doppler_free and not cs.mirrored
    assert abs(cs.Omega_E1) < 1e-12 and abs(cs.Omega_B0) < 1e-12
    assert abs(cs.Omega_E0) > 0.1 and abs(cs.Omega_B1) > 0.01


def test_swapped_pair_is_mirrored():
    f0, f1 = retro_reflected_pair(1.0, 1.0, 10.0, first="sigma_minus")
    d, mu = default_dipoles()
    cs = coupling_set([f0, f1], d, mu, Delta=100.0)
    assert cs.doppler_free and cs.mirrored
    assert abs(cs.Omega_E0) < 1e-12 and abs(cs.Omega_B1) < 1e-12
    assert abs(cs.Omega_E1) > 0.1 and abs(cs.Omega_B0) > 0.01


def test_linear_fields_not_doppler_free():
    f0 = plane_wave(1, "linear", 1.0, 1.0, 10.0)
    f1 = plane_wave(-1, "linear", 1.0, 1.0, 10.0)
    cs = coupling_set([f0, f1], np.ones(3), np.ones(3), Delta=100.0)
    assert not cs.doppler_free


def test_co_propagating_rejected():
    f0 = plane_wave(1, "sigma_plus", 1.0, 1.0, 10.0)
    with pytest.raises(ConfigurationError):
        coupling_set([f0, f0], *default_dipoles(), Delta=100.0)


@given(st.floats(0.1, 10.0), st.floats(-3.0, 3.0))
def test_coupling_set_linear_in_amplitude(scale, phase):
    d, mu = default_dipoles()
    f0, f1 = retro_reflected_pair(1.0, 1.0, 10.0)
    g0, g1 = retro_reflected_pair(scale * np.exp(1j * phase), 1.0, 10.0)
    a = coupling_set([f0, f1], d, mu, 50.0)
    b = coupling_set([g0, g1], d, mu, 50.0)
    assert b.Omega_E0 == pytest.approx(scale * np.exp(1j * phase) * a.Omega_E0, rel=1e-12)
    assert abs(b.Omega_B1) == pytest.approx(scale * abs(a.Omega_B1), rel=1e-12)


def test_coupling_report_csv():
    cs = CouplingSet.sigma_scheme(2.0, 3.0, 100.0)
    rows = coupling_report(cs)
    text = coupling_report_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "multipole,from,to,delta_M,allowed,abs_Omega_rad_s"
    assert text.endswith("\n") and "\r" not in text
    allowed = [r for r in rows if r["allowed"]]
    assert {r["multipole"] for r in allowed} == {"E1", "M1"}
