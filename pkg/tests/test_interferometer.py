import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from e1m1clock import interferometer as ifo
from e1m1clock import phasespace as ps
from e1m1clock.core import AtomSpecies, GravityFrame, make_wavepacket
from test_acceptance import A_G, A_PSI, desk_coeffs, scheme_a, wrap


def test_scheme_a_degenerate_phases_without_mass_defect():
    seq, c = scheme_a()
    o = ifo.scheme_a_observables(seq, AtomSpecies(1.0, 0.0), A_G, c, A_PSI)
    r = ifo.scheme_a_reference(seq, AtomSpecies(1.0, 0.0), A_G, c.k)
    assert wrap(o["dphi_g"] - r["dphi_g"]) == pytest.approx(0.0, abs=1e-9)
    assert wrap(o["dphi_e"] - r["dphi_e"]) == pytest.approx(0.0, abs=1e-9)
    assert o["V_g"] == pytest.approx(1.0, abs=1e-12) and o["V_e"] == pytest.approx(1.0, abs=1e-12)
    # the clock time enters only through eps: no dependence on T2 at eps = 0
    assert ifo.double_differential(seq, AtomSpecies(1.0, 0.0), A_G, c, A_PSI) == pytest.approx(0.0, abs=1e-9)


def test_scheme_a_intensity_prefactor():
    seq, c = scheme_a()
    ports = ifo.build_scheme_a(seq, AtomSpecies(1.0, 0.0), GravityFrame(0.0), c)
    for port, br in ports.items():
        assert len(br) == 2
        for b in br:
            assert abs(b.weight) == pytest.approx(1 / (4 * np.sqrt(2)), rel=1e-14)
    o = ifo.scheme_a_observables(seq, AtomSpecies(1.0, 0.0), GravityFrame(0.0), c, A_PSI)
    # two paths of 1/32 each: I = (1/16)(1 + V cos dphi) per port
    for port in "ge":
        I = o[f"I_{port}"]
        assert 0.0 <= I <= 1 / 8 + 1e-15
        assert I == pytest.approx((1 + o[f"V_{port}"] * np.cos(o[f"dphi_{port}"])) / 16, abs=1e-14)


@settings(max_examples=15)
@given(st.floats(0.0, 0.05), st.floats(0.0, 2e-3))
def test_port_sum_bounded(g, eps):
    seq, c = scheme_a()
    o = ifo.scheme_a_observables(seq, AtomSpecies(1.0, eps), GravityFrame(g), c, A_PSI)
    # the complementary Bragg outputs carry (1/16)(1 - V cos dphi) each
    assert 0.0 <= o["I_g"] + o["I_e"] <= 1 / 4 + 1e-14


def test_double_differential_zero_shift():
    seq, c = scheme_a()
    assert ifo.double_differential(seq, AtomSpecies(1.0, 1e-3), A_G, c, A_PSI, tau=0.0) == 0.0


def test_scheme_a_timing_errors():
    with pytest.raises(ifo.TimingError):
        ifo.SchemeASequence(0, 10, 20, 40, 49, 10, np.pi / 2, 5.0)
    with pytest.raises(ifo.TimingError):
        ifo.SchemeASequence.from_layout(10.0, 20.0, 21.0, np.pi / 2, 5.0)
    with pytest.raises(ifo.TimingError):
        ifo.SchemeASequence.from_layout(10.0, 20.0, 40.0, np.pi / 2, 5.0, tau=19.0)
    seq, c = scheme_a()
    with pytest.raises(ifo.TimingError, match="t_pi_half"):
        ifo.build_scheme_a(seq, AtomSpecies(1.0, 0.0), A_G, desk_coeffs(100.0, Omega0=2.0))


def test_species_coefficient_mismatch():
    seq, c = scheme_a()
    with pytest.raises(ValueError, match="disagree"):
        ifo.build_scheme_a(seq, AtomSpecies(2.0, 0.0), A_G, c)


def test_scheme_b_timing():
    seq = ifo.SchemeBSequence(T=30.0, deltaT=10.0, t_pi=np.pi, k_p=5.0, pulse_gap=1.0)
    t = seq.times
    assert t["T2"] - t["T1"] == pytest.approx(t["T4"] - (t["T3"] + seq.t_pi))
    assert seq.clock_time == pytest.approx(t["T3"] - t["T2"])
    again = ifo.SchemeBSequence.from_times(t["T1"], t["T2"], t["T3"], t["T4"], np.pi, 5.0)
    assert again.times == pytest.approx(t)
    with pytest.raises(ifo.TimingError, match="symmetric"):
        ifo.SchemeBSequence.from_times(10.0, 11.0, 20.0, 40.0, np.pi, 5.0)
    with pytest.raises(ifo.TimingError):
        ifo.SchemeBSequence(T=5.0, deltaT=10.0, t_pi=np.pi, k_p=5.0)
    with pytest.raises(ValueError):
        seq.with_state("a")


def test_scheme_b_without_mass_defect():
    seq = ifo.SchemeBSequence(T=30.0, deltaT=10.0, t_pi=np.pi, k_p=5.0)
    c = desk_coeffs(100.0)
    o = ifo.scheme_b_observables(seq, AtomSpecies(1.0, 0.0), A_G, c, A_PSI)
    assert o["dphi_minus"] == pytest.approx(0.0, abs=1e-9)
    r = ifo.scheme_b_reference(seq, AtomSpecies(1.0, 0.0), A_G)
    assert wrap(o["dphi_g"] - r["dphi_g"]) == pytest.approx(0.0, abs=1e-9)
    assert o["V_g"] == pytest.approx(1.0, abs=1e-12) and o["V_e"] == pytest.approx(1.0, abs=1e-12)


def test_scheme_b_bright_port_without_gravity():
    seq = ifo.SchemeBSequence(T=30.0, deltaT=10.0, t_pi=np.pi, k_p=5.0)
    o = ifo.scheme_b_observables(seq, AtomSpecies(1.0, 0.0), GravityFrame(0.0), desk_coeffs(100.0), A_PSI)
    # two branches of weight 1/4 each (four Bragg pulses) interfering in phase
    assert o["I_g"] == pytest.approx(1 / 4, abs=1e-12)
    assert o["dphi_g"] == pytest.approx(0.0, abs=1e-12)


def test_phase_floor_scales_with_phases():
    seq, c = scheme_a()
    small = ifo.scheme_a_observables(seq, AtomSpecies(1.0, 1e-3), A_G, c, A_PSI)["phase_floor"]
    big = ifo.scheme_a_observables(seq, AtomSpecies(1.0, 1e-3), GravityFrame(10.0), c, A_PSI)["phase_floor"]
    assert 0 < small < 1e-12
    assert big > 100 * small


def test_phase_floor_definition():
    u = ps.CanonicalUnitary([0, 0, 2.0], [0, 0, 3.0], 0.5, {"x": -4.0, "y": 1.0})
    psi = make_wavepacket(0, 1.0)
    assert ifo.phase_roundoff_floor([ps.WeightedBranch(1.0, u)], psi) == pytest.approx(6.0 * np.finfo(float).eps)


def test_richardson_helpers():
    f = lambda e: 1.0 + 2.0 * e + 7.0 * e ** 2
    assert ifo.richardson_first_order(f, 0.1) == pytest.approx(1.0 + 0.2, abs=1e-14)
    r = lambda e: 3.0 * e ** 2
    assert ifo.richardson_ratio(r, 0.2) == pytest.approx(4.0)


def test_two_pulse_ramsey_fringe():
    # no splitting, no gravity: the e port follows (1 + cos(phi))/2 with phi the second pulse phase
    sp = AtomSpecies(1.0, 0.0)
    c = desk_coeffs(1e9, ac_plus=0.0, ac_minus=0.0)
    psi = make_wavepacket(0, 1e-3)
    for phi in (0.0, np.pi / 2, np.pi, 2.0):
        res = ifo.two_pulse_intensities(sp, c, 5.0, psi, include_splitting=False, keep_translation=False,
                                        second_phase=phi)
        assert res["e"].I == pytest.approx((1 + np.cos(phi)) / 2, abs=1e-9)
        assert res["e"].I + res["g"].I == pytest.approx(1.0, abs=1e-12)


def test_two_pulse_path_count():
    c = desk_coeffs(50.0)
    ports = ifo.build_two_pulse(AtomSpecies(1.0, 1e-3), c, 4.0)
    assert all(len(v) == 8 for v in ports.values())
    with pytest.raises(ifo.TimingError):
        ifo.build_two_pulse(AtomSpecies(1.0, 1e-3), c, -1.0)
