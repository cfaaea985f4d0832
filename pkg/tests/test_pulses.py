import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from e1m1clock import phasespace as ps
from e1m1clock.core import GravityFrame, make_wavepacket
from e1m1clock.pulses import (CommutationError, CommutationWarning, U3Operator, assemble_H3, commutator_diagnostic,
                              evolve_U3, generalized_pulse, ideal_matrix, max_commutator)
from test_acceptance import desk_coeffs


def test_h3_vanishes_in_plane_wave_limit():
    # the Doppler term k P/M is the slowest to vanish, as 1/z_R
    R = np.array([0.3, -0.2, 0.5])
    P = np.array([0.1, 0.2, -0.4])
    for zr in (1e6, 1e9, 1e12):
        c = desk_coeffs(zr, w0=zr)
        for t in (0.0, 0.7, 3.0):
            assert np.max(np.abs(assemble_H3(c, t).evaluate(R, P))) <= 1.01 * abs(P[2]) / zr


def test_h3_at_time_zero():
    c = desk_coeffs(50.0)
    H0, Hx, Hy, Hz = assemble_H3(c, 0.0).evaluate(np.array([0, 0, 2.0]), np.array([0, 0, 0.3]))
    q = (2.0 / 50.0) ** 2
    assert Hy == 0.0
    assert Hz == pytest.approx(0.5 * (c.nu(0.3) - c.omega_AC_minus0 * q), rel=1e-14)
    assert Hx == pytest.approx(-0.5 * c.Omega0 * q, rel=1e-14)
    assert H0 == pytest.approx(0.5 * c.omega_AC_plus0 * q, rel=1e-14)


def test_h3_matrix_hermitian():
    m = assemble_H3(desk_coeffs(20.0), 1.3).matrix([0.1, 0.2, 0.3], [0.4, -0.2, 0.7])
    assert np.allclose(m, m.conj().T, atol=0)


def test_commutator_zero_at_equal_times():
    psi = make_wavepacket(0, 0.3)
    c = desk_coeffs(30.0)
    assert commutator_diagnostic(0.8, 0.8, psi, c) == pytest.approx(0.0, abs=1e-14)
    assert commutator_diagnostic(0.0, 1.5, psi, c) > 0
    assert commutator_diagnostic(0.0, 1.5, psi, c) == pytest.approx(commutator_diagnostic(1.5, 0.0, psi, c))


def test_commutator_grows_with_packet_and_shrinks_with_beam():
    c = desk_coeffs(30.0)
    narrow, wide = make_wavepacket(0, 0.5), make_wavepacket(0, 0.1)
    assert max_commutator(np.pi, wide, c) > max_commutator(np.pi, narrow, c)
    assert max_commutator(np.pi, narrow, desk_coeffs(300.0)) < max_commutator(np.pi, narrow, c)


def test_commutator_basis_size_converged():
    psi, c = make_wavepacket(0, 0.3), desk_coeffs(30.0)
    a = commutator_diagnostic(0.0, 1.2, psi, c, n_basis=7)
    b = commutator_diagnostic(0.0, 1.2, psi, c, n_basis=12)
    assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(ValueError):
        commutator_diagnostic(0.0, 1.2, psi, c, n_basis=3)


def test_evolve_u3_guards():
    c = desk_coeffs(5.0)
    wide = make_wavepacket(0, 0.05)
    with pytest.warns(CommutationWarning):
        evolve_U3(np.pi, c, psi=wide)
    with pytest.raises(CommutationError):
        evolve_U3(np.pi, c, psi=wide, strict=True)
    with pytest.raises(ps.NotRepresentableError):
        U3Operator(np.pi, c, keep_quadratic=True).matrix(0.0)


def test_u3_identity_cases():
    c = desk_coeffs(40.0)
    assert np.allclose(U3Operator(np.pi / 2, c).matrix(0.0), np.eye(2), atol=1e-15)
    assert np.allclose(U3Operator(2 * np.pi, c).matrix(0.8), np.eye(2), atol=1e-14)


@given(st.floats(0.0, 2 * np.pi), st.floats(-5.0, 5.0), st.floats(5.0, 1e4))
def test_u3_unitary(tau, pz, zr):
    m = U3Operator(tau, desk_coeffs(zr)).matrix(pz)
    assert np.allclose(m.conj().T @ m, np.eye(2), atol=1e-13)


def test_u3_grid_generator_matches_momentum_blocks():
    # the grid form (dense FFT matrices) against the per-momentum 2x2 blocks
    c = desk_coeffs(4.0)
    n, L = 64, 40.0
    z = (np.arange(n) - n // 2) * (L / n)
    p = 2 * np.pi * np.fft.fftfreq(n, L / n)
    rng = np.random.default_rng(1)
    e = np.exp(-z ** 2 / 4) * (1 + 0.2j * z)
    g = np.exp(-(z - 1) ** 2 / 3) * rng.uniform(0.9, 1.1)
    U = U3Operator(1.1, c)
    e1, g1 = U.apply_on_grid(e, g, z, p)
    E, G = np.fft.fft(e), np.fft.fft(g)
    blocks = np.array([U.matrix(pp) for pp in p])
    E2 = blocks[:, 0, 0] * E + blocks[:, 0, 1] * G
    G2 = blocks[:, 1, 0] * E + blocks[:, 1, 1] * G
    assert np.allclose(e1, np.fft.ifft(E2), atol=1e-12)
    assert np.allclose(g1, np.fft.ifft(G2), atol=1e-12)


@pytest.mark.parametrize("kind", ["pi", "pi_half"])
@pytest.mark.parametrize("splitting", [True, False])
def test_generalized_pulse_unitarity(kind, splitting):
    c = desk_coeffs(25.0, Phi0=0.4)
    P = generalized_pulse(kind, c, include_splitting=splitting)
    for pz in (-1.0, 0.0, 0.3, 2.0):
        assert P.unitarity_defect(pz) <= 1e-10


def test_cell_kicks():
    zr = 25.0
    P = generalized_pulse("pi", desk_coeffs(zr))
    for br in P.cell("e", "e") + P.cell("g", "g"):
        assert br.op.b[2] == pytest.approx(0.0, abs=1e-15)
    for br in P.cell("e", "g"):
        assert br.op.b[2] == pytest.approx(2 / zr, rel=1e-14)
    for br in P.cell("g", "e"):
        assert br.op.b[2] == pytest.approx(-2 / zr, rel=1e-14)
    assert P.matrix_cell("ge") is P.cell("e", "g")
    assert P.matrix_cell("ee") is P.cell("e", "e")


def test_laser_phase_enters_coupling_cells():
    a = generalized_pulse("pi_half", desk_coeffs(1e8, Phi0=0.0, ac_plus=0, ac_minus=0)).internal_matrix()
    b = generalized_pulse("pi_half", desk_coeffs(1e8, Phi0=0.5, ac_plus=0, ac_minus=0)).internal_matrix()
    assert b[0, 1] / a[0, 1] == pytest.approx(np.exp(0.5j), abs=1e-9)
    assert b[1, 0] / a[1, 0] == pytest.approx(np.exp(-0.5j), abs=1e-9)
    assert b[0, 0] == pytest.approx(a[0, 0], abs=1e-12)


def test_splitting_effect_shrinks_with_beam_size():
    # splitting distance xi = hbar k s/(M Omega0) with k = 2/z_R
    devs = []
    for zr in (1e2, 1e3, 1e4):
        c = desk_coeffs(zr, ac_plus=0.0, ac_minus=0.0)
        P = generalized_pulse("pi_half", c)
        devs.append(float(np.max(np.abs(P.internal_matrix(0.5) - ideal_matrix("pi_half")))))
    assert devs[0] > devs[1] > devs[2]
    assert devs[1] / devs[2] == pytest.approx(10.0, rel=0.05)


def test_gravity_frame_reference_is_free_fall():
    # the mean evolution carried onto the falling trajectory is mean-mass free fall
    c = desk_coeffs(50.0, ac_plus=0.0, ac_minus=0.0)
    gf = GravityFrame(0.02)
    for start in (0.0, 3.0):
        P = generalized_pulse("pi", c, gravity=gf, start_time=start)
        ff = ps.free_fall_segment(c.M, P.t_pulse, gf.g)
        assert P.reference.allclose(ff, atol=1e-12)
        for pz in (0.0, 0.4):
            assert P.unitarity_defect(pz) <= 1e-10


def test_ideal_matrices():
    assert np.allclose(ideal_matrix("pi") @ ideal_matrix("pi").conj().T, np.eye(2))
    assert np.allclose(ideal_matrix("pi/2") @ ideal_matrix("pi2"), ideal_matrix("pi"))
    with pytest.raises(ValueError):
        ideal_matrix("2pi")
