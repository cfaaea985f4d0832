"""Shared scaled parameters for the demos (hbar = M = 1, time unit 1/Omega0)."""
import numpy as np

from e1m1clock.beam import PulseCoefficients


def desk_coeffs(z_R, Omega0=1.0, Phi0=0.0, ac_plus=1.5, ac_minus=0.3, w0=10.0):
    """Compensated pulse coefficients for a beam with Rayleigh length z_R."""
    k = 2.0 / z_R
    c = PulseCoefficients(Omega0=Omega0, Phi0=Phi0, omega_AC_plus0=ac_plus * Omega0,
                          omega_AC_minus0=ac_minus * Omega0, k=k, omega_k=k ** 2 / 2, delta=0.0, M=1.0,
                          z_R=z_R, w0=w0)
    return c.compensated()


def wrap(x):
    return float(np.angle(np.exp(1j * x)))
