"""
TEM00 beam geometry, second-order expansions around the waist and the
coefficients of the position-dependent pulse Hamiltonian.

The two-photon coupling is proportional to B_1 E_0 (the M1 amplitude enters
conjugated twice), so the curvature phases of the two beams cancel and the
coupling phase is Phi(R) = Phi(0) + 2 zeta(Z).  The linear part of this
phase is the effective kick k = 2/z_R along +Z.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .core import AtomSpecies, GaussianWavepacket
from .polarization import CouplingSet

__all__ = [
    "GaussianBeamParams",
    "BeamFactors",
    "beam_factors",
    "remainder_bounds",
    "coupling_profile",
    "coupling_phase",
    "effective_kick",
    "recoil_frequency",
    "PulseCoefficients",
    "pulse_coefficients",
    "compensated_detuning",
    "ExpansionError",
    "check_expansion_validity",
]


class ExpansionError(ValueError):
    """Wavepacket too extended for the second-order beam expansion."""


@dataclass(frozen=True)
class GaussianBeamParams:
    """Fundamental Gaussian beam.

    Give any two of (w0, z_R, wavelength); the third follows from
    z_R = pi w0^2 / lambda.  Supplying all three checks consistency.
    """

    w0: float | None = None
    z_R: float | None = None
    wavelength: float | None = None
    rtol: float = 1e-12

    def __post_init__(self):
        w0, zr, lam = self.w0, self.z_R, self.wavelength
        given = sum(x is not None for x in (w0, zr, lam))
        if given < 2:
            raise ValueError("two of w0, z_R, wavelength are required")
        for name, v in (("w0", w0), ("z_R", zr), ("wavelength", lam)):
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if zr is None:
            object.__setattr__(self, "z_R", np.pi * w0 ** 2 / lam)
        elif lam is None:
            object.__setattr__(self, "wavelength", np.pi * w0 ** 2 / zr)
        elif w0 is None:
            object.__setattr__(self, "w0", float(np.sqrt(zr * lam / np.pi)))
        elif not np.isclose(zr, np.pi * w0 ** 2 / lam, rtol=self.rtol, atol=0):
            raise ValueError(f"z_R = {zr} inconsistent with pi w0^2/lambda = {np.pi * w0 ** 2 / lam}")

    @property
    def k_L(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def k(self) -> float:
        """Effective kick wavenumber 2/z_R."""
        return 2.0 / self.z_R

    def spot_size(self, Z):
        return self.w0 * np.sqrt(1.0 + (np.asarray(Z) / self.z_R) ** 2)


class BeamFactors(NamedTuple):
    inv_w: np.ndarray
    inv_R: np.ndarray
    gouy: np.ndarray
    inv_w_expanded: np.ndarray
    inv_R_expanded: np.ndarray
    gouy_expanded: np.ndarray


def beam_factors(Z, beam: GaussianBeamParams, rho=None) -> BeamFactors:
    """Exact and second-order forms of 1/w(Z), 1/R(Z) and the Gouy phase.

    ``rho`` is accepted for symmetry with the CLI grid; the factors depend
    on Z only.
    """
    Z = np.asarray(Z, dtype=float)
    zr, w0 = beam.z_R, beam.w0
    s = Z / zr
    inv_w = 1.0 / (w0 * np.sqrt(1.0 + s ** 2))
    inv_R = s / (zr * (1.0 + s ** 2))  # = Z/(Z^2 + z_R^2), finite at Z = 0
    gouy = np.arctan(s)
    return BeamFactors(inv_w, inv_R, gouy, (1.0 - 0.5 * s ** 2) / w0, s * (1.0 - s ** 2) / zr, s)


def remainder_bounds(Z, beam: GaussianBeamParams):
    """Next-order bounds on |exact - expanded| for |Z/z_R| < 1.

    The three series alternate with decreasing terms there, so the first
    omitted term bounds the error: 3/8 s^4 / w0, |s|^5 / z_R and |s|^3 / 3.
    """
    s = np.abs(np.asarray(Z, dtype=float) / beam.z_R)
    return 0.375 * s ** 4 / beam.w0, s ** 5 / beam.z_R, s ** 3 / 3.0


def coupling_profile(Z, rho, beam: GaussianBeamParams, expanded: bool = False):
    """|Omega(R)| / Omega(0) = (w0/w)^2 exp(-2 rho^2/w^2), rho in metres."""
    Z = np.asarray(Z, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if expanded:
        return 1.0 - (Z / beam.z_R) ** 2 - 2.0 * (rho / beam.w0) ** 2
    w2 = beam.spot_size(Z) ** 2
    return beam.w0 ** 2 / w2 * np.exp(-2.0 * rho ** 2 / w2)


def coupling_phase(Z, rho, beam: GaussianBeamParams, include_curvature: bool = True):
    """Phase of B_1(R) E_0(R) relative to the origin (curvature terms cancel).

    The individual curvature phases are formed and summed explicitly so a
    numerical gradient of this function checks the cancellation.
    """
    f = beam_factors(Z, beam)
    rho = np.asarray(rho, dtype=float)
    phase = 2.0 * f.gouy
    if include_curvature:
        curv = beam.k_L * rho ** 2 * f.inv_R / 2.0
        phase = phase + (-curv) + (+curv)
    return phase


def effective_kick(beam: GaussianBeamParams) -> np.ndarray:
    """k vector 2/z_R e_Z (gradient of the coupling phase at the origin)."""
    return np.array([0.0, 0.0, 2.0 / beam.z_R])


def recoil_frequency(k: float, M: float, hbar: float = 1.0) -> float:
    return hbar * k ** 2 / (2.0 * M)


@dataclass(frozen=True)
class PulseCoefficients:
    """Everything the pulse Hamiltonian needs, in internal units.

    The second-order structure is

        Omega_H = Omega0 (1 - q),  Delta_H = hbar(nu + omega_k + delta + (1 - q) omega_AC_minus0),
        S_H = -omega_AC_plus0 q / 2,  phi_H = 0,

    with q = Z_H^2/z_R^2 + 2 rho_H^2/w0^2 along the Heisenberg trajectories.
    """

    Omega0: float
    Phi0: float
    omega_AC_plus0: float
    omega_AC_minus0: float
    k: float
    omega_k: float
    delta: float
    M: float
    z_R: float
    w0: float
    hbar: float = 1.0
    Omega_E_sq: float = 0.0

    @property
    def omega_quad(self) -> float:
        """Coefficient of q in Omega_H."""
        return -self.Omega0

    @property
    def delta_quad(self) -> float:
        """Coefficient of q in Delta_H/hbar."""
        return -self.omega_AC_minus0

    @property
    def stark_quad(self) -> float:
        """Coefficient of q in S_H."""
        return -0.5 * self.omega_AC_plus0

    @property
    def phi_quad(self) -> float:
        return 0.0

    @property
    def detuning_offset(self) -> float:
        """Constant part of Delta_H/hbar: omega_k + delta + omega_AC_minus0 (zero when compensated)."""
        return self.omega_k + self.delta + self.omega_AC_minus0

    @property
    def mean_phase_rate(self) -> float:
        """Constant rate of the mean Hamiltonian: (omega_k + delta - omega_AC_plus0)/2."""
        return 0.5 * (self.omega_k + self.delta - self.omega_AC_plus0)

    def nu(self, Pz):
        return self.k * np.asarray(Pz) / self.M

    def with_delta(self, delta: float) -> "PulseCoefficients":
        return replace(self, delta=float(delta))

    def compensated(self) -> "PulseCoefficients":
        return self.with_delta(compensated_detuning(self))


def pulse_coefficients(beam: GaussianBeamParams, couplings: CouplingSet, species: AtomSpecies,
                       delta: float | None = None) -> PulseCoefficients:
    """Second-order pulse coefficients for a Doppler-free coupling set.

    ``delta`` overrides the coupling set's overall detuning; pass the
    result of :func:`compensated_detuning` (or call ``.compensated()``) for
    the recoil- and Stark-compensated choice.
    """
    if not couplings.doppler_free:
        raise ValueError("pulse coefficients need a Doppler-free coupling set")
    from .twolevel import two_photon_rabi

    Om = two_photon_rabi(couplings)
    hbar = couplings.hbar
    k = beam.k
    return PulseCoefficients(
        Omega0=float(abs(Om)),
        Phi0=float(np.angle(Om)),
        omega_AC_plus0=couplings.omega_AC_plus,
        omega_AC_minus0=couplings.omega_AC_minus,
        k=k,
        omega_k=recoil_frequency(k, species.M, hbar),
        delta=couplings.delta if delta is None else float(delta),
        M=species.M,
        z_R=beam.z_R,
        w0=beam.w0,
        hbar=hbar,
        Omega_E_sq=abs(couplings.Omega_E) ** 2,
    )


def compensated_detuning(coeffs: PulseCoefficients) -> float:
    """delta = -omega_k - omega_AC_minus(0)."""
    return -coeffs.omega_k - coeffs.omega_AC_minus0


def check_expansion_validity(psi: GaussianWavepacket, beam: GaussianBeamParams, limit: float = 0.01):
    """Reject wavepackets whose <Z^2>/z_R^2 or <rho^2>/w0^2 exceed ``limit``."""
    zz = psi.mean_r2(2) / beam.z_R ** 2
    rr = (psi.mean_r2(0) + psi.mean_r2(1)) / beam.w0 ** 2
    if zz > limit or rr > limit:
        raise ExpansionError(f"wavepacket too wide for the beam expansion: <Z^2>/z_R^2 = {zz:.3g}, "
                             f"<rho^2>/w0^2 = {rr:.3g} (limit {limit}); use the grid oracle")
    return zz, rr
