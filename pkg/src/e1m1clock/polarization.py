"""
Dipole selection rules and single-photon couplings for the counter-propagating
sigma+/sigma- scheme.

Vectors are complex Cartesian 3-vectors; helpers convert from and to the
spherical basis

    e_+ = -(x + i y)/sqrt(2),  e_- = (x - i y)/sqrt(2),  e_0 = z,

defined relative to the +Z quantization axis.  Polarization labels always
refer to this lab-frame basis, whatever the propagation direction.

Coupling conventions (frequencies in rad per internal time unit):

    Omega_Ei = -2i d_ag . E_i / hbar        Omega_Bi = -2i mu_ae . B_i^* / hbar

and their counter-rotating partners, which survive adiabatic elimination and
are only averaged away afterwards,

    Omega_Ei^cr = -2i d_ag . E_i^* / hbar   Omega_Bi^cr = -2i mu_ae . B_i / hbar.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "E_PLUS",
    "E_MINUS",
    "E_ZERO",
    "from_spherical",
    "to_spherical",
    "helicity",
    "LevelSpec",
    "STRONTIUM_LEVELS",
    "TransitionCheck",
    "transition_allowed",
    "FieldComponent",
    "plane_wave",
    "retro_reflected_pair",
    "CouplingSet",
    "ConfigurationError",
    "coupling_set",
    "default_dipoles",
    "coupling_report",
    "coupling_report_csv",
]

E_PLUS = -np.array([1.0, 1.0j, 0.0]) / np.sqrt(2.0)
E_MINUS = np.array([1.0, -1.0j, 0.0]) / np.sqrt(2.0)
E_ZERO = np.array([0.0, 0.0, 1.0], dtype=complex)

_POL_VEC = {"sigma_plus": E_PLUS, "sigma_minus": E_MINUS, "linear": np.array([1.0, 0.0, 0.0], dtype=complex)}


class ConfigurationError(ValueError):
    """Invalid field geometry for a two-photon coupling."""


def from_spherical(a_plus, a_minus, a_zero) -> np.ndarray:
    return a_plus * E_PLUS + a_minus * E_MINUS + a_zero * E_ZERO


def to_spherical(v) -> np.ndarray:
    """Components (a_+, a_-, a_0) with v = a_+ e_+ + a_- e_- + a_0 e_0."""
    v = np.asarray(v, dtype=complex)
    return np.array([np.vdot(E_PLUS, v), np.vdot(E_MINUS, v), np.vdot(E_ZERO, v)])


def helicity(v, tol: float = 1e-12) -> str:
    """Classify a transverse vector as sigma_plus, sigma_minus, linear or mixed."""
    a = to_spherical(v)
    n = np.linalg.norm(a)
    if n == 0:
        return "zero"
    a = a / n
    if abs(a[0]) > 1 - tol:
        return "sigma_plus"
    if abs(a[1]) > 1 - tol:
        return "sigma_minus"
    if abs(abs(a[0]) - abs(a[1])) < tol or abs(a[2]) > 1 - tol:
        return "linear"
    return "mixed"


@dataclass(frozen=True)
class LevelSpec:
    """Internal level in LS coupling with a single magnetic sublevel."""

    label: str
    L: int
    S: int
    J: int
    parity: int
    M: int = 0

    def __post_init__(self):
        if self.parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        if abs(self.M) > self.J:
            raise ValueError(f"|M| = {abs(self.M)} exceeds J = {self.J}")

    @property
    def term(self) -> str:
        return f"{2 * self.S + 1}{'SPDFG'[self.L]}{self.J}"


# g = 1S0, a = 3P1 (M = +1 from the sigma+ then sigma- chain), e = 3P0
STRONTIUM_LEVELS = {
    "g": LevelSpec("g", 0, 0, 0, +1, 0),
    "a": LevelSpec("a", 1, 1, 1, -1, +1),
    "e": LevelSpec("e", 1, 1, 0, -1, 0),
}


@dataclass(frozen=True)
class TransitionCheck:
    allowed: bool
    delta_M: int
    reasons: tuple[str, ...] = ()

    def __bool__(self):
        return self.allowed


_POL_DM = {"sigma_plus": 1, "sigma_minus": -1, "linear": 0}


def transition_allowed(lower: LevelSpec, upper: LevelSpec, multipole: str, polarization: str | None = None
                       ) -> TransitionCheck:
    """Single-photon E1/M1 selection rules.

    E1 needs a parity change and Delta L = +-1; M1 keeps parity and L.  Both
    need Delta J in {0, +-1} with J = 0 -> 0 excluded, and Delta M must
    match the polarization (linear 0, sigma+ +1, sigma- -1).
    """
    mp = multipole.upper()
    if mp not in ("E1", "M1"):
        raise ValueError("multipole must be 'E1' or 'M1'")
    reasons = []
    dL = upper.L - lower.L
    dJ = upper.J - lower.J
    dM = upper.M - lower.M
    if mp == "E1":
        if upper.parity == lower.parity:
            reasons.append("E1 needs a parity change")
        if abs(dL) != 1:
            reasons.append(f"E1 needs Delta L = +-1 (got {dL})")
    else:
        if upper.parity != lower.parity:
            reasons.append("M1 keeps parity")
        if dL != 0:
            reasons.append(f"M1 needs Delta L = 0 (got {dL})")
    if abs(dJ) > 1:
        reasons.append(f"Delta J = {dJ} not in {{0, +-1}}")
    if lower.J == 0 and upper.J == 0:
        reasons.append("J = 0 -> J' = 0 is forbidden")
    if polarization is not None:
        want = _POL_DM[polarization]
        if dM != want:
            reasons.append(f"Delta M = {dM} does not match {polarization}")
    elif abs(dM) > 1:
        reasons.append(f"|Delta M| = {abs(dM)} > 1")
    return TransitionCheck(not reasons, dM, tuple(reasons))


@dataclass(frozen=True, eq=False)
class FieldComponent:
    """One travelling plane-wave component of the clock laser.

    ``E`` and ``B`` are the complex amplitudes of the positive-frequency
    part.  ``magnetic_polarization`` labels the conjugate amplitude B^*,
    the combination that enters the M1 matrix element.
    """

    direction: int
    polarization: str
    E: np.ndarray
    B: np.ndarray
    omega: float
    k_L: float

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 (+Z) or -1 (-Z)")
        object.__setattr__(self, "E", np.asarray(self.E, dtype=complex))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=complex))

    @property
    def magnetic_polarization(self) -> str:
        return helicity(np.conj(self.B))


def plane_wave(direction: int, polarization: str, amplitude: complex, omega: float, c: float,
               k_L: float | None = None) -> FieldComponent:
    """Plane wave along direction*Z with B = n x E / c."""
    if polarization not in _POL_VEC:
        raise ValueError(f"unknown polarization {polarization!r}")
    E = amplitude * _POL_VEC[polarization]
    n = np.array([0.0, 0.0, float(direction)])
    B = np.cross(n, E) / c
    return FieldComponent(direction, polarization, E, B, omega, omega / c if k_L is None else k_L)


def retro_reflected_pair(amplitude: complex, omega: float, c: float, first: str = "sigma_plus"):
    """Forward wave with ``first`` polarization, returning wave with the opposite one."""
    second = "sigma_minus" if first == "sigma_plus" else "sigma_plus"
    return plane_wave(+1, first, amplitude, omega, c), plane_wave(-1, second, amplitude, omega, c)


def default_dipoles(levels=STRONTIUM_LEVELS, d: complex = 1.0, mu: complex = 1.0):
    """Dipole vectors d_ag = <a|d|g> and mu_ae = <a|mu|e> fixed by the sublevels."""
    q_ag = levels["a"].M - levels["g"].M
    q_ae = levels["a"].M - levels["e"].M
    basis = {1: E_PLUS, -1: E_MINUS, 0: E_ZERO}
    return d * np.conj(basis[q_ag]), mu * np.conj(basis[q_ae])


@dataclass(frozen=True)
class CouplingSet:
    """Single-photon Rabi frequencies, detunings and counter-rotating partners.

    Index 0 is the beam along +Z, index 1 the beam along -Z.  If
    ``counter_rotating`` is None the retro-reflected sigma+/sigma- values
    are assumed (they carry the same magnitudes as the resonant couplings),
    which yields the doubled Stark shifts of the reduced model.
    """

    Omega_E0: complex
    Omega_E1: complex
    Omega_B0: complex
    Omega_B1: complex
    Delta: float
    delta: float = 0.0
    counter_rotating: dict | None = None
    doppler_free: bool | None = None
    mirrored: bool = False
    hbar: float = 1.0
    polarizations: tuple[str, str] | None = None

    def __post_init__(self):
        if self.doppler_free is None:
            df, mir = _doppler_free(self.Omega_E0, self.Omega_E1, self.Omega_B0, self.Omega_B1)
            object.__setattr__(self, "doppler_free", df)
            object.__setattr__(self, "mirrored", mir)

    @classmethod
    def sigma_scheme(cls, Omega_E: complex, Omega_B: complex, Delta: float, delta: float = 0.0, hbar: float = 1.0):
        """Doppler-free set with Omega_E0 = Omega_E, Omega_B1 = Omega_B."""
        return cls(complex(Omega_E), 0j, 0j, complex(Omega_B), Delta, delta, hbar=hbar)

    def with_delta(self, delta: float) -> "CouplingSet":
        return CouplingSet(self.Omega_E0, self.Omega_E1, self.Omega_B0, self.Omega_B1, self.Delta, delta,
                           self.counter_rotating, self.doppler_free, self.mirrored, self.hbar, self.polarizations)

    def scaled(self, factor: float) -> "CouplingSet":
        cr = None if self.counter_rotating is None else {k: v * factor for k, v in self.counter_rotating.items()}
        return CouplingSet(self.Omega_E0 * factor, self.Omega_E1 * factor, self.Omega_B0 * factor,
                           self.Omega_B1 * factor, self.Delta, self.delta, cr, self.doppler_free, self.mirrored,
                           self.hbar, self.polarizations)

    @property
    def Omega_E(self) -> complex:
        return self.Omega_E1 if self.mirrored else self.Omega_E0

    @property
    def Omega_B(self) -> complex:
        return self.Omega_B0 if self.mirrored else self.Omega_B1

    @property
    def counter(self) -> dict:
        """Counter-rotating amplitudes; retro-reflected defaults when not given."""
        if self.counter_rotating is not None:
            return dict(self.counter_rotating)
        if self.mirrored:
            return {"E0": -self.Omega_E1, "E1": 0j, "B0": 0j, "B1": self.Omega_B0}
        return {"E0": 0j, "E1": -self.Omega_E0, "B0": self.Omega_B1, "B1": 0j}

    def stark_shifts(self) -> tuple[float, float]:
        """(omega_AC on g, omega_AC on e) after elimination and RWA, both entering with a minus sign."""
        cr = self.counter
        wg = (abs(self.Omega_E0) ** 2 + abs(self.Omega_E1) ** 2 + abs(cr["E0"]) ** 2 + abs(cr["E1"]) ** 2)
        we = (abs(self.Omega_B0) ** 2 + abs(self.Omega_B1) ** 2 + abs(cr["B0"]) ** 2 + abs(cr["B1"]) ** 2)
        return wg / (4.0 * self.Delta), we / (4.0 * self.Delta)

    @property
    def omega_AC_plus(self) -> float:
        wg, we = self.stark_shifts()
        return wg + we

    @property
    def omega_AC_minus(self) -> float:
        wg, we = self.stark_shifts()
        return wg - we

    def omega_vector_terms(self, rwa: bool = False):
        """Omega-vector as monomial tables {(n, m): coefficient} per component.

        A term (n, m) multiplies exp(i n k_L Z) exp(i m 2 omega t).
        """
        cr = self.counter
        ce = {(1, 0): np.conj(self.Omega_B0) / 2, (-1, 0): np.conj(self.Omega_B1) / 2}
        cg = {(-1, 0): np.conj(self.Omega_E0) / 2, (1, 0): np.conj(self.Omega_E1) / 2}
        if not rwa:
            ce[(-1, 1)] = -np.conj(cr["B0"]) / 2
            ce[(1, 1)] = -np.conj(cr["B1"]) / 2
            cg[(1, -1)] = -np.conj(cr["E0"]) / 2
            cg[(-1, -1)] = -np.conj(cr["E1"]) / 2
        strip = lambda d: {k: complex(v) for k, v in d.items() if v != 0}
        return strip(ce), strip(cg)


def _doppler_free(E0, E1, B0, B1, rel: float = 1e-12):
    scale = max(abs(E0), abs(E1), abs(B0), abs(B1))
    if scale == 0:
        return False, False
    tiny = lambda x: abs(x) <= rel * scale
    if tiny(E1) and tiny(B0) and not tiny(E0) and not tiny(B1):
        return True, False
    if tiny(E0) and tiny(B1) and not tiny(E1) and not tiny(B0):
        return True, True
    return False, False


def coupling_set(fields: Sequence[FieldComponent], d_ag, mu_ae, Delta: float, delta: float = 0.0,
                 hbar: float = 1.0) -> CouplingSet:
    """All single-photon couplings of a counter-propagating pair.

    Raises
    ------
    ConfigurationError
        If the two components do not counter-propagate.
    """
    if len(fields) != 2:
        raise ConfigurationError("exactly two field components are required")
    f0, f1 = sorted(fields, key=lambda f: -f.direction)
    if f0.direction == f1.direction:
        raise ConfigurationError("field components are co-propagating; a Doppler-free pair must counter-propagate")
    d = np.asarray(d_ag, dtype=complex)
    mu = np.asarray(mu_ae, dtype=complex)
    dot = lambda a, b: complex(np.sum(a * b))
    rabi = lambda x: -2j * x / hbar
    E0, E1, B0, B1 = (rabi(dot(d, f0.E)), rabi(dot(d, f1.E)), rabi(dot(mu, np.conj(f0.B))),
                      rabi(dot(mu, np.conj(f1.B))))
    counter = {"E0": rabi(dot(d, np.conj(f0.E))), "E1": rabi(dot(d, np.conj(f1.E))),
               "B0": rabi(dot(mu, f0.B)), "B1": rabi(dot(mu, f1.B))}
    return CouplingSet(E0, E1, B0, B1, Delta, delta, counter, hbar=hbar,
                       polarizations=(f0.polarization, f1.polarization))


def coupling_report(couplings: CouplingSet, levels=STRONTIUM_LEVELS, pols=None,
                    frequency_scale: float = 1.0) -> list[dict]:
    """Rows multipole, from, to, delta_M, allowed, |Omega| [rad/s].

    ``pols`` are the electric polarizations of the +Z and -Z beams (taken
    from the coupling set when it was built from fields).
    ``frequency_scale`` converts internal frequencies to rad/s.
    """
    pols = pols or couplings.polarizations or ("sigma_plus", "sigma_minus")
    g, a, e = levels["g"], levels["a"], levels["e"]
    rows = []
    for i, (pol, om_e, om_b) in enumerate(zip(pols, (couplings.Omega_E0, couplings.Omega_E1),
                                              (couplings.Omega_B0, couplings.Omega_B1))):
        chk = transition_allowed(g, a, "E1", pol)
        rows.append({"multipole": "E1", "from": g.term, "to": a.term, "delta_M": chk.delta_M,
                     "allowed": chk.allowed, "abs_Omega_rad_s": abs(om_e) * frequency_scale, "beam": i})
        # M1 absorption e -> a uses the helicity of B^*, opposite to the electric one
        mpol = "sigma_minus" if pol == "sigma_plus" else "sigma_plus"
        chk = transition_allowed(e, a, "M1", mpol)
        rows.append({"multipole": "M1", "from": e.term, "to": a.term, "delta_M": chk.delta_M,
                     "allowed": chk.allowed, "abs_Omega_rad_s": abs(om_b) * frequency_scale, "beam": i})
    return rows


def coupling_report_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["multipole", "from", "to", "delta_M", "allowed", "abs_Omega_rad_s"])
    for r in rows:
        w.writerow([r["multipole"], r["from"], r["to"], r["delta_M"], str(r["allowed"]).lower(),
                    f"{r['abs_Omega_rad_s']:.17g}"])
    return buf.getvalue()
