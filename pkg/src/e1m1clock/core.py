"""
Physical parameter types, the internal unit system and the initial
Gaussian wavepacket.

All physics modules work in a single consistent unit system.  The usual
choice is ``UnitSystem.natural(M, Omega0)``: mass in units of the mean atomic
mass, time in units of 1/Omega(0), and the length chosen so that hbar = 1.
Other length references are allowed (for instance the Rayleigh length), in
which case hbar takes a non-unit internal value that every constructor
accepts through its ``hbar`` argument.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import constants as sc

__all__ = [
    "HBAR_SI",
    "C_SI",
    "AMU_SI",
    "UnitSystem",
    "AtomSpecies",
    "GravityFrame",
    "GaussianWavepacket",
    "make_wavepacket",
    "nondimensionalize",
    "QUANTITY_DIMENSIONS",
    "PRESETS",
    "preset_catalog",
    "strontium_like",
]

HBAR_SI = sc.hbar
C_SI = sc.c
AMU_SI = sc.atomic_mass

# (mass, length, time) exponents
QUANTITY_DIMENSIONS: dict[str, tuple[int, int, int]] = {
    "dimensionless": (0, 0, 0),
    "phase": (0, 0, 0),
    "mass": (1, 0, 0),
    "length": (0, 1, 0),
    "time": (0, 0, 1),
    "frequency": (0, 0, -1),
    "velocity": (0, 1, -1),
    "acceleration": (0, 1, -2),
    "momentum": (1, 1, -1),
    "momentum_variance": (2, 2, -2),
    "wavenumber": (0, -1, 0),
    "energy": (1, 2, -2),
    "action": (1, 2, -1),
    "dispersion": (-1, 0, 1),
}

# key suffix -> quantity kind, used when parameters carry SI unit suffixes
_SUFFIX_KIND = [
    ("_rad_s", "frequency"),
    ("_hz", "frequency"),
    ("_kg_m_s", "momentum"),
    ("_m_s2", "acceleration"),
    ("_m_s", "velocity"),
    ("_1_m", "wavenumber"),
    ("_kg", "mass"),
    ("_rad", "phase"),
    ("_m", "length"),
    ("_s", "time"),
    ("_j", "energy"),
]


@dataclass(frozen=True)
class UnitSystem:
    """Scaling between SI and internal units.

    Parameters
    ----------
    mass : float
        Reference mass [kg].
    omega : float
        Reference angular frequency [rad/s]; the time unit is 1/omega.
    length : float
        Reference length [m].
    """

    mass: float | None
    omega: float | None
    length: float | None

    def __post_init__(self):
        for name in ("mass", "omega", "length"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise ValueError(f"reference {name} must be positive and finite, got {v}")

    @classmethod
    def natural(cls, mass: float, omega: float) -> "UnitSystem":
        """Units with hbar = 1: length sqrt(hbar/(mass*omega))."""
        return cls(mass, omega, float(np.sqrt(HBAR_SI / (mass * omega))))

    @classmethod
    def identity(cls) -> "UnitSystem":
        return cls(1.0, 1.0, 1.0)

    @property
    def complete(self) -> bool:
        return None not in (self.mass, self.omega, self.length)

    def _require(self):
        if not self.complete:
            missing = [n for n in ("mass", "omega", "length") if getattr(self, n) is None]
            raise ValueError(f"unit system is missing reference scale(s): {', '.join(missing)}")

    def scale(self, kind: str) -> float:
        """SI value of one internal unit of the given quantity kind."""
        self._require()
        try:
            em, el, et = QUANTITY_DIMENSIONS[kind]
        except KeyError:
            raise ValueError(f"unknown quantity kind {kind!r}") from None
        return self.mass ** em * self.length ** el * (1.0 / self.omega) ** et

    def to_internal(self, value, kind: str):
        return np.asarray(value, dtype=float) / self.scale(kind) if np.ndim(value) else float(value) / self.scale(kind)

    def to_si(self, value, kind: str):
        return np.asarray(value, dtype=float) * self.scale(kind) if np.ndim(value) else float(value) * self.scale(kind)

    @property
    def hbar(self) -> float:
        """Internal value of hbar (1 for ``natural`` systems)."""
        return HBAR_SI / self.scale("action")

    @property
    def c(self) -> float:
        """Internal value of the speed of light."""
        return C_SI / self.scale("velocity")


def _kind_from_key(key: str) -> str:
    k = key.lower()
    for suffix, kind in _SUFFIX_KIND:
        if k.endswith(suffix):
            return kind
    raise ValueError(f"cannot infer the unit of {key!r}; use an SI suffix such as _s, _m, _kg or _rad_s")


def nondimensionalize(params: Mapping[str, float], units: UnitSystem,
                      kinds: Mapping[str, str] | None = None) -> dict[str, float]:
    """Convert SI parameters to internal units.

    Parameters
    ----------
    params : mapping
        SI values.  The quantity kind is taken from ``kinds`` when given,
        otherwise inferred from the key suffix (``t_s``, ``z_R_m``,
        ``omega0_rad_s`` and so on).  Keys ending in ``_hz`` are ordinary
        frequencies and are multiplied by 2 pi.
    units : UnitSystem
        Must have all three reference scales.

    Returns
    -------
    dict
        Same keys, internal values.
    """
    units._require()
    kinds = dict(kinds or {})
    out = {}
    for key, val in params.items():
        kind = kinds.get(key) or _kind_from_key(key)
        if key.lower().endswith("_hz") and key not in kinds:
            val = 2.0 * np.pi * np.asarray(val, dtype=float)
        out[key] = units.to_internal(val, kind)
    return out


@dataclass(frozen=True)
class AtomSpecies:
    """Two clock states with state-dependent masses M_g = M - dM/2, M_e = M + dM/2.

    ``M`` is the mean of the two masses.  The rest energy common to both
    states is not tracked; only ``delta_M`` enters the dynamics.
    """

    M: float
    delta_M: float
    omega_eg: float | None = None
    c: float | None = None
    hbar: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("mean mass M must be positive")
        if abs(self.epsilon) >= 0.1:
            raise ValueError(f"mass defect epsilon = {self.epsilon:.3g} is not small (|epsilon| must be < 0.1)")
        if self.omega_eg is not None and self.c is not None:
            lhs = self.delta_M * self.c ** 2
            rhs = self.hbar * self.omega_eg
            if not np.isclose(lhs, rhs, rtol=1e-12, atol=0.0):
                raise ValueError("delta_M c^2 and hbar omega_eg disagree beyond 1e-12 relative")

    @property
    def epsilon(self) -> float:
        return self.delta_M / self.M

    @property
    def M_g(self) -> float:
        return self.M - 0.5 * self.delta_M

    @property
    def M_e(self) -> float:
        return self.M + 0.5 * self.delta_M

    def mass(self, state: str) -> float:
        if state == "g":
            return self.M_g
        if state == "e":
            return self.M_e
        raise ValueError(f"internal state must be 'g' or 'e', got {state!r}")

    def with_epsilon(self, epsilon: float) -> "AtomSpecies":
        """Same mean mass, different mass defect (omega_eg dropped)."""
        return AtomSpecies(self.M, epsilon * self.M, None, None, self.hbar, self.name)

    @classmethod
    def from_clock_frequency(cls, M: float, omega_eg: float, c: float, hbar: float = 1.0, name: str = ""):
        return cls(M, hbar * omega_eg / c ** 2, omega_eg, c, hbar, name)


@dataclass(frozen=True)
class GravityFrame:
    """Uniform gravity along -Z; ``chirp_compensated`` removes k_L g t^2/2 from the laser phase."""

    g: float = 0.0
    chirp_compensated: bool = True

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("g must be non-negative (gravity points along -Z)")

    def z_cl(self, t):
        return -0.5 * self.g * np.asarray(t) ** 2

    def p_cl(self, t, mass: float):
        return -mass * self.g * np.asarray(t)


def _vec3(x, name):
    v = np.zeros(3) if x is None else np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = np.array([0.0, 0.0, float(v)])
    if v.shape != (3,):
        raise ValueError(f"{name} must be a scalar or a 3-vector")
    v = v.copy()
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class GaussianWavepacket:
    """Minimum-uncertainty Gaussian with diagonal momentum covariance.

    psi(p) = prod_j (2 pi s_j)^(-1/4) exp(-(p_j - P0_j)^2 / (4 s_j)) exp(-i p.R0/hbar)
    """

    P0: np.ndarray
    sigma: np.ndarray
    R0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "P0", _vec3(self.P0, "P0"))
        s = np.asarray(self.sigma, dtype=float)
        if s.shape != (3,):
            raise ValueError("sigma must hold the three momentum variances")
        if not np.all(s > 0):
            raise ValueError("all momentum variances must be strictly positive")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "R0", _vec3(self.R0, "R0"))

    @property
    def dp(self) -> np.ndarray:
        return np.sqrt(self.sigma)

    @property
    def dx(self) -> np.ndarray:
        """Position widths hbar/(2 dp)."""
        return self.hbar / (2.0 * self.dp)

    @property
    def norm(self) -> float:
        return 1.0

    def mean_p2(self) -> float:
        return float(self.P0 @ self.P0 + self.sigma.sum())

    def mean_r2(self, axis: int) -> float:
        return float(self.R0[axis] ** 2 + self.dx[axis] ** 2)

    def amplitude_1d(self, p, axis: int = 2) -> np.ndarray:
        """Momentum-space amplitude along one axis (other axes integrated out)."""
        s, p0, r0 = self.sigma[axis], self.P0[axis], self.R0[axis]
        p = np.asarray(p, dtype=float)
        return ((2 * np.pi * s) ** -0.25 * np.exp(-(p - p0) ** 2 / (4 * s))
                * np.exp(-1j * p * r0 / self.hbar))

    def position_amplitude_1d(self, z, axis: int = 2) -> np.ndarray:
        """Position-space amplitude along one axis, convention psi(z) = int dp e^{ipz/hbar} psi(p)/sqrt(2 pi hbar)."""
        s, p0, r0 = self.sigma[axis], self.P0[axis], self.R0[axis]
        dx2 = (self.hbar / (2 * np.sqrt(s))) ** 2
        z = np.asarray(z, dtype=float)
        return ((2 * np.pi * dx2) ** -0.25 * np.exp(-(z - r0) ** 2 / (4 * dx2))
                * np.exp(1j * p0 * (z - r0) / self.hbar))


def make_wavepacket(P0=None, widths=(1.0, 1.0, 1.0), R0=None, hbar: float = 1.0) -> GaussianWavepacket:
    """Build a Gaussian from mean momentum, momentum widths Delta p and centre.

    A scalar ``widths`` applies to all three axes.
    """
    w = np.broadcast_to(np.asarray(widths, dtype=float), (3,))
    if not np.all(w > 0):
        raise ValueError("momentum widths must be strictly positive")
    return GaussianWavepacket(P0, w ** 2, R0, hbar)


def strontium_like(units: UnitSystem | None = None, clock_wavelength: float = 698.4e-9) -> AtomSpecies:
    """88Sr-like species with the clock mass defect, in the given units (SI if None)."""
    M = 87.9056 * AMU_SI
    omega = 2 * np.pi * C_SI / clock_wavelength
    if units is None:
        return AtomSpecies.from_clock_frequency(M, omega, C_SI, HBAR_SI, "Sr88")
    return AtomSpecies.from_clock_frequency(units.to_internal(M, "mass"), units.to_internal(omega, "frequency"),
                                            units.c, units.hbar, "Sr88")


PRESETS: dict[str, dict] = {
    "omega0_rad_s": {"value": 500.0, "source": "two-photon Rabi frequency, order 1e2-1e3 (literature order of magnitude)"},
    "w0_m": {"value": 1e-3, "source": "beam waist, order 1e-3 m (literature order of magnitude)"},
    "z_R_m": {"value": 5.0, "source": "Rayleigh length, order 1e0-1e1 m (literature order of magnitude)"},
    "M_kg": {"value": 87.9056 * AMU_SI, "source": "88Sr atomic mass (CODATA amu)"},
    "clock_wavelength_m": {"value": 698.4e-9, "source": "Sr 1S0-3P0 clock line, generic value"},
    "g_m_s2": {"value": 9.81, "source": "standard gravity, generic value"},
}


def preset_catalog() -> str:
    """Text listing of the preset parameters with their provenance."""
    lines = ["# key = value  # provenance"]
    for key, entry in PRESETS.items():
        lines.append(f"{key} = {entry['value']!r}  # {entry['source']}")
    return "\n".join(lines) + "\n"
