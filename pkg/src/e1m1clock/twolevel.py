"""
Adiabatic elimination of the ancilla level and plane-wave Rabi dynamics.

Operators acting on the COM are stored as monomial tables

    A = sum_{n, m} exp(i n k_L Z) exp(2 i m omega t) f_{nm}(P_z)

with the exponential to the left of the momentum function.  This basis is
closed under the projector recursion, so every term can be built exactly
and then evaluated on Gaussian test states.  Transverse kinetic energy
commutes with everything here and enters as a constant.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import trapezoid

from .core import GaussianWavepacket
from .polarization import CouplingSet

__all__ = [
    "SingularDetuningError",
    "AdiabaticityWarning",
    "EffectiveTwoLevel",
    "two_photon_rabi",
    "Adiabaticity",
    "adiabaticity",
    "kinetic_correction",
    "ProjectorTerm",
    "projector_expansion",
    "bloch_residual",
    "effective_hamiltonian",
    "rabi_populations",
    "rabi_table",
]


class SingularDetuningError(ZeroDivisionError):
    """Single-photon detuning Delta = 0; elimination is undefined."""


class AdiabaticityWarning(UserWarning):
    pass


def _check_delta(c: CouplingSet):
    if c.Delta == 0:
        raise SingularDetuningError("single-photon detuning Delta is zero")


def _omega_norm_sq_rwa(c: CouplingSet) -> float:
    """Cycle-averaged <Omega^dagger Omega> for plane waves (no spatial interference)."""
    ce, cg = c.omega_vector_terms()
    return float(sum(abs(v) ** 2 for v in ce.values()) + sum(abs(v) ** 2 for v in cg.values()))


def two_photon_rabi(c: CouplingSet, eps_warn: float = 0.1, eps_max: float = 0.2) -> complex:
    """Omega = -Omega_B1^* Omega_E0 / (2 Delta) (mirrored set: B0 and E1).

    Warns when eps_Omega exceeds ``eps_warn`` and raises above ``eps_max``.
    """
    _check_delta(c)
    eps = np.sqrt(_omega_norm_sq_rwa(c)) / abs(c.Delta)
    eps_d = abs(c.delta) / abs(c.Delta)
    if max(eps, eps_d) >= eps_max:
        raise ValueError(f"adiabaticity parameter {max(eps, eps_d):.3g} >= {eps_max}; elimination invalid")
    if max(eps, eps_d) > eps_warn:
        warnings.warn(f"adiabaticity parameter {max(eps, eps_d):.3g} > {eps_warn}", AdiabaticityWarning)
    return complex(-np.conj(c.Omega_B) * c.Omega_E / (2.0 * c.Delta))


class Adiabaticity(NamedTuple):
    eps_Omega: float
    eps_delta: float


def _exp_ikz(psi: GaussianWavepacket, q: float) -> complex:
    """<psi| exp(i q Z) |psi>."""
    return complex(np.exp(1j * q * psi.R0[2] - 0.5 * q ** 2 * psi.dx[2] ** 2))


def adiabaticity(c: CouplingSet, psi: GaussianWavepacket, k_L: float = 0.0, mass: float = 1.0) -> Adiabaticity:
    """State-conditioned adiabaticity parameters.

    eps_Omega = sqrt(<Omega^dagger Omega>)/|Delta| with the Omega-vector
    including counter-rotating amplitudes and averaged over an optical
    cycle; spatial interference terms use <exp(2 i k_L Z)> on ``psi``.
    eps_delta = max_j |<P^2>/(2 M hbar) + delta_j| / |Delta| over the
    two diagonal entries of delta(P).  The scalar Delta is used in both
    denominators; :func:`kinetic_correction` reports what that neglects.
    """
    _check_delta(c)
    total = 0.0
    for comp in c.omega_vector_terms():
        for (n1, m1), v1 in comp.items():
            for (n2, m2), v2 in comp.items():
                if m1 != m2:
                    continue
                total += (np.conj(v1) * v2 * _exp_ikz(psi, (n2 - n1) * k_L)).real
    kin = psi.mean_p2() / (2.0 * mass * c.hbar)
    eps_d = max(abs(kin + c.delta), abs(kin)) / abs(c.Delta)
    return Adiabaticity(float(np.sqrt(max(total, 0.0)) / abs(c.Delta)), float(eps_d))


def kinetic_correction(c: CouplingSet, psi: GaussianWavepacket, mass: float = 1.0) -> float:
    """||P^2/(2 M hbar Delta)||, the size of the neglected operator part of Delta(P)."""
    _check_delta(c)
    return psi.mean_p2() / (2.0 * mass * c.hbar * abs(c.Delta))


# monomial-table algebra -----------------------------------------------------

Table = dict  # (n, m) -> callable(Pz) -> array


def _const(v) -> Callable:
    return lambda P, v=complex(v): np.full(np.shape(P), v, dtype=complex)


def _tab_from_coeffs(d: dict) -> Table:
    return {k: _const(v) for k, v in d.items()}


def _add(a: Table, b: Table, sign: float = 1.0) -> Table:
    out = dict(a)
    for k, f in b.items():
        if k in out:
            g = out[k]
            out[k] = lambda P, f=f, g=g, s=sign: g(P) + s * f(P)
        else:
            out[k] = (lambda P, f=f, s=sign: s * f(P)) if sign != 1.0 else f
    return out


def _mul(a: Table, b: Table, hk: float) -> Table:
    """Operator product a b, using f(P) exp(i n k Z) = exp(i n k Z) f(P + n hbar k)."""
    out: Table = {}
    for (n1, m1), f1 in a.items():
        for (n2, m2), f2 in b.items():
            key = (n1 + n2, m1 + m2)
            h = lambda P, f1=f1, f2=f2, s=n2 * hk: f1(P + s) * f2(P)
            out = _add(out, {key: h})
    return out


def _scale(a: Table, fn: Callable, left: bool, hk: float) -> Table:
    """Multiply by a function of P from the left (g(P) A) or the right (A g(P))."""
    if left:
        return {k: (lambda P, f=f, n=k[0]: fn(P + n * hk) * f(P)) for k, f in a.items()}
    return {k: (lambda P, f=f: f(P) * fn(P)) for k, f in a.items()}


def _dagger(a: Table, hk: float) -> Table:
    # (exp(inkZ) f(P))^dagger = conj f(P) exp(-inkZ) = exp(-inkZ) conj f(P - n hbar k)
    return {(-n, -m): (lambda P, f=f, s=-n * hk: np.conj(f(P + s))) for (n, m), f in a.items()}


@dataclass(frozen=True)
class ProjectorTerm:
    """Order-k term Pi_k = (Pi_k[e], Pi_k[g]) of the quasi-projector (1x2 row)."""

    order: int
    e: Table
    g: Table

    def monomials(self) -> set:
        return set(self.e) | set(self.g)

    def apply(self, psi: GaussianWavepacket, internal=(0.0, 1.0), hk: float = 0.0, n_grid: int = 801):
        return _apply_row((self.e, self.g), psi, internal, hk, n_grid)

    def norm(self, psi: GaussianWavepacket, internal=(0.0, 1.0), hk: float = 0.0) -> float:
        return _state_norm(self.apply(psi, internal, hk), psi, hk)


class _Model:
    def __init__(self, c: CouplingSet, k_L: float, mass: float, perp_kinetic: float, rwa: bool):
        self.c = c
        self.hk = c.hbar * k_L
        ce, cg = c.omega_vector_terms(rwa=rwa)
        self.Om_e, self.Om_g = _tab_from_coeffs(ce), _tab_from_coeffs(cg)
        self.kin = lambda P: (np.asarray(P) ** 2 / (2 * mass * c.hbar) + perp_kinetic) + 0j
        self.delta_e = lambda P: self.kin(P) + c.delta
        self.delta_g = self.kin
        self.Delta_op = lambda P: self.kin(P) + c.Delta


def projector_expansion(c: CouplingSet, max_order: int = 1, k_L: float = 0.0, mass: float = 1.0,
                        perp_kinetic: float = 0.0, operator_detuning: bool = False,
                        rwa: bool = False) -> list[ProjectorTerm]:
    """Terms Pi_0 ... Pi_max_order of the perturbative Bloch-equation solution.

    Pi_0 = -Delta^{-1} Omega^dagger and
    Pi_{k+1} = Delta^{-1} Pi_k delta(P) + Delta^{-1} sum_{j<k} Pi_{k-j-1} Omega Pi_j.

    By default the kinetic energy is dropped from both Delta(P) and delta(P),
    so Delta^{-1} is the scalar 1/Delta and Pi_k scales exactly as
    Delta^{-(k+1)}.  ``operator_detuning=True`` keeps the
    full inverse 1/(Delta + P^2/(2 M hbar)) acting from the left.
    """
    _check_delta(c)
    if max_order > 3:
        raise ValueError("max_order is limited to 3")
    m = _Model(c, k_L, mass, perp_kinetic, rwa)
    hk = m.hk
    if not operator_detuning:
        # the common kinetic shift cancels between Delta(P) and delta(P)
        m.delta_e = _const(c.delta)
        m.delta_g = _const(0.0)
    if operator_detuning:
        inv = lambda A: _scale(A, lambda P: 1.0 / m.Delta_op(P), True, hk)
    else:
        inv = lambda A: {k: (lambda P, f=f: f(P) / c.Delta) for k, f in A.items()}
    dag_e, dag_g = _dagger(m.Om_e, hk), _dagger(m.Om_g, hk)
    terms = [ProjectorTerm(0, inv({k: (lambda P, f=f: -f(P)) for k, f in dag_e.items()}),
                           inv({k: (lambda P, f=f: -f(P)) for k, f in dag_g.items()}))]
    for k in range(max_order):
        pk = terms[k]
        e = _scale(pk.e, m.delta_e, False, hk)
        g = _scale(pk.g, m.delta_g, False, hk)
        for j in range(k):
            left = terms[k - j - 1]
            s = _add(_mul(left.e, m.Om_e, hk), _mul(left.g, m.Om_g, hk))
            e = _add(e, _mul(s, terms[j].e, hk))
            g = _add(g, _mul(s, terms[j].g, hk))
        terms.append(ProjectorTerm(k + 1, inv(e), inv(g)))
    return terms


def _grid_for(psi: GaussianWavepacket, shifts, hk: float, n_grid: int):
    dp = psi.dp[2]
    lo = psi.P0[2] + min(shifts) * hk - 10 * dp
    hi = psi.P0[2] + max(shifts) * hk + 10 * dp
    n = int(n_grid * max(1, np.ceil((hi - lo) / (20 * dp))))
    return np.linspace(lo, hi, min(n, 200001))


def _apply_row(row, psi: GaussianWavepacket, internal, hk: float, n_grid: int = 801):
    """Apply a 1x2 operator row to (c_e, c_g) x psi; returns {m: (p, amplitude)}."""
    ce, cg = internal
    keys = set(row[0]) | set(row[1])
    shifts = [n for n, _ in keys] or [0]
    p = _grid_for(psi, shifts, hk, n_grid)
    out = {}
    for comp, coef in ((row[0], ce), (row[1], cg)):
        if coef == 0:
            continue
        for (n, mm), f in comp.items():
            q = p - n * hk
            amp = coef * f(q) * psi.amplitude_1d(q)
            out[mm] = out.get(mm, 0) + amp
    return {mm: (p, a) for mm, a in out.items()}


def _state_norm(state: dict, psi, hk) -> float:
    total = 0.0
    for p, a in state.values():
        total += trapezoid(np.abs(a) ** 2, p)
    return float(np.sqrt(total))


def bloch_residual(c: CouplingSet, terms: list[ProjectorTerm], psi: GaussianWavepacket, internal=(0.0, 1.0),
                   k_L: float = 0.0, mass: float = 1.0, perp_kinetic: float = 0.0, rwa: bool = False) -> float:
    """Cycle-averaged norm of R = Delta(P) Pi + Omega^dagger - Pi delta(P) - Pi Omega Pi on a test state.

    The residual always uses the full operator Delta(P).
    """
    m = _Model(c, k_L, mass, perp_kinetic, rwa)
    hk = m.hk
    pe, pg = {}, {}
    for t in terms:
        pe, pg = _add(pe, t.e), _add(pg, t.g)
    de, dg = _dagger(m.Om_e, hk), _dagger(m.Om_g, hk)
    s = _add(_mul(pe, m.Om_e, hk), _mul(pg, m.Om_g, hk))
    re = _add(_add(_scale(pe, m.Delta_op, True, hk), de), _scale(pe, m.delta_e, False, hk), -1.0)
    rg = _add(_add(_scale(pg, m.Delta_op, True, hk), dg), _scale(pg, m.delta_g, False, hk), -1.0)
    re = _add(re, _mul(s, pe, hk), -1.0)
    rg = _add(rg, _mul(s, pg, hk), -1.0)
    return _state_norm(_apply_row((re, rg), psi, internal, hk), psi, hk)


def omega_dagger_norm(c: CouplingSet, psi: GaussianWavepacket, internal=(0.0, 1.0), k_L: float = 0.0,
                      rwa: bool = False) -> float:
    m = _Model(c, k_L, 1.0, 0.0, rwa)
    row = (_dagger(m.Om_e, m.hk), _dagger(m.Om_g, m.hk))
    return _state_norm(_apply_row(row, psi, internal, m.hk), psi, m.hk)


@dataclass(frozen=True)
class EffectiveTwoLevel:
    """Plane-wave effective two-level system in the (e, g) basis."""

    Omega: complex
    omega_AC_plus: float
    omega_AC_minus: float
    delta: float
    H: np.ndarray | None = None

    @property
    def gamma(self) -> float:
        return self.delta + self.omega_AC_minus

    @property
    def gamma_bar_offset(self) -> float:
        return self.delta - self.omega_AC_plus

    @property
    def Omega_eff(self) -> float:
        return float(np.hypot(abs(self.Omega), self.gamma))

    @classmethod
    def from_values(cls, Omega: complex, gamma: float, omega_AC_plus: float = 0.0) -> "EffectiveTwoLevel":
        """Convenience constructor with omega_AC_minus = 0 and delta = gamma."""
        return cls(complex(Omega), omega_AC_plus, 0.0, gamma)


def effective_hamiltonian(c: CouplingSet, rwa_before_elimination: bool = False) -> EffectiveTwoLevel:
    """delta(P) - Omega Omega^dagger / Delta, cycle-averaged after elimination.

    The product Omega Omega^dagger is formed from the full Omega-vector
    (counter-rotating amplitudes included) and only then are terms with
    m != 0 dropped.  ``rwa_before_elimination=True`` drops them first,
    which halves the Stark shifts of a retro-reflected pair.

    Raises
    ------
    ValueError
        If position-dependent (n != 0) terms survive, i.e. the set is not
        Doppler-free; use :mod:`e1m1clock.pulses` for that case.
    """
    _check_delta(c)
    ce, cg = c.omega_vector_terms(rwa=rwa_before_elimination)
    comps = (ce, cg)
    M = np.zeros((2, 2), dtype=complex)
    scale = max([abs(v) for d in comps for v in d.values()] + [0.0]) ** 2
    for i in range(2):
        for j in range(2):
            prod: dict = {}
            for (n1, m1), v1 in comps[i].items():
                for (n2, m2), v2 in comps[j].items():
                    key = (n1 - n2, m1 - m2)
                    prod[key] = prod.get(key, 0) + v1 * np.conj(v2)
            for (n, mm), v in prod.items():
                if mm != 0:
                    continue
                if n == 0:
                    M[i, j] += v
                elif abs(v) > 1e-12 * scale:
                    raise ValueError("coupling set is not Doppler-free: position-dependent two-photon terms "
                                     "remain; use the position-dependent path in e1m1clock.pulses")
    H = np.diag([c.delta, 0.0]).astype(complex) - M / c.Delta
    Omega = 2.0 * H[0, 1]
    shift_e, shift_g = -H[0, 0].real + c.delta, -H[1, 1].real
    return EffectiveTwoLevel(complex(Omega), shift_g + shift_e, shift_g - shift_e, c.delta, H)


def rabi_populations(t, e2l: EffectiveTwoLevel, initial: str = "g"):
    """(P_e(t), P_g(t)) for the effective two-level system."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    W = e2l.Omega_eff
    if W == 0:
        s2 = np.zeros_like(t)
        ratio_o = ratio_g = 0.0
    else:
        s2 = np.sin(W * t / 2) ** 2
        ratio_o = abs(e2l.Omega) ** 2 / W ** 2
        ratio_g = e2l.gamma ** 2 / W ** 2
    transfer = ratio_o * s2
    stay = np.cos(W * t / 2) ** 2 + ratio_g * s2
    if initial == "g":
        return transfer, stay
    if initial == "e":
        return stay, transfer
    raise ValueError("initial must be 'g' or 'e'")


def rabi_table(t, e2l: EffectiveTwoLevel, initial: str = "g", time_scale: float = 1.0):
    """Rows (t [s], P_g, P_e, gamma, Omega_eff); ``time_scale`` converts internal time to s."""
    Pe, Pg = rabi_populations(t, e2l, initial)
    t = np.asarray(t, dtype=float)
    return [(ti * time_scale, pg, pe, e2l.gamma, e2l.Omega_eff) for ti, pg, pe in zip(t, Pg, Pe)]
