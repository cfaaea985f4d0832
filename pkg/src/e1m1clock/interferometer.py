"""
Scheme A (clock initialized in superposition between two Bragg-separated
branches) and scheme B (internal-state flip in the middle segment of a
symmetric double-diffraction geometry).

Everything lives in the lab frame with gravity along -Z.  Free-fall
segments use the state-dependent masses M_g, M_e; E1-M1 pulses use the
mean mass.  Bragg pulses are ideal kicks exp(i k_p Z)/sqrt(2); paths that
leave the interferometer are dropped, which is where the 1/32 prefactor of
the scheme A intensities comes from.

Phase convention: for branches l (lower) and u (upper) the pair amplitude
is <psi0|U_u^dagger U_l|psi0> = |w_u w_l| V exp(i dphi).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import phasespace as ps
from .beam import PulseCoefficients
from .core import AtomSpecies, GaussianWavepacket, GravityFrame
from .pulses import generalized_pulse

__all__ = [
    "TimingError",
    "SchemeASequence",
    "SchemeBSequence",
    "PortResult",
    "InterferenceResult",
    "bragg",
    "build_scheme_a",
    "scheme_a_observables",
    "scheme_a_reference",
    "visibility_e_reference",
    "double_differential",
    "build_scheme_b",
    "scheme_b_observables",
    "scheme_b_reference",
    "exit_port_intensity",
    "phase_roundoff_floor",
    "build_two_pulse",
    "two_pulse_intensities",
    "richardson_first_order",
    "richardson_ratio",
]


class TimingError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeASequence:
    """Pulse times of scheme A.

    Bragg pulses at T0, T1 (upper branch) and T3, T4 (lower branch), the
    E1-M1 pi/2 pulse on [T2, T2 + t_pi_half].  Closure needs
    T1 - T0 = T4 - T3 = deltaT.  ``tau`` is the clock-initialization shift
    of the second run used by :func:`double_differential`.
    """

    T0: float
    T1: float
    T2: float
    T3: float
    T4: float
    deltaT: float
    t_pi_half: float
    k_p: float
    tau: float = 0.0
    rtol: float = 1e-12

    def __post_init__(self):
        T0, T1, T2, T3, T4 = self.T0, self.T1, self.T2, self.T3, self.T4
        if not (T0 < T1 < T2 and T2 + self.t_pi_half < T3 < T4):
            raise TimingError("need T0 < T1 < T2 < T2 + t_pi_half < T3 < T4")
        if self.t_pi_half < 0 or self.deltaT <= 0:
            raise TimingError("t_pi_half must be >= 0 and deltaT > 0")
        scale = max(abs(T4), 1.0)
        for name, d in (("T1 - T0", T1 - T0), ("T4 - T3", T4 - T3)):
            if abs(d - self.deltaT) > self.rtol * scale:
                raise TimingError(f"{name} = {d} differs from deltaT = {self.deltaT}")
        if self.tau and not T2 + self.tau + self.t_pi_half < T3:
            raise TimingError("shifted clock initialization T2 + tau overlaps T3")

    @classmethod
    def from_layout(cls, deltaT: float, T2: float, T3: float, t_pi_half: float, k_p: float,
                    tau: float = 0.0, T0: float = 0.0) -> "SchemeASequence":
        return cls(T0, T0 + deltaT, T2, T3, T3 + deltaT, deltaT, t_pi_half, k_p, tau)

    def shifted(self, tau: float | None = None) -> "SchemeASequence":
        """Second run: clock initialized at T2 + tau."""
        tau = self.tau if tau is None else tau
        return replace(self, T2=self.T2 + tau, tau=0.0)


@dataclass(frozen=True)
class SchemeBSequence:
    """Symmetric double-diffraction sequence of scheme B.

    Branches are launched with +/- hbar k_p at T0 and stopped at
    T1 = T0 + deltaT.  While the branches are at rest relative to each other
    two pi pulses flip the internal state: the first starts at
    T2 = T1 + pulse_gap, the second ends at T4 - pulse_gap, i.e. starts at
    T3 = T4 - pulse_gap - t_pi.  The branches are relaunched towards each
    other at T4 = T1 + T and recombined at T5 = T4 + deltaT.

    The symmetry enforced is T2 - T1 = T4 - (T3 + t_pi).  For t_pi -> 0 and
    adjacent pulses this is T3 - T2 = T4 - T1 = T; for finite t_pi the
    clock time T3 - T2 = T - 2 pulse_gap - t_pi is shorter than T.
    """

    T: float
    deltaT: float
    t_pi: float
    k_p: float
    initial_state: str = "g"
    pulse_gap: float = 0.0
    T0: float = 0.0

    def __post_init__(self):
        if self.initial_state not in ("g", "e"):
            raise ValueError("initial_state must be 'g' or 'e'")
        if self.deltaT <= 0 or self.t_pi < 0 or self.pulse_gap < 0:
            raise TimingError("deltaT > 0, t_pi >= 0 and pulse_gap >= 0 required")
        if 2 * (self.pulse_gap + self.t_pi) > self.T:
            raise TimingError("both pi pulses must fit between the stop at T1 and the relaunch at T4")

    @property
    def times(self) -> dict:
        T1 = self.T0 + self.deltaT
        T4 = T1 + self.T
        return {"T0": self.T0, "T1": T1, "T2": T1 + self.pulse_gap, "T3": T4 - self.pulse_gap - self.t_pi,
                "T4": T4, "T5": T4 + self.deltaT}

    @property
    def clock_time(self) -> float:
        """T3 - T2, the time between the two pulse starts."""
        return self.T - 2 * self.pulse_gap - self.t_pi

    @classmethod
    def from_times(cls, T1: float, T2: float, T3: float, T4: float, t_pi: float, k_p: float,
                   initial_state: str = "g", T0: float = 0.0, rtol: float = 1e-12) -> "SchemeBSequence":
        """Build from explicit times, enforcing T2 - T1 = T4 - (T3 + t_pi)."""
        if abs((T2 - T1) - (T4 - T3 - t_pi)) > rtol * max(abs(T4), 1.0):
            raise TimingError("scheme B needs symmetric pulse placement: T2 - T1 = T4 - (T3 + t_pi)")
        if not T0 < T1 <= T2 <= T3 - t_pi or T3 + t_pi > T4:
            raise TimingError("need T0 < T1 <= T2, T2 + t_pi <= T3 and T3 + t_pi <= T4")
        return cls(T4 - T1, T1 - T0, t_pi, k_p, initial_state, T2 - T1, T0)

    def with_state(self, state: str) -> "SchemeBSequence":
        return replace(self, initial_state=state)


@dataclass(frozen=True)
class PortResult:
    """One exit port: intensity, fringe contrast and phase, pair table."""

    port: str
    I: float
    V: float
    delta_phi: float
    pairs: ps.OverlapResult
    direct: float

    def pair_table(self):
        return [(p.l, p.m, p.label_l, p.label_m, p.visibility, p.phase) for p in self.pairs.pairs]


@dataclass(frozen=True)
class InterferenceResult:
    ports: dict
    meta: dict = field(default_factory=dict)

    def __getitem__(self, port: str) -> PortResult:
        return self.ports[port]


def exit_port_intensity(port: str, branches, psi0: GaussianWavepacket) -> PortResult:
    """Exit-port intensity of a list of WeightedBranch objects.

    I = D + 2 Re S with D the sum of direct terms and S the sum of pair
    amplitudes for l < m; V = 2|S|/D and dphi = arg S.  For two branches
    this is I = D (1 + V cos dphi), i.e. the two-path signal.
    """
    branches = list(branches)
    pairs = ps.gaussian_overlap(branches, None, psi0)
    D = sum(p.amplitude.real for p in pairs.pairs if p.l == p.m)
    S = sum(p.amplitude for p in pairs.pairs if p.l < p.m)
    if len(branches) == 2:
        # use the ledger-resolved pair phase rather than arg of the summed amplitude
        p01 = pairs.pair(0, 1)
        w = abs(branches[0].weight * branches[1].weight)
        V = p01.visibility / w if w else 0.0
        dphi = p01.phase
    else:
        V = 2 * abs(S) / D if D else 0.0
        dphi = float(np.angle(S)) if S else 0.0
    return PortResult(port, ps.exit_signal(pairs), float(V), float(dphi), pairs, float(D))


def phase_roundoff_floor(branches, psi0: GaussianWavepacket) -> float:
    """Rough double-precision floor on a pair phase built from these branches [rad].

    Pair phases are differences of terms as large as |theta|, |b.c|/hbar
    and |a| b^2/hbar; their rounding error is about machine epsilon times
    the largest such term.
    """
    big = 0.0
    for br in branches:
        op = br.op
        hb = op.hbar
        terms = [sum(abs(v) for v in op.phases.values()), abs(np.dot(op.b, op.c)) / hb,
                 abs(op.a) * np.dot(op.b, op.b) / hb, abs(np.dot(op.b, psi0.R0)) / hb,
                 abs(np.dot(op.c, psi0.P0)) / hb]
        big = max(big, *terms)
    return float(np.finfo(float).eps * big)


def bragg(k_p: float, hbar: float, sign: int = 1) -> ps.CanonicalUnitary:
    return ps.kick([0, 0, sign * hbar * k_p], hbar=hbar)


def _seg(species: AtomSpecies, state: str, t0: float, t1: float, gravity: GravityFrame):
    if t1 < t0 - 1e-15 * max(1.0, abs(t1)):
        raise TimingError(f"negative segment [{t0}, {t1}]")
    return ps.free_fall_segment(species.mass(state), max(t1 - t0, 0.0), gravity.g, species.hbar,
                                label=f"seg:{state}:{t0:.17g}:{t1:.17g}")


def _check_coeffs(coeffs: PulseCoefficients, species: AtomSpecies):
    if not np.isclose(coeffs.M, species.M, rtol=1e-12) or coeffs.hbar != species.hbar:
        raise ValueError("pulse coefficients and species disagree on M or hbar")


def _chain(items, hbar):
    """Compose (weight, op, label) items in time order into one WeightedBranch."""
    w = 1.0 + 0j
    ops, labels = [], []
    for weight, op, label in items:
        w *= weight
        ops.append(op)
        if label:
            labels.append(label)
    return ps.WeightedBranch(w, ps.compose_all(ops, hbar), ">".join(labels))


def build_scheme_a(seq: SchemeASequence, species: AtomSpecies, gravity: GravityFrame,
                   coeffs: PulseCoefficients, include_splitting: bool = False,
                   keep_translation: bool = False) -> dict:
    """Branch lists per exit port: {"g": [...], "e": [...]}, lower branches first.

    With splitting disabled each port holds exactly two branches (lower,
    upper) of weight magnitude 1/(4 sqrt 2) each, i.e. U^dagger U = 1/32.
    """
    _check_coeffs(coeffs, species)
    hb = species.hbar
    r2 = 1 / np.sqrt(2)
    pulse = generalized_pulse("pi_half", coeffs, include_splitting, keep_translation, gravity, seq.T2)
    t_end = seq.T2 + pulse.t_pulse
    if not np.isclose(pulse.t_pulse, seq.t_pi_half, rtol=1e-9, atol=0):
        raise TimingError(f"t_pi_half = {seq.t_pi_half} but the pulse lasts pi/(2 Omega0) = {pulse.t_pulse}")
    ports = {}
    for port in ("g", "e"):
        lower, upper = [], []
        for cell in pulse.cell(port, "g"):
            lower.append(_chain([
                (1.0, _seg(species, "g", seq.T0, seq.T2, gravity), ""),
                (cell.weight, cell.op, cell.label),
                (1.0, _seg(species, port, t_end, seq.T3, gravity), ""),
                (r2, bragg(seq.k_p, hb, +1), "bragg+T3"),
                (1.0, _seg(species, port, seq.T3, seq.T4, gravity), ""),
                (r2, bragg(seq.k_p, hb, -1), "bragg-T4"),
            ], hb))
            upper.append(_chain([
                (r2, bragg(seq.k_p, hb, +1), "bragg+T0"),
                (1.0, _seg(species, "g", seq.T0, seq.T1, gravity), ""),
                (r2, bragg(seq.k_p, hb, -1), "bragg-T1"),
                (1.0, _seg(species, "g", seq.T1, seq.T2, gravity), ""),
                (cell.weight, cell.op, cell.label),
                (1.0, _seg(species, port, t_end, seq.T4, gravity), ""),
            ], hb))
        # the two Bragg pulses each branch passes undiffracted contribute (1/sqrt 2)^2
        lower = [ps.WeightedBranch(b.weight * 0.5, b.op, "l:" + b.label) for b in lower]
        upper = [ps.WeightedBranch(b.weight * 0.5, b.op, "u:" + b.label) for b in upper]
        ports[port] = lower + upper
    return ports


def scheme_a_observables(seq: SchemeASequence, species: AtomSpecies, gravity: GravityFrame,
                         coeffs: PulseCoefficients, psi0: GaussianWavepacket, **kw) -> dict:
    """dphi_g, dphi_e, dphi_minus, V_g, V_e and the port intensities."""
    ports = build_scheme_a(seq, species, gravity, coeffs, **kw)
    res = {p: exit_port_intensity(p, br, psi0) for p, br in ports.items()}
    floor = max(phase_roundoff_floor(br, psi0) for br in ports.values())
    return {
        "dphi_g": res["g"].delta_phi,
        "dphi_e": res["e"].delta_phi,
        "dphi_minus": _wrap(res["g"].delta_phi - res["e"].delta_phi),
        "V_g": res["g"].V,
        "V_e": res["e"].V,
        "I_g": res["g"].I,
        "I_e": res["e"].I,
        "phase_floor": floor,
        "result": InterferenceResult(res, {"scheme": "a"}),
    }


def _wrap(x: float) -> float:
    return float(np.angle(np.exp(1j * x)))


def scheme_a_reference(seq: SchemeASequence, species: AtomSpecies, gravity: GravityFrame, k: float,
                       epsilon: float | None = None) -> dict:
    """First-order-in-epsilon closed forms for scheme A (T0 = 0 convention generalized to T0)."""
    g, kp, dT, t = gravity.g, seq.k_p, seq.deltaT, seq.t_pi_half
    eps = species.epsilon if epsilon is None else epsilon
    hb, M = species.hbar, species.M
    base = 0.5 * g * kp * dT * (seq.T4 + seq.T3 - seq.T1 - seq.T0)
    phig = base + 0.5 * eps * g * kp * t * dT
    phie = (base - hb * k * kp * dT / M
            + eps * (hb * (k + kp) * kp * dT / (2 * M) - 0.5 * g * kp * dT * (t + 2 * seq.T2)))
    return {
        "dphi_g": phig,
        "dphi_e": phie,
        "dphi_minus": phig - phie,
        "V_g": 1.0,
        "double_diff": -eps * g * kp * dT * seq.tau,
    }


def visibility_e_reference(seq: SchemeASequence, species: AtomSpecies, psi0: GaussianWavepacket) -> float:
    """exp(-k_p^2 eps^2 dp_z^2 deltaT^2 / (2 M^2))."""
    return float(np.exp(-(seq.k_p * species.epsilon * psi0.dp[2] * seq.deltaT) ** 2 / (2 * species.M ** 2)))


def double_differential(seq: SchemeASequence, species: AtomSpecies, gravity: GravityFrame,
                        coeffs: PulseCoefficients, psi0: GaussianWavepacket, tau: float | None = None,
                        **kw) -> float:
    """dphi_minus(T2) - dphi_minus(T2 + tau) from two engine runs."""
    tau = seq.tau if tau is None else tau
    if tau == 0:
        return 0.0
    a = scheme_a_observables(replace(seq, tau=0.0), species, gravity, coeffs, psi0, **kw)["dphi_minus"]
    b = scheme_a_observables(seq.shifted(tau), species, gravity, coeffs, psi0, **kw)["dphi_minus"]
    return _wrap(a - b)


def build_scheme_b(seq: SchemeBSequence, species: AtomSpecies, gravity: GravityFrame,
                   coeffs: PulseCoefficients, include_splitting: bool = False,
                   keep_translation: bool = False) -> dict:
    """Branch lists per exit port for one run; the port is the initial state.

    The first branch is launched with -hbar k_p (lower), the second with
    +hbar k_p (upper).
    """
    _check_coeffs(coeffs, species)
    hb = species.hbar
    r2 = 1 / np.sqrt(2)
    tm = seq.times
    s0 = seq.initial_state
    s1 = "e" if s0 == "g" else "g"
    p1 = generalized_pulse("pi", coeffs, include_splitting, keep_translation, gravity, tm["T2"])
    p2 = generalized_pulse("pi", coeffs, include_splitting, keep_translation, gravity, tm["T3"])
    e1, e2 = tm["T2"] + p1.t_pulse, tm["T3"] + p2.t_pulse
    out = []
    for sign, name in ((-1, "l"), (+1, "u")):
        for c1 in p1.cell(s1, s0):
            for c2 in p2.cell(s0, s1):
                out.append(_chain([
                    (r2, bragg(seq.k_p, hb, sign), f"{name}:launch"),
                    (1.0, _seg(species, s0, tm["T0"], tm["T1"], gravity), ""),
                    (r2, bragg(seq.k_p, hb, -sign), "stop"),
                    (1.0, _seg(species, s0, tm["T1"], tm["T2"], gravity), ""),
                    (c1.weight, c1.op, c1.label),
                    (1.0, _seg(species, s1, e1, tm["T3"], gravity), ""),
                    (c2.weight, c2.op, c2.label),
                    (1.0, _seg(species, s0, e2, tm["T4"], gravity), ""),
                    (r2, bragg(seq.k_p, hb, -sign), "relaunch"),
                    (1.0, _seg(species, s0, tm["T4"], tm["T5"], gravity), ""),
                    (r2, bragg(seq.k_p, hb, sign), "recombine"),
                ], hb))
    return {s0: out}


def scheme_b_observables(seq: SchemeBSequence, species: AtomSpecies, gravity: GravityFrame,
                         coeffs: PulseCoefficients, psi0: GaussianWavepacket, **kw) -> dict:
    """Both runs (initial g and e): dphi_g, dphi_e, dphi_plus, dphi_minus, V_g, V_e."""
    res, floor = {}, 0.0
    for s in ("g", "e"):
        ports = build_scheme_b(seq.with_state(s), species, gravity, coeffs, **kw)
        res[s] = exit_port_intensity(s, ports[s], psi0)
        floor = max(floor, phase_roundoff_floor(ports[s], psi0))
    return {
        "dphi_g": res["g"].delta_phi,
        "dphi_e": res["e"].delta_phi,
        "dphi_plus": _wrap(res["g"].delta_phi + res["e"].delta_phi),
        "dphi_minus": _wrap(res["g"].delta_phi - res["e"].delta_phi),
        "V_g": res["g"].V,
        "V_e": res["e"].V,
        "I_g": res["g"].I,
        "I_e": res["e"].I,
        "phase_floor": floor,
        "result": InterferenceResult(res, {"scheme": "b"}),
    }


def scheme_b_reference(seq: SchemeBSequence, species: AtomSpecies, gravity: GravityFrame,
                       epsilon: float | None = None) -> dict:
    """First-order closed forms with T = T4 - T1 in the gravity term and T3 - T2 in the epsilon term.

    Both equal T when t_pi -> 0 with adjacent pulses.
    """
    g, kp, dT, T = gravity.g, seq.k_p, seq.deltaT, seq.T
    Tc = seq.clock_time
    eps = species.epsilon if epsilon is None else epsilon
    return {
        "dphi_g": 2 * g * kp * dT * (dT + T + eps * Tc),
        "dphi_e": 2 * g * kp * dT * (dT + T - eps * Tc),
        "dphi_plus": 4 * g * kp * (dT + T) * dT,
        "dphi_minus": 4 * eps * g * kp * Tc * dT,
        "V_g": 1.0,
        "V_e": 1.0,
    }


def build_two_pulse(species: AtomSpecies, coeffs: PulseCoefficients, T_free: float,
                    gravity: GravityFrame | None = None, initial: str = "g", include_splitting: bool = True,
                    keep_translation: bool = True, second_phase: float = 0.0) -> dict:
    """pi/2 - free evolution - pi/2 with every splitting path kept.

    The first pulse starts at t = 0, the second at t_pi/2 + T_free with its
    laser phase advanced by ``second_phase``.  Each
    generalized pulse contributes its T+ and T- branches per cell, so an exit
    port collects up to eight paths.  Returns {port: [WeightedBranch, ...]}.
    """
    _check_coeffs(coeffs, species)
    if T_free < 0:
        raise TimingError("free evolution time must be non-negative")
    hb = species.hbar
    gravity = gravity or GravityFrame(0.0)
    p1 = generalized_pulse("pi_half", coeffs, include_splitting, keep_translation, gravity, 0.0)
    t_p = p1.t_pulse
    c2 = replace(coeffs, Phi0=coeffs.Phi0 + second_phase)
    p2 = generalized_pulse("pi_half", c2, include_splitting, keep_translation, gravity, t_p + T_free)
    ports = {}
    for port in "eg":
        out = []
        for mid in "eg":
            for c1 in p1.cell(mid, initial):
                for c2 in p2.cell(port, mid):
                    out.append(_chain([
                        (c1.weight, c1.op, c1.label),
                        (1.0, _seg(species, mid, t_p, t_p + T_free, gravity), ""),
                        (c2.weight, c2.op, c2.label),
                    ], hb))
        ports[port] = out
    return ports


def two_pulse_intensities(species: AtomSpecies, coeffs: PulseCoefficients, T_free: float,
                          psi0: GaussianWavepacket, **kw) -> dict:
    """Exit-port signals of :func:`build_two_pulse` from the multi-path sum."""
    ports = build_two_pulse(species, coeffs, T_free, **kw)
    return {port: exit_port_intensity(port, br, psi0) for port, br in ports.items()}


def richardson_first_order(f: Callable[[float], float], eps: float, f0: float | None = None) -> float:
    """First-order Taylor value f(0) + eps f'(0) from f(eps), f(eps/2) and f(0).

    4 f(eps/2) - f(eps) - 2 f(0) removes the eps^2 term exactly.
    """
    f0 = f(0.0) if f0 is None else f0
    return 4 * f(eps / 2) - f(eps) - 2 * f0


def richardson_ratio(residual: Callable[[float], float], eps: float) -> float:
    """|r(eps)| / |r(eps/2)|; 4 for a residual that starts at second order."""
    return abs(residual(eps)) / abs(residual(eps / 2))
