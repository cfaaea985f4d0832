"""
Canonical unitaries on the algebra spanned by {1, Z, P, P^2} and their
closed-form Gaussian expectation values.

Every operator is stored in the normal-ordered form

    U = exp(i theta) exp(i b.Z/hbar) exp(-i c.P/hbar) exp(-i a P^2/hbar)

with a momentum kick ``b`` (3-vector), a position shift ``c`` (3-vector)
and an isotropic dispersion coefficient ``a``.  Acting on a momentum-space
amplitude,

    (U psi)(p) = exp(i theta) exp(-i c.(p-b)/hbar) exp(-i a |p-b|^2/hbar) psi(p-b),

so composition, inversion and Gaussian expectation values all have exact
closed forms.  The global phase is kept as a ledger of labelled
contributions, which lets branch-pair phase differences be formed term by
term before summation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "CanonicalUnitary",
    "WeightedBranch",
    "PairOverlap",
    "OverlapResult",
    "NotRepresentableError",
    "identity",
    "kick",
    "translation",
    "dispersion",
    "global_phase",
    "displacement",
    "compose",
    "compose_all",
    "free_fall_segment",
    "log_expectation",
    "expectation",
    "phase_difference",
    "gaussian_overlap",
    "exit_signal",
    "apply_to_momentum",
]

BCH_LABEL = "bch"


class NotRepresentableError(ValueError):
    """Raised when an operator needs generators outside {1, Z, P, P^2}.

    Quadratic position terms (Z^2) and general squeezing are out of reach of
    the closed algebra; use :mod:`e1m1clock.gridoracle` for those.
    """


def _vec(x) -> np.ndarray:
    v = np.zeros(3) if x is None else np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = np.array([0.0, 0.0, float(v)])
    if v.shape != (3,):
        raise ValueError(f"expected a scalar (Z component) or a 3-vector, got shape {v.shape}")
    v = v.copy()
    v.setflags(write=False)
    return v


def _merge(*ledgers: Mapping[str, float], signs: Sequence[float] | None = None) -> dict:
    out: dict[str, float] = {}
    signs = signs or [1.0] * len(ledgers)
    for s, led in zip(signs, ledgers):
        for k, v in led.items():
            out[k] = out.get(k, 0.0) + s * v
    return out


@dataclass(frozen=True, eq=False)
class CanonicalUnitary:
    """Element of the group generated by {1, Z, P, P^2}.

    Parameters
    ----------
    b : array_like
        Momentum kick (generator Z).  A scalar is taken as the Z component.
    c : array_like
        Position shift (generator P).
    a : float
        Dispersion coefficient multiplying P^2 (isotropic), units time/mass.
    phases : mapping
        Labelled contributions to the global phase theta [rad].
    hbar : float
        Value of hbar in the unit system in use.
    """

    b: np.ndarray = field(default_factory=lambda: _vec(None))
    c: np.ndarray = field(default_factory=lambda: _vec(None))
    a: float = 0.0
    phases: Mapping[str, float] = field(default_factory=dict)
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "b", _vec(self.b))
        object.__setattr__(self, "c", _vec(self.c))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "phases", {k: float(v) for k, v in dict(self.phases).items()})

    @property
    def theta(self) -> float:
        return float(sum(self.phases.values()))

    def __matmul__(self, other: "CanonicalUnitary") -> "CanonicalUnitary":
        return compose(self, other)

    def dagger(self) -> "CanonicalUnitary":
        """Inverse (= adjoint) operator."""
        hb = self.hbar
        c_inv = 2.0 * self.a * self.b - self.c
        # phase: -theta + (a|b|^2 - c.b)/hbar, ledger negated, cross term under BCH_LABEL
        led = {k: -v for k, v in self.phases.items()}
        cross = (self.a * float(self.b @ self.b) - float(self.c @ self.b)) / hb
        led[BCH_LABEL] = led.get(BCH_LABEL, 0.0) + cross
        return CanonicalUnitary(-self.b, c_inv, -self.a, led, hb)

    def with_phase(self, label: str, value: float) -> "CanonicalUnitary":
        led = dict(self.phases)
        led[label] = led.get(label, 0.0) + float(value)
        return CanonicalUnitary(self.b, self.c, self.a, led, self.hbar)

    def params(self) -> tuple[np.ndarray, np.ndarray, float, float]:
        return np.array(self.b), np.array(self.c), self.a, self.theta

    def allclose(self, other: "CanonicalUnitary", atol: float = 1e-12, phase_atol: float | None = None) -> bool:
        phase_atol = atol if phase_atol is None else phase_atol
        dphi = np.angle(np.exp(1j * (self.theta - other.theta)))
        return bool(
            np.allclose(self.b, other.b, atol=atol)
            and np.allclose(self.c, other.c, atol=atol)
            and abs(self.a - other.a) <= atol
            and abs(dphi) <= phase_atol
        )

    def __repr__(self) -> str:
        return (f"CanonicalUnitary(b={self.b.tolist()}, c={self.c.tolist()}, "
                f"a={self.a:.6g}, theta={self.theta:.6g})")


def identity(hbar: float = 1.0) -> CanonicalUnitary:
    return CanonicalUnitary(hbar=hbar)


def kick(b, hbar: float = 1.0, phase: float = 0.0, label: str = "kick") -> CanonicalUnitary:
    """Momentum kick exp(i b.Z/hbar), optionally with a constant laser phase."""
    return CanonicalUnitary(b=b, phases={label: phase} if phase else {}, hbar=hbar)


def translation(c, hbar: float = 1.0) -> CanonicalUnitary:
    """Position translation exp(-i c.P/hbar), i.e. R -> R + c."""
    return CanonicalUnitary(c=c, hbar=hbar)


def dispersion(a: float, hbar: float = 1.0) -> CanonicalUnitary:
    """Free-particle dispersion exp(-i a P^2/hbar); a = t/(2M) for time t."""
    return CanonicalUnitary(a=a, hbar=hbar)


def global_phase(theta: float, label: str = "phase", hbar: float = 1.0) -> CanonicalUnitary:
    return CanonicalUnitary(phases={label: theta}, hbar=hbar)


def displacement(z, p, hbar: float = 1.0, label: str = "frame") -> CanonicalUnitary:
    """Weyl displacement exp(-i (z.P - p.Z)/hbar): R -> R + z, P -> P + p."""
    z, p = _vec(z), _vec(p)
    return CanonicalUnitary(b=p, c=z, phases={label: -float(p @ z) / (2.0 * hbar)}, hbar=hbar)


def compose(u2: CanonicalUnitary, u1: CanonicalUnitary) -> CanonicalUnitary:
    """Exact product ``u2 @ u1`` (u1 acts first)."""
    if u1.hbar != u2.hbar:
        raise ValueError("cannot compose operators defined with different hbar")
    hb = u1.hbar
    b = u1.b + u2.b
    a = u1.a + u2.a
    c = u1.c + u2.c + 2.0 * u2.a * u1.b
    cross = -(float(u2.c @ u1.b) + u2.a * float(u1.b @ u1.b)) / hb
    led = _merge(u1.phases, u2.phases)
    if cross:
        led[BCH_LABEL] = led.get(BCH_LABEL, 0.0) + cross
    return CanonicalUnitary(b, c, a, led, hb)


def compose_all(ops: Iterable[CanonicalUnitary], hbar: float = 1.0) -> CanonicalUnitary:
    """Compose in time order: the first element acts first."""
    out = identity(hbar)
    for op in ops:
        out = compose(op, out)
    return out


def free_fall_segment(mass: float, duration: float, g: float = 0.0, hbar: float = 1.0,
                      clock_phase: float = 0.0, label: str = "segment") -> CanonicalUnitary:
    """Evolution under P^2/(2m) + m g Z for ``duration`` in canonical form.

    Parameters
    ----------
    mass : float
        State-dependent mass M_n.
    duration : float
        Segment length; must be non-negative.
    g : float
        Gravitational acceleration along -Z.
    clock_phase : float
        Optional internal-energy phase rate (rad/time) booked under
        ``"clock"``; used when the state-dependent rest energy is kept.

    Notes
    -----
    With force F = m g along -Z the exact decomposition is
    b = -F t, c = -F t^2/(2m), a = t/(2m), theta = -F^2 t^3/(6 m hbar).
    """
    if duration < 0:
        raise ValueError("segment duration must be non-negative")
    t = float(duration)
    force = mass * g
    led = {f"{label}:gravity": -force ** 2 * t ** 3 / (6.0 * mass * hbar)} if g else {}
    if clock_phase:
        led["clock"] = -clock_phase * t
    return CanonicalUnitary(b=[0.0, 0.0, -force * t], c=[0.0, 0.0, -force * t ** 2 / (2.0 * mass)],
                            a=t / (2.0 * mass), phases=led, hbar=hbar)


def apply_to_momentum(u: CanonicalUnitary, p) -> tuple[np.ndarray, complex]:
    """Action on a momentum eigenstate |p>: returns (p + b, phase factor)."""
    p = _vec(p)
    hb = u.hbar
    ph = u.theta - (float(u.c @ p) + u.a * float(p @ p)) / hb
    return p + u.b, complex(np.exp(1j * ph))


def _log_expectation_axes(u: CanonicalUnitary, psi) -> np.ndarray:
    """Per-axis log of the Gaussian expectation value, without theta."""
    hb = u.hbar
    s = np.asarray(psi.sigma, dtype=float)
    p0 = np.asarray(psi.P0, dtype=float)
    r0 = np.asarray(psi.R0, dtype=float)
    b, c, a = u.b, u.c, u.a
    A = 1.0 / (2.0 * s) + 1j * a / hb
    m = p0 - b / 2.0
    B = m / s - 1j * c / hb
    out = (-0.5 * np.log(2.0 * np.pi * s) + 0.5 * np.log(np.pi / A)
           + B ** 2 / (4.0 * A) - m ** 2 / (2.0 * s) - b ** 2 / (8.0 * s) + 1j * r0 * b / hb)
    return out


def log_expectation(u: CanonicalUnitary, psi, include_theta: bool = True) -> complex:
    """log <psi|U|psi> for a Gaussian wavepacket in closed form."""
    val = complex(np.sum(_log_expectation_axes(u, psi)))
    if include_theta:
        val += 1j * u.theta
    return val


def expectation(u: CanonicalUnitary, psi) -> complex:
    return complex(np.exp(log_expectation(u, psi)))


def phase_difference(u_l: CanonicalUnitary, u_m: CanonicalUnitary) -> float:
    """theta_l - theta_m formed label by label before summation."""
    labels = set(u_l.phases) | set(u_m.phases)
    diffs = sorted((u_l.phases.get(k, 0.0) - u_m.phases.get(k, 0.0) for k in labels), key=abs)
    return float(sum(diffs))


@dataclass(frozen=True)
class WeightedBranch:
    """A path through the interferometer: complex weight times a canonical unitary."""

    weight: complex
    op: CanonicalUnitary
    label: str = ""

    def then(self, op: CanonicalUnitary, weight: complex = 1.0, label: str = "") -> "WeightedBranch":
        lab = f"{self.label}>{label}" if self.label and label else (self.label or label)
        return WeightedBranch(self.weight * weight, compose(op, self.op), lab)


def _strip(u: CanonicalUnitary) -> CanonicalUnitary:
    return CanonicalUnitary(u.b, u.c, u.a, {}, u.hbar)


@dataclass(frozen=True)
class PairOverlap:
    """<psi0| U_m^dagger U_l |psi0> for one ordered branch pair (l, m)."""

    l: int
    m: int
    amplitude: complex
    visibility: float
    phase: float
    label_l: str = ""
    label_m: str = ""


@dataclass(frozen=True)
class OverlapResult:
    pairs: tuple[PairOverlap, ...]

    @property
    def total(self) -> complex:
        return complex(sum(p.amplitude for p in self.pairs))

    def pair(self, l: int, m: int) -> PairOverlap:
        for p in self.pairs:
            if p.l == l and p.m == m:
                return p
        raise KeyError((l, m))


def _pair(bl: WeightedBranch, bm: WeightedBranch, psi, l: int, m: int) -> PairOverlap:
    core = compose(_strip(bm.op).dagger(), _strip(bl.op))
    logv = log_expectation(core, psi, include_theta=True)
    w = np.conj(bm.weight) * bl.weight
    dphi_ledger = phase_difference(bl.op, bm.op)
    log_total = logv + np.log(complex(w)) + 1j * dphi_ledger if w != 0 else -np.inf
    if w == 0:
        return PairOverlap(l, m, 0j, 0.0, 0.0, bl.label, bm.label)
    vis = float(np.exp(log_total.real))
    phase = float(np.angle(np.exp(1j * log_total.imag)))
    return PairOverlap(l, m, complex(np.exp(log_total)), vis, phase, bl.label, bm.label)


def gaussian_overlap(branches_l: Sequence[WeightedBranch], branches_u: Sequence[WeightedBranch] | None,
                     psi0) -> OverlapResult:
    """All ordered pair amplitudes between two branch lists.

    The amplitude for (l, m) is conj(w_m) w_l <psi0|U_m^dagger U_l|psi0>, so
    the visibility is its modulus and the phase its argument.  If
    ``branches_u`` is None the pairs are taken within ``branches_l``
    (including the diagonal), which is what the multi-path exit signal needs.
    """
    pairs = []
    if branches_u is None:
        br = list(branches_l)
        for i, bl in enumerate(br):
            for j, bm in enumerate(br):
                pairs.append(_pair(bl, bm, psi0, i, j))
    else:
        for i, bl in enumerate(branches_l):
            for j, bm in enumerate(branches_u):
                pairs.append(_pair(bl, bm, psi0, i, j))
    return OverlapResult(tuple(pairs))


def exit_signal(pairs: OverlapResult | Sequence[PairOverlap]) -> float:
    """Exit-port intensity from a full set of ordered branch pairs.

    Sums V_ll over the diagonal and V_lm cos(dphi_lm) over l != m, which is
    <psi0|(sum_l U_l)^dagger (sum_l U_l)|psi0>.  The returned value is the
    port probability; the conventional factor of 2 of the symmetric
    two-term form is already accounted for by summing both (l, m) and (m, l).
    """
    ps = pairs.pairs if isinstance(pairs, OverlapResult) else tuple(pairs)
    total = 0.0
    for p in ps:
        total += p.visibility * (1.0 if p.l == p.m else np.cos(p.phase))
    return float(total)
