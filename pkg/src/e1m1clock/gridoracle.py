"""
Brute-force split-step propagation on 1D momentum/position grids.

This module is the independent check for the analytic engine.  It never
calls the pulse or interferometer builders; it only reads plain numbers
(coupling amplitudes, beam geometry, masses) and integrates the
Schroedinger equation directly.

Conventions
-----------
Position grid z_j = z0 + (j - N/2) dz, FFT-ordered momentum grid
p = 2 pi hbar fftfreq(N, dz).  Amplitudes are stored in position space and
normalized so that sum |psi|^2 dz = 1.  Internal levels are named; the
three-level problem uses ("a", "e", "g"), the two-level one ("e", "g").
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .core import GaussianWavepacket

__all__ = [
    "NyquistError",
    "ConvergenceError",
    "GridMismatchError",
    "Grid1D",
    "MultiLevelField",
    "ConvergenceReport",
    "PropagationResult",
    "gaussian_field",
    "free_evolution",
    "propagate_three_level",
    "propagate_two_level_beam",
    "apply_canonical_on_grid",
    "overlap_numeric",
    "momentum_mean",
    "position_width",
    "snapshot_csv",
]


class NyquistError(ValueError):
    """Momentum grid too coarse for the requested wavepacket and kicks."""


class ConvergenceError(RuntimeError):
    """Observables moved by more than the tolerance under step halving."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid1D:
    """Periodic grid of ``n`` points over ``length`` centred on ``center``."""

    length: float
    n: int
    center: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError("point count must be a power of two >= 8")
        if self.length <= 0:
            raise ValueError("grid length must be positive")

    @property
    def dz(self) -> float:
        return self.length / self.n

    @property
    def z(self) -> np.ndarray:
        return self.center + (np.arange(self.n) - self.n // 2) * self.dz

    @property
    def p(self) -> np.ndarray:
        return 2 * np.pi * self.hbar * np.fft.fftfreq(self.n, self.dz)

    @property
    def p_max(self) -> float:
        return np.pi * self.hbar / self.dz

    def check_nyquist(self, p_width: float, max_kick: float = 0.0, p_mean: float = 0.0):
        need = 4.0 * (p_width + abs(max_kick) + abs(p_mean))
        if self.p_max < need:
            raise NyquistError(f"p_max = {self.p_max:.4g} below 4 x (width + kick) = {need:.4g}; "
                               f"use more points or a shorter grid")

    def same_as(self, other: "Grid1D") -> bool:
        return (self.n == other.n and np.isclose(self.length, other.length, rtol=1e-14)
                and np.isclose(self.center, other.center, rtol=0, atol=1e-14 * self.length)
                and self.hbar == other.hbar)

    def kinetic_phase(self, dt: float, mass: float) -> np.ndarray:
        return np.exp(-1j * self.p ** 2 * dt / (2 * mass * self.hbar))


@dataclass
class MultiLevelField:
    """Complex amplitudes per internal level on a shared grid."""

    grid: Grid1D
    levels: dict

    def __post_init__(self):
        if len(self.levels) not in (2, 3):
            raise ValueError("a field carries two or three internal levels")
        self.levels = {k: np.asarray(v, dtype=complex).copy() for k, v in self.levels.items()}
        for v in self.levels.values():
            if v.shape != (self.grid.n,):
                raise GridMismatchError("level array does not match the grid")

    @property
    def names(self) -> tuple:
        return tuple(self.levels)

    def __getitem__(self, name):
        return self.levels[name]

    def copy(self) -> "MultiLevelField":
        return MultiLevelField(self.grid, {k: v.copy() for k, v in self.levels.items()})

    def populations(self) -> dict:
        dz = self.grid.dz
        return {k: float(np.sum(np.abs(v) ** 2) * dz) for k, v in self.levels.items()}

    def norm(self) -> float:
        return float(sum(self.populations().values()))

    def stack(self) -> np.ndarray:
        return np.stack([self.levels[k] for k in self.names])

    def with_stack(self, arr) -> "MultiLevelField":
        return MultiLevelField(self.grid, dict(zip(self.names, arr)))


@dataclass(frozen=True)
class ConvergenceReport:
    dt: float
    steps: int
    max_change: float
    tolerance: float
    norm_drift: float

    @property
    def converged(self) -> bool:
        return self.max_change <= self.tolerance

    def as_row(self) -> tuple:
        return (self.dt, self.steps, self.max_change, self.tolerance, self.norm_drift, int(self.converged))


@dataclass
class PropagationResult:
    field: MultiLevelField
    times: np.ndarray
    populations: dict
    report: ConvergenceReport | None = None
    extra: dict = field(default_factory=dict)


def gaussian_field(grid: Grid1D, psi: GaussianWavepacket, level: str, names=("e", "g"), axis: int = 2
                   ) -> MultiLevelField:
    """Field with the Gaussian ``psi`` (one axis) in ``level`` and zeros elsewhere."""
    if psi.hbar != grid.hbar:
        raise ValueError("wavepacket and grid use different hbar")
    amp = psi.position_amplitude_1d(grid.z, axis)
    return MultiLevelField(grid, {k: (amp if k == level else np.zeros(grid.n)) for k in names})


def _fft_apply(psi, mult):
    return np.fft.ifft(mult * np.fft.fft(psi))


def momentum_mean(grid: Grid1D, psi) -> float:
    """<P> of one level, normalized to that level's population."""
    w = np.abs(np.fft.fft(psi)) ** 2
    return float(np.sum(grid.p * w) / np.sum(w))


def position_width(grid: Grid1D, psi) -> float:
    w = np.abs(psi) ** 2
    w = w / w.sum()
    m = np.sum(grid.z * w)
    return float(np.sqrt(np.sum((grid.z - m) ** 2 * w)))


def _observables(f: MultiLevelField) -> np.ndarray:
    out = []
    for v in f.levels.values():
        pop = np.sum(np.abs(v) ** 2) * f.grid.dz
        out.append(pop)
        out.append(momentum_mean(f.grid, v) * pop if pop > 1e-14 else 0.0)
    return np.array(out)


# exact pointwise propagators -------------------------------------------------

def _expm_2x2(A, B, C, dt):
    """exp(-i dt [[A, B], [conj B, C]]) for arrays A, C real and B complex."""
    mean = 0.5 * (A + C)
    half = 0.5 * (A - C)
    r = np.sqrt(half ** 2 + np.abs(B) ** 2)
    cs = np.cos(r * dt)
    sn = np.where(r > 0, np.sin(r * dt) / np.where(r > 0, r, 1.0), dt)
    ph = np.exp(-1j * mean * dt)
    u11 = ph * (cs - 1j * sn * half)
    u22 = ph * (cs + 1j * sn * half)
    u12 = ph * (-1j * sn * B)
    u21 = ph * (-1j * sn * np.conj(B))
    return u11, u12, u21, u22


def _expm_herm(H, dt):
    """exp(-i dt H) for a stack (..., n, n) of Hermitian matrices."""
    w, v = np.linalg.eigh(H)
    return np.einsum("...ij,...j,...kj->...ik", v, np.exp(-1j * w * dt), v.conj())


# free evolution -------------------------------------------------------------

def free_evolution(f: MultiLevelField, duration: float, masses: dict | float, g: float = 0.0,
                   rest_phase_rates: dict | None = None, steps: int | None = None) -> MultiLevelField:
    """Evolve each level under P^2/(2 m_n) + m_n g Z, no couplings.

    ``rest_phase_rates`` adds a constant internal-energy phase rate per level.
    Without gravity the step is exact in one FFT pair; with gravity a Strang
    split with ``steps`` steps is used (exact for a linear potential up to
    the periodic wrap).
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    grid = f.grid
    hb = grid.hbar
    if not isinstance(masses, dict):
        masses = {k: float(masses) for k in f.names}
    rates = rest_phase_rates or {}
    out = {}
    for name, psi in f.levels.items():
        m = masses[name]
        if g == 0.0:
            psi = _fft_apply(psi, grid.kinetic_phase(duration, m))
        else:
            n = steps or max(1, int(np.ceil(duration / 0.01)))
            dt = duration / n
            half = grid.kinetic_phase(dt / 2, m)
            pot = np.exp(-1j * m * g * grid.z * dt / hb)
            for _ in range(n):
                psi = _fft_apply(psi, half)
                psi = pot * psi
                psi = _fft_apply(psi, half)
        if name in rates:
            psi = psi * np.exp(-1j * rates[name] * duration)
        out[name] = psi
    return MultiLevelField(grid, out)


# three-level plane-wave problem -----------------------------------------------

def _omega_component(terms: dict, z, k_L, t, omega, chirp_shift):
    """sum over (n, m) of coeff exp(i n k_L (Z - chirp)) exp(2 i m omega t)."""
    out = np.zeros_like(z, dtype=complex)
    for (n, m), v in terms.items():
        out += v * np.exp(1j * n * k_L * (z - chirp_shift)) * np.exp(2j * m * omega * t)
    return out


def _three_level_run(f0, couplings, k_L, mass, t_end, steps, rwa, omega, g, chirp_compensated, n_record):
    grid = f0.grid
    hb = grid.hbar
    ce, cg = couplings.omega_vector_terms(rwa=rwa)
    dt = t_end / steps
    z = grid.z
    psi = f0.stack()  # (a, e, g)
    half = grid.kinetic_phase(dt / 2, mass)
    diag = np.array([couplings.Delta, couplings.delta, 0.0])
    time_dependent = (not rwa) or (g != 0 and not chirp_compensated)
    cache = None
    rec_every = max(1, steps // n_record) if n_record else 0
    times, pops = [0.0], [[np.sum(np.abs(x) ** 2) * grid.dz for x in psi]]
    for i in range(steps):
        t_mid = (i + 0.5) * dt
        psi = np.fft.ifft(half * np.fft.fft(psi, axis=1), axis=1)
        if cache is None or time_dependent:
            shift = 0.0 if (g == 0 or chirp_compensated) else 0.5 * g * t_mid ** 2
            Oe = _omega_component(ce, z, k_L, t_mid, omega, shift)
            Og = _omega_component(cg, z, k_L, t_mid, omega, shift)
            H = np.zeros((grid.n, 3, 3), dtype=complex)
            H[:, 0, 0], H[:, 1, 1], H[:, 2, 2] = diag
            H[:, 1, 0], H[:, 2, 0] = Oe, Og
            H[:, 0, 1], H[:, 0, 2] = np.conj(Oe), np.conj(Og)
            cache = _expm_herm(H, dt)
        psi = np.einsum("zij,jz->iz", cache, psi)
        psi = np.fft.ifft(half * np.fft.fft(psi, axis=1), axis=1)
        if rec_every and ((i + 1) % rec_every == 0 or i + 1 == steps):
            times.append((i + 1) * dt)
            pops.append([np.sum(np.abs(x) ** 2) * grid.dz for x in psi])
    return f0.with_stack(psi), np.array(times), np.array(pops)


def propagate_three_level(f0: MultiLevelField, couplings, t_end: float, steps: int, k_L: float = 0.0,
                          mass: float = 1.0, rwa: bool = True, omega: float = 0.0, g: float = 0.0,
                          chirp_compensated: bool = True, n_record: int = 0, check_convergence: bool = True,
                          tol: float = 1e-6, p_width: float | None = None) -> PropagationResult:
    """Three-level E1-M1 problem with levels (a, e, g) on a 1D grid.

    The Hamiltonian (divided by hbar) is

        [[P^2/2M hbar + Delta, Omega_e^*, Omega_g^*],
         [Omega_e, P^2/2M hbar + delta, 0],
         [Omega_g, 0, P^2/2M hbar]]

    with the Omega-vector components built from ``couplings.omega_vector_terms``.
    ``rwa=True`` drops the terms oscillating at 2 omega; with ``rwa=False``
    the optical frequency ``omega`` must be given and resolved by the step.
    In a freely falling frame (``g`` != 0) the laser phase k_L Z carries
    -k_L g t^2/2 unless the chirp compensates it.

    Strang splitting with an exact 3x3 exponential of the pointwise
    coupling matrix.  With ``check_convergence`` the run is repeated at half
    the step and :class:`ConvergenceError` is raised if populations or
    momentum moments change by more than ``tol``.
    """
    if set(f0.names) != {"a", "e", "g"}:
        raise ValueError("three-level field needs levels a, e, g")
    f0 = MultiLevelField(f0.grid, {k: f0[k] for k in ("a", "e", "g")})
    if not rwa and omega <= 0:
        raise ValueError("rwa=False needs the optical frequency omega")
    if p_width is not None:
        f0.grid.check_nyquist(p_width, abs(k_L) * f0.grid.hbar)
    args = (couplings, k_L, mass, t_end)
    f1, times, pops = _three_level_run(f0, *args, steps, rwa, omega, g, chirp_compensated, n_record)
    report = None
    if check_convergence:
        f2, _, _ = _three_level_run(f0, *args, 2 * steps, rwa, omega, g, chirp_compensated, 0)
        change = float(np.max(np.abs(_observables(f1) - _observables(f2))))
        report = ConvergenceReport(t_end / steps, steps, change, tol, abs(f1.norm() - f0.norm()))
        if not report.converged:
            raise ConvergenceError(f"step halving changed observables by {change:.3g} > {tol:g}")
        f1 = f2
    return PropagationResult(f1, times, {k: pops[:, i] for i, k in enumerate(("a", "e", "g"))}, report)


# two-level Gaussian-beam problem ---------------------------------------------

def beam_fields(z, coeffs, rho2: float = 0.0, expanded: bool = False, include_curvature: bool = False,
                k_L: float = 0.0):
    """Omega(Z), Phi(Z), omega_AC_0(Z), omega_AC_1(Z) for a TEM00 beam.

    Exact: Omega = Omega0 (w0/w)^2 exp(-2 rho^2 w0^2/w^2) with ``rho2`` = rho^2/w0^2,
    Phi = Phi0 + 2 arctan(Z/z_R); Stark shifts scale with the same profile.
    ``expanded`` uses the second-order forms instead.
    """
    c = coeffs
    zz = np.asarray(z, dtype=float) / c.z_R
    if expanded:
        prof = 1.0 - zz ** 2 - 2.0 * rho2
        phase = c.Phi0 + c.k * np.asarray(z, dtype=float)
    else:
        inv_w2 = 1.0 / (1.0 + zz ** 2)
        prof = inv_w2 * np.exp(-2.0 * rho2 * inv_w2)
        phase = c.Phi0 + 2.0 * np.arctan(zz)
        if include_curvature and rho2:
            # curvature phases of the two beams, both referred to w0
            phase = phase - k_L * rho2 * c.w0 ** 2 * zz / (c.z_R * (1.0 + zz ** 2))
    w0_ac = 0.5 * (c.omega_AC_plus0 + c.omega_AC_minus0)
    w1_ac = 0.5 * (c.omega_AC_plus0 - c.omega_AC_minus0)
    return c.Omega0 * prof, phase, w0_ac * prof, w1_ac * prof


def _beam_run(f0, coeffs, t_end, steps, mass, g, rho2, expanded, t0):
    grid = f0.grid
    hb = grid.hbar
    dt = t_end / steps
    e, gg = f0["e"].copy(), f0["g"].copy()
    half = grid.kinetic_phase(dt / 2, mass)
    z = grid.z
    Om, Phi, ac0, ac1 = beam_fields(z, coeffs, rho2, expanded)
    A = coeffs.delta - ac1 + mass * g * z / hb
    C = -ac0 + mass * g * z / hb
    B = 0.5 * Om * np.exp(1j * Phi)
    u11, u12, u21, u22 = _expm_2x2(A, B, C, dt)
    for _ in range(steps):
        e, gg = _fft_apply(e, half), _fft_apply(gg, half)
        e, gg = u11 * e + u12 * gg, u21 * e + u22 * gg
        e, gg = _fft_apply(e, half), _fft_apply(gg, half)
    return MultiLevelField(grid, {"e": e, "g": gg})


def propagate_two_level_beam(f0: MultiLevelField, coeffs, t_end: float, steps: int, mass: float | None = None,
                             g: float = 0.0, rho2: float = 0.0, expanded: bool = False,
                             check_convergence: bool = True, tol: float = 1e-6,
                             p_width: float | None = None) -> PropagationResult:
    """Effective two-level pulse in a Gaussian beam, levels (e, g), lab frame.

    H/hbar = P^2/(2M hbar) + M g Z/hbar
             + [[delta - omega_AC_1(Z), Omega(Z) e^{i Phi(Z)}/2],
                [Omega(Z) e^{-i Phi(Z)}/2, -omega_AC_0(Z)]]

    using only ``coeffs`` for plain numbers (Omega0, Phi0, Stark shifts,
    delta, z_R, w0, M).  The beam waist sits at Z = 0.  ``rho2`` fixes the
    radial coordinate rho^2/w0^2 (separable quasi-3D use).
    """
    if set(f0.names) != {"e", "g"}:
        raise ValueError("two-level field needs levels e, g")
    mass = coeffs.M if mass is None else mass
    if p_width is not None:
        f0.grid.check_nyquist(p_width, 2 * f0.grid.hbar / coeffs.z_R)
    f1 = _beam_run(f0, coeffs, t_end, steps, mass, g, rho2, expanded, 0.0)
    report = None
    if check_convergence:
        f2 = _beam_run(f0, coeffs, t_end, 2 * steps, mass, g, rho2, expanded, 0.0)
        change = float(np.max(np.abs(_observables(f1) - _observables(f2))))
        report = ConvergenceReport(t_end / steps, steps, change, tol, abs(f1.norm() - f0.norm()))
        if not report.converged:
            raise ConvergenceError(f"step halving changed observables by {change:.3g} > {tol:g}")
        f1 = f2
    pops = f1.populations()
    return PropagationResult(f1, np.array([0.0, t_end]),
                             {k: np.array([f0.populations()[k], pops[k]]) for k in ("e", "g")}, report)


# canonical unitaries and overlaps ----------------------------------------------

def apply_canonical_on_grid(u, psi, grid: Grid1D, axis: int = 2) -> np.ndarray:
    """Apply exp(i theta) exp(i b Z) exp(-i c P) exp(-i a P^2) (hbar units) along one axis.

    Only ``u``'s plain parameters (b, c, a, theta) are read.  The momentum
    factors act through one FFT pair, the kick multiplies in position space.
    """
    hb = grid.hbar
    b, c = float(u.b[axis]), float(u.c[axis])
    p = grid.p
    out = _fft_apply(np.asarray(psi, dtype=complex), np.exp(-1j * (c * p + u.a * p ** 2) / hb))
    return np.exp(1j * u.theta) * np.exp(1j * b * grid.z / hb) * out


def overlap_numeric(psi1, psi2, grid: Grid1D | None = None, grid2: Grid1D | None = None) -> complex:
    """<psi1|psi2> as a Riemann sum; fields are summed over their shared levels."""
    if isinstance(psi1, MultiLevelField) or isinstance(psi2, MultiLevelField):
        if not (isinstance(psi1, MultiLevelField) and isinstance(psi2, MultiLevelField)):
            raise GridMismatchError("cannot overlap a field with a bare array")
        if not psi1.grid.same_as(psi2.grid) or psi1.names != psi2.names:
            raise GridMismatchError("fields live on different grids or levels")
        return complex(sum(np.vdot(psi1[k], psi2[k]) for k in psi1.names) * psi1.grid.dz)
    if grid is None:
        raise ValueError("bare arrays need their grid")
    if grid2 is not None and not grid.same_as(grid2):
        raise GridMismatchError("arrays live on different grids")
    a1, a2 = np.asarray(psi1), np.asarray(psi2)
    if a1.shape != a2.shape or a1.shape != (grid.n,):
        raise GridMismatchError("array shapes do not match the grid")
    return complex(np.vdot(a1, a2) * grid.dz)


def snapshot_csv(f: MultiLevelField) -> str:
    """CSV of |psi|^2 per level: z, then one column per level."""
    buf = io.StringIO()
    buf.write(",".join(["z"] + [f"abs2_{k}" for k in f.names]) + "\n")
    cols = [f.grid.z] + [np.abs(f[k]) ** 2 for k in f.names]
    for row in zip(*cols):
        buf.write(",".join(format(float(x), ".17g") for x in row) + "\n")
    return buf.getvalue()
