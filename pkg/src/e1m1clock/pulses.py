"""
Pulse Hamiltonian H3, its different-time commutators, the evolution U3 and
the generalized pi and pi/2 pulse operators.

Basis order for internal-state matrices is (e, g) throughout.  A pulse
operator is stored as a 2x2 grid of weighted canonical unitaries; cell
``(to, frm)`` maps internal state ``frm`` to ``to``.  The matrix-style label
"ge" (top-right entry) is the g -> e cell, see :meth:`PulseOperatorBranches.matrix_cell`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import phasespace as ps
from .beam import PulseCoefficients
from .core import GaussianWavepacket, GravityFrame

__all__ = [
    "CommutationWarning",
    "CommutationError",
    "PauliCoefficientField",
    "assemble_H3",
    "commutator_diagnostic",
    "U3Operator",
    "evolve_U3",
    "PulseOperatorBranches",
    "generalized_pulse",
    "ideal_matrix",
    "PULSE_AREAS",
]

PULSE_AREAS = {"pi": np.pi, "pi_half": np.pi / 2}
_KIND_ALIASES = {"pi": "pi", "pi_half": "pi_half", "pi2": "pi_half", "pi/2": "pi_half"}

SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class CommutationWarning(UserWarning):
    pass


class CommutationError(RuntimeError):
    pass


def _kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValueError(f"unsupported pulse kind {kind!r}; use 'pi' or 'pi_half'") from None


@dataclass(frozen=True)
class PauliCoefficientField:
    """H3(t) = H0 1 + Hx sx + Hy sy + Hz sz at a fixed time.

    The coefficients are real functions of (R, P) through the Heisenberg
    trajectories R_H(t) = R + (P/M + hbar k e_Z/(2M)) t, P_H = P.
    """

    coeffs: PulseCoefficients
    t: float
    rho2_weight: float = 2.0

    def scaled_q(self, R, P):
        """q = Z_H^2/z_R^2 + 2 rho_H^2/w0^2 on the Heisenberg trajectories."""
        c = self.coeffs
        R = np.asarray(R, dtype=float)
        P = np.asarray(P, dtype=float)
        t = self.t
        xh = R[..., 0] + P[..., 0] * t / c.M
        yh = R[..., 1] + P[..., 1] * t / c.M
        zh = R[..., 2] + (P[..., 2] / c.M + c.hbar * c.k / (2 * c.M)) * t
        return (zh / c.z_R) ** 2 + self.rho2_weight * (xh ** 2 + yh ** 2) / c.w0 ** 2

    def detuning(self, R, P):
        """Delta_H / hbar."""
        c = self.coeffs
        q = self.scaled_q(R, P)
        return c.nu(np.asarray(P, dtype=float)[..., 2]) + c.detuning_offset + c.delta_quad * q

    def evaluate(self, R, P):
        """(H0, Hx, Hy, Hz) at phase-space points (..., 3) arrays."""
        c = self.coeffs
        hb = c.hbar
        q = self.scaled_q(R, P)
        dH = self.detuning(R, P)
        wt = c.Omega0 * self.t
        H0 = -hb * c.stark_quad * q
        Hx = 0.5 * hb * c.omega_quad * q
        Hy = 0.5 * hb * dH * np.sin(wt)
        Hz = 0.5 * hb * dH * np.cos(wt)
        return H0, Hx, Hy, Hz

    def matrix(self, R, P) -> np.ndarray:
        """2x2 matrix at one classical phase-space point."""
        H0, Hx, Hy, Hz = (float(v) for v in self.evaluate(R, P))
        return H0 * np.eye(2) + Hx * SIGMA["x"] + Hy * SIGMA["y"] + Hz * SIGMA["z"]


def assemble_H3(coeffs: PulseCoefficients, t: float) -> PauliCoefficientField:
    return PauliCoefficientField(coeffs, float(t))


# commutator diagnostic ------------------------------------------------------

def _ladder(n: int):
    a = sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr", dtype=complex)
    return a


class _OscillatorBasis:
    """Truncated product oscillator basis whose vacuum is the Gaussian wavepacket."""

    def __init__(self, psi: GaussianWavepacket, n: int):
        self.n = n
        a = _ladder(n)
        ad = a.getH()
        eye = sp.identity(n, format="csr", dtype=complex)
        self.R, self.P = [], []
        for axis in range(3):
            parts = [eye, eye, eye]
            dz, dp = psi.dx[axis], psi.dp[axis]
            parts[axis] = dz * (a + ad)
            xop = sp.kron(sp.kron(parts[0], parts[1]), parts[2], format="csr")
            parts[axis] = 1j * dp * (ad - a)
            pop = sp.kron(sp.kron(parts[0], parts[1]), parts[2], format="csr")
            ident = sp.identity(n ** 3, format="csr", dtype=complex)
            self.R.append(xop + psi.R0[axis] * ident)
            self.P.append(pop + psi.P0[axis] * ident)
        self.ident = sp.identity(n ** 3, format="csr", dtype=complex)
        self.vacuum = np.zeros(n ** 3, dtype=complex)
        self.vacuum[0] = 1.0


def _h3_blocks(basis: _OscillatorBasis, c: PulseCoefficients, t: float):
    R, P, I = basis.R, basis.P, basis.ident
    xh = R[0] + P[0] * (t / c.M)
    yh = R[1] + P[1] * (t / c.M)
    zh = R[2] + P[2] * (t / c.M) + I * (c.hbar * c.k * t / (2 * c.M))
    q = (zh @ zh) / c.z_R ** 2 + 2.0 * (xh @ xh + yh @ yh) / c.w0 ** 2
    dH = P[2] * (c.k / c.M) + I * c.detuning_offset + q * c.delta_quad
    wt = c.Omega0 * t
    hb = c.hbar
    H0 = q * (-hb * c.stark_quad)
    Hx = q * (0.5 * hb * c.omega_quad)
    Hy = dH * (0.5 * hb * np.sin(wt))
    Hz = dH * (0.5 * hb * np.cos(wt))
    return sp.bmat([[H0 + Hz, Hx - 1j * Hy], [Hx + 1j * Hy, H0 - Hz]], format="csr")


def commutator_diagnostic(t1: float, t2: float, psi: GaussianWavepacket, coeffs: PulseCoefficients,
                          internal=(0.0, 1.0), normalization: str = "rabi", n_basis: int = 7) -> float:
    """State-conditioned size of [H3(t1), H3(t2)].

    The norm is ||A||_psi = sqrt(<psi|A^dagger A|psi>), evaluated exactly in
    a truncated oscillator basis whose vacuum is ``psi`` (the operators are
    polynomials of low degree, so ``n_basis`` >= 5 is already exact).

    Parameters
    ----------
    normalization : {"rabi", "product"}
        "rabi" divides by (hbar Omega(0))^2, "product" by
        ||H3(t1)||_psi ||H3(t2)||_psi.  The product form stays O(1) whenever
        the Doppler term dominates H3 because the (sy, sz) vector rotates at
        Omega(0), so "rabi" is the default.
    """
    if n_basis < 5:
        raise ValueError("n_basis must be at least 5 for an exact evaluation")
    basis = _OscillatorBasis(psi, n_basis)
    vec = np.concatenate([internal[0] * basis.vacuum, internal[1] * basis.vacuum])
    vec = vec / np.linalg.norm(vec)
    H1 = _h3_blocks(basis, coeffs, t1)
    H2 = _h3_blocks(basis, coeffs, t2)
    comm = H1 @ (H2 @ vec) - H2 @ (H1 @ vec)
    num = float(np.linalg.norm(comm))
    if normalization == "rabi":
        den = (coeffs.hbar * coeffs.Omega0) ** 2
    elif normalization == "product":
        den = float(np.linalg.norm(H1 @ vec) * np.linalg.norm(H2 @ vec))
    else:
        raise ValueError("normalization must be 'rabi' or 'product'")
    return num / den if den > 0 else 0.0


def max_commutator(t_end: float, psi: GaussianWavepacket, coeffs: PulseCoefficients, n_times: int = 5,
                   **kw) -> float:
    """Largest diagnostic over pairs of sample times in [0, t_end]."""
    ts = np.linspace(0.0, t_end, n_times)
    return max(commutator_diagnostic(a, b, psi, coeffs, **kw) for i, a in enumerate(ts) for b in ts[i + 1:])


# U3 -------------------------------------------------------------------------

@dataclass(frozen=True)
class U3Operator:
    """exp of the time-integrated H3 (time ordering dropped).

    Without quadratic terms the operator is diagonal in momentum and
    ``matrix(p)`` gives its 2x2 block.  With ``keep_quadratic`` the Z^2 and
    rho^2 terms are kept and the operator acts on 1D grids through
    :meth:`apply_on_grid`.
    """

    tau: float
    coeffs: PulseCoefficients
    keep_quadratic: bool = False

    def x(self, pz):
        """Rotation angle (nu(P) + offset) sin(tau/2)/Omega(0)."""
        c = self.coeffs
        return (c.nu(pz) + c.detuning_offset) * np.sin(self.tau / 2) / c.Omega0

    def matrix(self, pz: float) -> np.ndarray:
        if self.keep_quadratic:
            raise ps.NotRepresentableError("quadratic U3 is not diagonal in momentum; use apply_on_grid")
        s, c = np.sin(self.tau / 2), np.cos(self.tau / 2)
        x = float(self.x(pz))
        # exp(-i x (s sy + c sz))
        gen = s * SIGMA["y"] + c * SIGMA["z"]
        return np.cos(x) * np.eye(2) - 1j * np.sin(x) * gen

    def generator(self, z, p, rho2: float = 0.0):
        """Grid generator G with U3 = exp(-i G) on a (2N) x (2N) space.

        ``z`` is the position grid, ``p`` its FFT-ordered momentum grid.
        """
        c = self.coeffs
        tau = self.tau
        n = len(z)
        F = np.fft.fft(np.eye(n), axis=0)
        Finv = np.fft.ifft(np.eye(n), axis=0)
        nu_op = Finv @ np.diag(c.nu(p)) @ F
        Q = np.diag((np.asarray(z) / c.z_R) ** 2 + 2.0 * rho2) if self.keep_quadratic else np.zeros((n, n))
        I = np.eye(n)
        a = tau / 2 * c.omega_AC_plus0 / c.Omega0 * Q
        bx = -tau / 2 * Q
        d = (nu_op + c.detuning_offset * I + c.delta_quad * Q) / (2 * c.Omega0)
        by = d * (1 - np.cos(tau))
        bz = d * np.sin(tau)
        return np.block([[a + bz, bx - 1j * by], [bx + 1j * by, a - bz]])

    def apply_on_grid(self, psi_e, psi_g, z, p, rho2: float = 0.0):
        G = self.generator(z, p, rho2)
        U = scipy.linalg.expm(-1j * G)
        out = U @ np.concatenate([psi_e, psi_g])
        n = len(z)
        return out[:n], out[n:]


def evolve_U3(tau: float, coeffs: PulseCoefficients, keep_quadratic: bool = False,
              psi: GaussianWavepacket | None = None, threshold: float = 1e-2, strict: bool = False) -> U3Operator:
    """U3(tau) with the time ordering dropped.

    If ``psi`` is given the commutator diagnostic is checked over the pulse
    window; above ``threshold`` a warning is issued, or an error if ``strict``.
    """
    if psi is not None:
        diag = max_commutator(tau / coeffs.Omega0, psi, coeffs, n_times=4)
        if diag > threshold:
            msg = f"different-time commutator {diag:.3g} exceeds {threshold}; dropping time ordering is unsafe"
            if strict:
                raise CommutationError(msg)
            warnings.warn(msg, CommutationWarning)
    return U3Operator(float(tau), coeffs, keep_quadratic)


# generalized pulse operators --------------------------------------------------

def ideal_matrix(kind: str) -> np.ndarray:
    """Ideal plane-wave pulse matrix in the (e, g) basis."""
    kind = _kind(kind)
    if kind == "pi":
        return np.array([[0, -1j], [-1j, 0]])
    return np.array([[1, -1j], [-1j, 1]]) / np.sqrt(2)


@dataclass(frozen=True)
class PulseOperatorBranches:
    """Weighted canonical-unitary cells of a pulse.

    ``cells[(to, frm)]`` is a tuple of :class:`~e1m1clock.phasespace.WeightedBranch`.
    ``reference`` is the common mean-mass evolution over the pulse, used to
    strip the state-independent dispersion and phase when comparing with
    the ideal matrices.
    """

    kind: str
    cells: dict
    t_pulse: float
    splitting: bool
    reference: ps.CanonicalUnitary = field(default=None)

    def cell(self, to: str, frm: str) -> tuple:
        return self.cells[(to, frm)]

    def matrix_cell(self, name: str) -> tuple:
        """Cell by its matrix label: "ge" is the top-right (g -> e) entry."""
        row, col = name[0], name[1]
        return self.cells[(row, col)] if row == col else self.cells[({"ge": "e", "eg": "g"}[name],
                                                                      {"ge": "g", "eg": "e"}[name])]

    def amplitude(self, to: str, frm: str, pz: float = 0.0, strip_common: bool = True):
        """(output momentum, amplitude) of the cell on a momentum eigenstate."""
        p = np.array([0.0, 0.0, pz])
        amp = 0j
        p_out = None
        for br in self.cells[(to, frm)]:
            po, ph = ps.apply_to_momentum(br.op, p)
            amp += br.weight * ph
            p_out = po if p_out is None else p_out
        if strip_common and self.reference is not None:
            _, ref = ps.apply_to_momentum(self.reference, p)
            amp /= ref
        return p_out, amp

    def internal_matrix(self, pz: float = 0.0, strip_common: bool = True) -> np.ndarray:
        """2x2 amplitude matrix on momentum eigenstates, rows/cols (e, g)."""
        out = np.zeros((2, 2), dtype=complex)
        for i, to in enumerate("eg"):
            for j, frm in enumerate("eg"):
                out[i, j] = self.amplitude(to, frm, pz, strip_common)[1]
        return out

    def unitarity_defect(self, pz: float = 0.0) -> float:
        """max over inputs of |sum of output probabilities - 1| on a momentum eigenstate."""
        m = self.internal_matrix(pz, strip_common=False)
        return float(np.max(np.abs(np.sum(np.abs(m) ** 2, axis=0) - 1.0)))

    def branches_from(self, frm: str):
        """All (to, WeightedBranch) pairs leaving internal state ``frm``."""
        return [(to, br) for to in "eg" for br in self.cells[(to, frm)]]

    def table(self):
        """Rows (to, from, branch, weight, b_z, c_z, a, theta) for CSV output."""
        rows = []
        for to in "eg":
            for frm in "eg":
                for i, br in enumerate(self.cells[(to, frm)]):
                    rows.append((to, frm, i, complex(br.weight), float(br.op.b[2]), float(br.op.c[2]),
                                 br.op.a, br.op.theta))
        return rows


def _frame(T: float, M: float, gravity: GravityFrame | None, hbar: float) -> ps.CanonicalUnitary:
    g = 0.0 if gravity is None else gravity.g
    return ps.displacement([0, 0, -0.5 * g * T ** 2], [0, 0, -M * g * T], hbar=hbar)


def generalized_pulse(kind: str, coeffs: PulseCoefficients, include_splitting: bool = True,
                      keep_translation: bool = False, gravity: GravityFrame | None = None,
                      start_time: float = 0.0) -> PulseOperatorBranches:
    """Generalized pi or pi/2 pulse as weighted canonical unitaries.

    The rest-frame cells follow U1 Ubar(tau) U_Omega(tau) U3(tau) U1^dagger
    with U1 = diag(D_k, 1) and D_k = exp(i (k Z + Phi0)):

        ee = D_k Ubar [((c-1)/2) T_+ + ((c+1)/2) T_-] D_k^dagger
        gg = Ubar [((c+1)/2) T_+ + ((c-1)/2) T_-]
        ge = D_k Ubar (-i s/2)(T_+ + T_-)        (g -> e)
        eg = Ubar (-i s/2)(T_+ + T_-) D_k^dagger (e -> g)

    with c = cos(tau/2), s = sin(tau/2) and T_(+/-) = exp(+/- i x(P)), a
    translation by -/+ xi = hbar k s/(M Omega(0)) carrying the phase
    +/- s (omega_k + delta + omega_AC_minus)/Omega(0).  Without splitting
    the cells reduce to ee = gg = c Ubar', ge = -i s D_k Ubar',
    eg = -i s Ubar' D_k^dagger.

    In a gravity frame the lab-frame cell is D(T + t) cell D(T)^dagger with
    D the displacement onto the mean-mass classical trajectory that starts
    at rest at the origin at time zero; the c-number phase of this frame
    change is fixed so that a cell equal to the mean evolution maps to
    mean-mass free fall over the pulse.
    """
    kind = _kind(kind)
    c_ = coeffs
    hb, M = c_.hbar, c_.M
    tau = PULSE_AREAS[kind]
    t = tau / c_.Omega0
    s, c = np.sin(tau / 2), np.cos(tau / 2)

    D = ps.CanonicalUnitary(b=[0, 0, hb * c_.k], phases={"laser": c_.Phi0} if c_.Phi0 else {}, hbar=hb)
    Dd = D.dagger()
    mean = ps.CanonicalUnitary(a=t / (2 * M), phases={"mean": -t * c_.mean_phase_rate}, hbar=hb)
    ubar = mean
    if keep_translation:
        ubar = ps.compose(ps.translation([0, 0, hb * c_.k * t / (2 * M)], hbar=hb), mean)

    if include_splitting:
        xi = hb * c_.k * s / (M * c_.Omega0)
        ph = s * c_.detuning_offset / c_.Omega0
        Tp = ps.CanonicalUnitary(c=[0, 0, -xi], phases={"detuning": ph} if ph else {}, hbar=hb)
        Tm = ps.CanonicalUnitary(c=[0, 0, xi], phases={"detuning": -ph} if ph else {}, hbar=hb)
        inner = {
            ("e", "e"): [((c - 1) / 2, Tp, "T+"), ((c + 1) / 2, Tm, "T-")],
            ("g", "g"): [((c + 1) / 2, Tp, "T+"), ((c - 1) / 2, Tm, "T-")],
            ("e", "g"): [(-0.5j * s, Tp, "T+"), (-0.5j * s, Tm, "T-")],
            ("g", "e"): [(-0.5j * s, Tp, "T+"), (-0.5j * s, Tm, "T-")],
        }
        pre = {("e", "e"): Dd, ("g", "e"): Dd}
        post = {("e", "e"): D, ("e", "g"): D}
    else:
        I = ps.identity(hb)
        inner = {
            ("e", "e"): [(c, I, "")],
            ("g", "g"): [(c, I, "")],
            ("e", "g"): [(-1j * s, I, "")],
            ("g", "e"): [(-1j * s, I, "")],
        }
        pre = {("g", "e"): Dd}
        post = {("e", "g"): D}

    if gravity is not None and gravity.g != 0:
        Din = _frame(start_time, M, gravity, hb)
        Dout = _frame(start_time + t, M, gravity, hb)
        ff = ps.free_fall_segment(M, t, gravity.g, hb, label="pulse")
        probe = ps.compose_all([Din.dagger(), mean, Dout], hb)
        chi = ff.theta - probe.theta
        if not probe.allclose(ff, atol=1e-9 * max(1.0, abs(ff.c[2]), abs(ff.b[2])), phase_atol=np.inf):
            raise RuntimeError("frame change does not reproduce free fall")
        wrap_in = Din.dagger()
        wrap_out = Dout.with_phase("frame_fix", chi)
    else:
        wrap_in = wrap_out = None

    cells = {}
    for key, items in inner.items():
        branches = []
        for w, op, lab in items:
            seq = [pre.get(key, ps.identity(hb)), op, ubar, post.get(key, ps.identity(hb))]
            if wrap_in is not None:
                seq = [wrap_in] + seq + [wrap_out]
            label = f"{kind}:{key[1]}->{key[0]}" + (f":{lab}" if lab else "")
            branches.append(ps.WeightedBranch(complex(w), ps.compose_all(seq, hb), label))
        cells[key] = tuple(branches)

    ref = mean if wrap_in is None else ps.compose_all([wrap_in, mean, wrap_out], hb)
    return PulseOperatorBranches(kind, cells, t, include_splitting, ref)
