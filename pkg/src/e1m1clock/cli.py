"""
Batch front end: sectioned key = value configs, subcommands, sweeps, CSV and
plot-script output.

Every physical key carries its SI unit as a suffix (``_s``, ``_m``,
``_rad_s``, ...).  Values are converted to natural units (hbar = M = 1,
time unit 1/Omega(0)) before any module is called, and converted back when
written.  Exit codes: 0 success, 2 invalid input, 3 numerical convergence
failure.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import itertools
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gridoracle as go
from . import interferometer as ifo
from .beam import GaussianBeamParams, beam_factors, pulse_coefficients, remainder_bounds
from .core import AMU_SI, C_SI, AtomSpecies, GravityFrame, UnitSystem, make_wavepacket
from .polarization import CouplingSet
from .pulses import generalized_pulse
from .twolevel import effective_hamiltonian, rabi_populations, rabi_table

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE = 0, 2, 3

# section -> key -> (type, default); None default means optional
SCHEMA: dict[str, dict[str, tuple]] = {
    "atom": {
        "M_kg": (float, 87.9056 * AMU_SI),
        "clock_wavelength_m": (float, 698.4e-9),
        "epsilon": (float, None),
    },
    "beam": {
        "w0_m": (float, 1e-3),
        "z_R_m": (float, 5.0),
        "wavelength_m": (float, None),
    },
    "couplings": {
        "omega0_rad_s": (float, 500.0),
        "Delta_rad_s": (float, 1e6),
        "ratio_EB": (float, 1.0),
        "omega_E_rad_s": (float, None),
        "omega_B_rad_s": (float, None),
        "delta_rad_s": (float, None),
    },
    "gravity": {
        "g_m_s2": (float, 9.81),
        "chirp_compensated": (bool, True),
    },
    "wavepacket": {
        "dv_m_s": (float, 1e-4),
        "dv_perp_m_s": (float, None),
        "v0_m_s": (float, 0.0),
        "z0_m": (float, 0.0),
    },
    "sequence": {
        "scheme": (str, "a"),
        "kind": (str, "pi_half"),
        "deltaT_s": (float, 0.1),
        "T2_s": (float, 0.15),
        "T3_s": (float, 0.3),
        "tau_s": (float, 0.01),
        "k_p_1_m": (float, 1.6e7),
        "T_s": (float, 0.2),
        "pulse_gap_s": (float, 0.0),
        "initial_state": (str, "g"),
        "t_end_s": (float, None),
        "n_points": (int, 201),
        "splitting": (bool, False),
    },
    "numerics": {
        "oracle": (str, "kick"),
        "grid_points": (int, 256),
        "grid_length_m": (float, None),
        "steps": (int, 2000),
        "tol": (float, 1e-6),
        "beam_zmax": (float, 0.3),
        "beam_points": (int, 61),
        "rho_m": (float, 0.0),
    },
    "output": {
        "plot": (bool, False),
        "prefix": (str, ""),
    },
}

CHOICES = {
    ("sequence", "scheme"): ("a", "b"),
    ("sequence", "kind"): ("pi", "pi_half"),
    ("sequence", "initial_state"): ("g", "e"),
    ("numerics", "oracle"): ("kick", "rabi"),
}

POSITIVE = {
    ("atom", "M_kg"), ("atom", "clock_wavelength_m"), ("beam", "w0_m"), ("beam", "z_R_m"),
    ("beam", "wavelength_m"), ("couplings", "omega0_rad_s"), ("couplings", "Delta_rad_s"),
    ("couplings", "ratio_EB"), ("wavepacket", "dv_m_s"), ("wavepacket", "dv_perp_m_s"),
    ("sequence", "deltaT_s"), ("sequence", "T_s"), ("sequence", "t_end_s"), ("sequence", "n_points"),
    ("numerics", "grid_points"), ("numerics", "grid_length_m"), ("numerics", "steps"), ("numerics", "tol"),
    ("numerics", "beam_zmax"), ("numerics", "beam_points"),
}
NON_NEGATIVE = {("sequence", "tau_s"), ("sequence", "pulse_gap_s"), ("gravity", "g_m_s2"), ("numerics", "rho_m")}


class ConfigError(ValueError):
    """Collects every violation found while loading a config."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def get(self, section: str, key: str):
        return self.values[section][key]

    def to_text(self) -> str:
        lines = []
        for sec, entries in self.values.items():
            lines.append(f"[{sec}]")
            for k, v in entries.items():
                if v is not None:
                    lines.append(f"{k} = {_fmt_raw(v)}")
        return "\n".join(lines) + "\n"


def _fmt_raw(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _convert(typ, raw: str):
    raw = raw.strip()
    if typ is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if typ is int:
        return int(raw)
    if typ is float:
        v = float(raw)
        if not np.isfinite(v):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return v
    return raw


def _unrepr(line: str) -> str:
    """configparser reports offending lines as repr strings."""
    try:
        return ast.literal_eval(line).strip()
    except (ValueError, SyntaxError):
        return line.strip()


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse and validate a config; raises :class:`ConfigError` listing all problems."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError([f"syntax error at line {exc.lineno}: key before any [section] header"]) from None
    except configparser.ParsingError as exc:
        raise ConfigError([f"syntax error at line {n}: cannot parse {_unrepr(line)}" for n, line in exc.errors]
                          ) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError([f"syntax error at line {exc.lineno}: {exc.section}.{exc.option} given twice"]) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError([f"syntax error at line {exc.lineno}: section {exc.section} given twice"]) from None
    except configparser.Error as exc:
        raise ConfigError([f"syntax error: {exc}".replace("\n", " ")]) from None

    errors = []
    raw = {sec: {} for sec in SCHEMA}
    for sec in cp.sections():
        if sec not in SCHEMA:
            errors.append(f"{sec}: unknown section")
            continue
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                errors.append(f"{sec}.{key}: unknown key")
            else:
                raw[sec][key] = val
    for ov in overrides:
        path, _, val = ov.partition("=")
        sec, _, key = path.strip().partition(".")
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            errors.append(f"{path.strip()}: unknown key in override")
        else:
            raw[sec][key] = val

    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (typ, default) in keys.items():
            if key in raw[sec]:
                try:
                    values[sec][key] = _convert(typ, raw[sec][key])
                except ValueError as exc:
                    errors.append(f"{sec}.{key}: {exc}")
                    values[sec][key] = default
            else:
                values[sec][key] = default
    for (sec, key), allowed in CHOICES.items():
        if values[sec][key] not in allowed:
            errors.append(f"{sec}.{key}: must be one of {', '.join(allowed)}")
    for sec, key in POSITIVE:
        v = values[sec][key]
        if v is not None and not v > 0:
            errors.append(f"{sec}.{key}: must be positive")
    for sec, key in NON_NEGATIVE:
        v = values[sec][key]
        if v is not None and v < 0:
            errors.append(f"{sec}.{key}: must be non-negative")
    if values["numerics"]["grid_points"] & (values["numerics"]["grid_points"] - 1):
        errors.append("numerics.grid_points: must be a power of two")
    errors.extend(_cross_checks(values))
    if errors:
        raise ConfigError(errors)
    return RunConfig(values)


def _cross_checks(v) -> list:
    errors = []
    b = v["beam"]
    if b["wavelength_m"] is not None and b["w0_m"] and b["z_R_m"] and b["wavelength_m"] > 0:
        expect = np.pi * b["w0_m"] ** 2 / b["wavelength_m"]
        if abs(expect - b["z_R_m"]) > 1e-6 * b["z_R_m"]:
            errors.append(f"beam.z_R_m: {b['z_R_m']} inconsistent with pi w0^2/lambda = {expect:.10g}")
    c = v["couplings"]
    if (c["omega_E_rad_s"] is None) != (c["omega_B_rad_s"] is None):
        errors.append("couplings.omega_E_rad_s: give both omega_E_rad_s and omega_B_rad_s or neither")
    s = v["sequence"]
    dT, T2, T3 = s["deltaT_s"], s["T2_s"], s["T3_s"]
    if dT and dT > 0:
        if not dT < T2:
            errors.append("sequence.T2_s: must exceed deltaT_s (T1 < T2)")
        if not T2 < T3:
            errors.append("sequence.T3_s: must exceed T2_s")
        if s["tau_s"] is not None and s["tau_s"] >= 0 and not T2 + s["tau_s"] < T3:
            errors.append("sequence.tau_s: shifted clock initialization must stay before T3_s")
    a = v["atom"]
    if a["epsilon"] is not None and not abs(a["epsilon"]) < 0.1:
        errors.append("atom.epsilon: |epsilon| must be below 0.1")
    return errors


# model construction -------------------------------------------------------------

@dataclass(frozen=True)
class Model:
    units: UnitSystem
    species: AtomSpecies
    beam: GaussianBeamParams
    couplings: CouplingSet
    coeffs: object
    gravity: GravityFrame
    psi: object
    cfg: RunConfig

    def t(self, seconds):
        return self.units.to_internal(seconds, "time")

    def t_si(self, internal):
        return self.units.to_si(internal, "time")


def build_model(cfg: RunConfig) -> Model:
    v = cfg.values
    M = v["atom"]["M_kg"]
    om0 = v["couplings"]["omega0_rad_s"]
    units = UnitSystem.natural(M, om0)
    lam_clock = v["atom"]["clock_wavelength_m"]
    omega_eg = 2 * np.pi * C_SI / lam_clock
    if v["atom"]["epsilon"] is None:
        species = AtomSpecies.from_clock_frequency(1.0, units.to_internal(omega_eg, "frequency"), units.c,
                                                   units.hbar, "clock")
    else:
        species = AtomSpecies(1.0, v["atom"]["epsilon"], hbar=units.hbar)
    L = lambda x: None if x is None else units.to_internal(x, "length")
    b = v["beam"]
    beam = GaussianBeamParams(L(b["w0_m"]), L(b["z_R_m"]), L(b["wavelength_m"]), rtol=1e-6)
    c = v["couplings"]
    F = lambda x: units.to_internal(x, "frequency")
    Delta = F(c["Delta_rad_s"])
    if c["omega_E_rad_s"] is not None:
        oE, oB = F(c["omega_E_rad_s"]), F(c["omega_B_rad_s"])
    else:
        # |Omega_E Omega_B| / (2 Delta) = 1 in these units
        oE, oB = np.sqrt(2 * Delta * c["ratio_EB"]), np.sqrt(2 * Delta / c["ratio_EB"])
    cs = CouplingSet.sigma_scheme(oE, oB, Delta, 0.0, hbar=units.hbar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        coeffs = pulse_coefficients(beam, cs, species)
    if c["delta_rad_s"] is None:
        coeffs = coeffs.compensated()
        cs = cs.with_delta(coeffs.delta)
    else:
        coeffs = coeffs.with_delta(F(c["delta_rad_s"]))
        cs = cs.with_delta(F(c["delta_rad_s"]))
    g = v["gravity"]
    gravity = GravityFrame(units.to_internal(g["g_m_s2"], "acceleration"), g["chirp_compensated"])
    w = v["wavepacket"]
    V = lambda x: units.to_internal(x, "velocity") * species.M
    dv_perp = w["dv_perp_m_s"] if w["dv_perp_m_s"] is not None else w["dv_m_s"]
    psi = make_wavepacket([0, 0, V(w["v0_m_s"])], [V(dv_perp), V(dv_perp), V(w["dv_m_s"])],
                          [0, 0, L(w["z0_m"])], hbar=units.hbar)
    return Model(units, species, beam, cs, coeffs, gravity, psi, cfg)


# commands -------------------------------------------------------------------------

def cmd_rabi(m: Model, args) -> tuple[list, list]:
    e2l = effective_hamiltonian(m.couplings)
    s = m.cfg.values["sequence"]
    t_end = m.t(s["t_end_s"]) if s["t_end_s"] is not None else 2 * (2 * np.pi / e2l.Omega_eff)
    t = np.linspace(0.0, t_end, s["n_points"])
    rows = rabi_table(t, e2l, s["initial_state"], time_scale=m.units.scale("time"))
    fs = m.units.scale("frequency")
    header = ["t_s", "P_g", "P_e", "gamma_rad_s", "Omega_eff_rad_s"]
    return header, [(r[0], r[1], r[2], r[3] * fs, r[4] * fs) for r in rows]


def cmd_pulse(m: Model, args) -> tuple[list, list]:
    s = m.cfg.values["sequence"]
    kind = args.kind or s["kind"]
    P = generalized_pulse(kind, m.coeffs, include_splitting=s["splitting"])
    u = m.units
    header = ["to", "from", "branch", "weight_re", "weight_im", "b_z_kg_m_s", "c_z_m", "a_s_kg", "theta_rad"]
    rows = []
    for to, frm, i, w, bz, cz, a, th in P.table():
        rows.append((to, frm, i, w.real, w.imag, u.to_si(bz, "momentum"), u.to_si(cz, "length"),
                     u.to_si(a, "dispersion"), th))
    return header, rows


def cmd_beam(m: Model, args) -> tuple[list, list]:
    n = m.cfg.values["numerics"]
    zr = m.beam.z_R
    Z = np.linspace(-n["beam_zmax"] * zr, n["beam_zmax"] * zr, n["beam_points"])
    f = beam_factors(Z, m.beam)
    bw, bR, bz = remainder_bounds(Z, m.beam)
    L = m.units.scale("length")
    header = ["Z_m", "inv_w_1_m", "inv_w_expanded_1_m", "inv_R_1_m", "inv_R_expanded_1_m", "gouy_rad",
              "gouy_expanded_rad", "bound_inv_w_1_m", "bound_inv_R_1_m", "bound_gouy_rad"]
    rows = [(Z[i] * L, f.inv_w[i] / L, f.inv_w_expanded[i] / L, f.inv_R[i] / L, f.inv_R_expanded[i] / L,
             f.gouy[i], f.gouy_expanded[i], bw[i] / L, bR[i] / L, bz[i]) for i in range(len(Z))]
    return header, rows


def _scheme_a_seq(m: Model):
    s = m.cfg.values["sequence"]
    kp = s["k_p_1_m"] * m.units.scale("length")
    return ifo.SchemeASequence.from_layout(m.t(s["deltaT_s"]), m.t(s["T2_s"]), m.t(s["T3_s"]),
                                           np.pi / 2 / m.coeffs.Omega0, kp, m.t(s["tau_s"]))


def _scheme_b_seq(m: Model):
    s = m.cfg.values["sequence"]
    kp = s["k_p_1_m"] * m.units.scale("length")
    return ifo.SchemeBSequence(m.t(s["T_s"]), m.t(s["deltaT_s"]), np.pi / m.coeffs.Omega0, kp,
                               s["initial_state"], m.t(s["pulse_gap_s"]))


def _w(x):
    return float(np.angle(np.exp(1j * x)))


def cmd_ifo(m: Model, args) -> tuple[list, list]:
    s = m.cfg.values["sequence"]
    scheme = args.scheme or s["scheme"]
    spl = s["splitting"]
    if scheme == "a":
        seq = _scheme_a_seq(m)
        ref = ifo.scheme_a_reference(seq, m.species, m.gravity, m.coeffs.k)
        if args.double_diff:
            dd = ifo.double_differential(seq, m.species, m.gravity, m.coeffs, m.psi, include_splitting=spl)
            r = ref["double_diff"]
            floor = max(ifo.phase_roundoff_floor(br, m.psi) for s_ in (seq, seq.shifted(seq.tau))
                        for br in ifo.build_scheme_a(s_, m.species, m.gravity, m.coeffs,
                                                     include_splitting=spl).values())
            header = ["scheme", "tau_s", "epsilon", "double_diff_rad", "double_diff_ref_rad",
                      "residual_double_diff_rad", "rel_residual", "phase_floor_rad"]
            return header, [("a", m.t_si(seq.tau), m.species.epsilon, dd, r, dd - r,
                             (dd - r) / r if r else 0.0, 4 * floor)]
        obs = ifo.scheme_a_observables(seq, m.species, m.gravity, m.coeffs, m.psi, include_splitting=spl)
        vref = {"g": 1.0, "e": ifo.visibility_e_reference(seq, m.species, m.psi)}
        derived = (obs["dphi_minus"], _w(ref["dphi_minus"]), _w(obs["dphi_minus"] - ref["dphi_minus"]),
                   2 * obs["phase_floor"])
        header = ["scheme", "epsilon", "port", "V", "V_ref", "delta_phi_rad", "delta_phi_ref_rad",
                  "residual_delta_phi_rad", "I", "dphi_minus_rad", "dphi_minus_ref_rad", "residual_dphi_minus_rad",
                  "phase_floor_rad"]
        rows = []
        for port in ("g", "e"):
            pr = obs["result"][port]
            rows.append(("a", m.species.epsilon, port, pr.V, vref[port], pr.delta_phi, _w(ref[f"dphi_{port}"]),
                         _w(pr.delta_phi - ref[f"dphi_{port}"]), pr.I) + derived)
        return header, rows
    if args.double_diff:
        raise ConfigError(["--double-diff applies to scheme a only"])
    seq = _scheme_b_seq(m)
    obs = ifo.scheme_b_observables(seq, m.species, m.gravity, m.coeffs, m.psi, include_splitting=spl)
    ref = ifo.scheme_b_reference(seq, m.species, m.gravity)
    header = ["scheme", "epsilon", "port", "V", "delta_phi_rad", "delta_phi_ref_rad", "residual_delta_phi_rad",
              "I", "dphi_plus_rad", "dphi_plus_ref_rad", "dphi_minus_rad", "dphi_minus_ref_rad",
              "residual_dphi_minus_rad", "phase_floor_rad"]
    derived = (obs["dphi_plus"], _w(ref["dphi_plus"]), obs["dphi_minus"], _w(ref["dphi_minus"]),
               _w(obs["dphi_minus"] - ref["dphi_minus"]), 2 * obs["phase_floor"])
    rows = []
    for port in ("g", "e"):
        rows.append(("b", m.species.epsilon, port, obs[f"V_{port}"], obs[f"dphi_{port}"], _w(ref[f"dphi_{port}"]),
                     _w(obs[f"dphi_{port}"] - ref[f"dphi_{port}"]), obs[f"I_{port}"]) + derived)
    return header, rows


def _oracle_grid(m: Model, p_width: float, kick: float) -> go.Grid1D:
    n = m.cfg.values["numerics"]
    dx = m.psi.dx[2]
    length = (m.units.to_internal(n["grid_length_m"], "length") if n["grid_length_m"] is not None
              else 40.0 * dx)
    grid = go.Grid1D(length, n["grid_points"], hbar=m.units.hbar)
    grid.check_nyquist(p_width, kick, m.psi.P0[2])
    return grid


def cmd_oracle(m: Model, args) -> tuple[list, list]:
    n = m.cfg.values["numerics"]
    mode = args.oracle or n["oracle"]
    psi = m.psi
    if mode == "kick":
        grid = _oracle_grid(m, psi.dp[2], m.coeffs.k * m.units.hbar)
        f0 = go.gaussian_field(grid, psi, "g")
        res = go.propagate_two_level_beam(f0, m.coeffs, np.pi / m.coeffs.Omega0, n["steps"], tol=n["tol"],
                                          rho2=(m.units.to_internal(n["rho_m"], "length") / m.beam.w0) ** 2)
        dp = go.momentum_mean(grid, res.field["e"]) - go.momentum_mean(grid, f0["g"])
        ps_si = m.units.scale("momentum")
        expect = 2 * m.units.hbar / m.beam.z_R
        header = ["z_R_m", "kick_expected_kg_m_s", "kick_measured_kg_m_s", "rel_error", "P_e", "step_change"]
        return header, [(m.beam.z_R * m.units.scale("length"), expect * ps_si, dp * ps_si, dp / expect - 1,
                         res.field.populations()["e"], res.report.max_change)]
    # three-level Rabi check against the effective two-level formula
    cs = m.couplings
    k_L = 2 * np.pi / m.beam.wavelength
    e2l = effective_hamiltonian(cs)
    grid = _oracle_grid(m, psi.dp[2], k_L * m.units.hbar)
    f0 = go.gaussian_field(grid, psi, "g", names=("a", "e", "g"))
    s = m.cfg.values["sequence"]
    t_end = m.t(s["t_end_s"]) if s["t_end_s"] is not None else 2 * np.pi / e2l.Omega_eff
    res = go.propagate_three_level(f0, cs, t_end, n["steps"], k_L=k_L, mass=m.species.M,
                                   n_record=min(n["steps"], s["n_points"] - 1), tol=n["tol"])
    Pe, Pg = rabi_populations(res.times, e2l)
    header = ["t_s", "P_e_grid", "P_e_formula", "P_g_grid", "P_g_formula", "P_a_grid"]
    rows = [(m.t_si(t), res.populations["e"][i], Pe[i], res.populations["g"][i], Pg[i], res.populations["a"][i])
            for i, t in enumerate(res.times)]
    return header, rows


COMMANDS = {"rabi": cmd_rabi, "pulse": cmd_pulse, "beam": cmd_beam, "ifo": cmd_ifo, "oracle": cmd_oracle}


# output ---------------------------------------------------------------------------

def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_cell(x) for x in r])
    return buf.getvalue()


PLOT_TEMPLATE = '''import csv
import matplotlib.pyplot as plt

with open({csv!r}, newline="") as fh:
    rows = list(csv.DictReader(fh))
x = [float(r[{x!r}]) for r in rows]
for col in {ys!r}:
    plt.plot(x, [float(r[col]) for r in rows], label=col)
plt.xlabel({x!r})
plt.legend()
plt.savefig({png!r}, dpi=150)
'''

PLOT_COLUMNS = {
    "rabi": ("t_s", ["P_g", "P_e"]),
    "beam": ("Z_m", ["inv_w_1_m", "inv_w_expanded_1_m"]),
    "oracle": ("t_s", ["P_e_grid", "P_e_formula"]),
}


def write_outputs(out_dir: Path, name: str, header, rows, plot: bool, prefix: str = "") -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{prefix}{name}.csv"
    path.write_bytes(csv_text(header, rows).encode("utf-8"))
    if plot:
        x, ys = PLOT_COLUMNS.get(name, (header[0], [h for h in header if h.startswith("residual")
                                                   or h == "richardson_ratio"][:3]))
        if x not in header or not ys:
            x, ys = header[0], [h for h in header[-2:]]
        script = PLOT_TEMPLATE.format(csv=path.name, x=x, ys=[y for y in ys if y in header],
                                      png=f"{prefix}{name}.png")
        (out_dir / f"{prefix}plot_{name}.py").write_bytes(script.encode("utf-8"))
    return path


# sweep ----------------------------------------------------------------------------

def parse_axis(spec: str):
    path, _, vals = spec.partition("=")
    sec, _, key = path.strip().partition(".")
    if sec not in SCHEMA or key not in SCHEMA[sec]:
        raise ConfigError([f"{path.strip()}: unknown sweep axis"])
    items = [v.strip() for v in vals.split(",") if v.strip()]
    if not items:
        raise ConfigError([f"{path.strip()}: sweep axis has no values"])
    typ = SCHEMA[sec][key][0]
    try:
        parsed = [_convert(typ, v) for v in items]
    except ValueError as exc:
        raise ConfigError([f"{path.strip()}: {exc}"]) from None
    return f"{sec}.{key}", sorted(set(parsed))


def _run_point(payload):
    text, overrides, command, argd = payload
    args = argparse.Namespace(**argd)
    try:
        cfg = parse_config(text, overrides)
        header, rows = COMMANDS[command](build_model(cfg), args)
        return "ok", header, rows
    except go.ConvergenceError as exc:
        return "convergence", None, str(exc)
    except Exception as exc:  # recorded in the failure manifest
        return "error", None, f"{type(exc).__name__}: {exc}"


RESIDUAL_COLUMN = {"ifo": ("residual_dphi_minus_rad", "residual_double_diff_rad")}


def sweep(cfg_text: str, axes, command: str, args, workers: int = 1):
    """Cartesian-product runs; returns (header, rows, failures)."""
    if not 1 <= len(axes) <= 3:
        raise ConfigError(["sweep needs between one and three axes"])
    names = [a[0] for a in axes]
    points = list(itertools.product(*[a[1] for a in axes]))
    argd = {k: v for k, v in vars(args).items() if k in ("scheme", "double_diff", "kind", "oracle")}
    payloads = [(cfg_text, [f"{n}={_fmt_raw(v)}" for n, v in zip(names, pt)] + list(args.set or []), command, argd)
                for pt in points]
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_point, payloads))
    else:
        results = [_run_point(p) for p in payloads]
    header, rows, failures = None, [], []
    for pt, (status, h, out) in zip(points, results):
        if status != "ok":
            failures.append(tuple(pt) + (status, out))
            continue
        header = header or h
        for i, r in enumerate(out):
            rows.append(tuple(pt) + (i,) + tuple(r))
    if header is None:
        return names + ["row"], [], failures
    full = names + ["row"] + list(header)
    eps_axis = "atom.epsilon" if "atom.epsilon" in names else None
    res_col = next((c for c in RESIDUAL_COLUMN.get(command, ()) if c in full), None)
    if eps_axis and res_col:
        ie, ir = full.index(eps_axis), full.index(res_col)
        lookup = {}
        for r in rows:
            key = tuple(x for j, x in enumerate(r[:len(names) + 1]) if j != ie)
            lookup[(key, r[ie])] = r[ir]
        new = []
        for r in rows:
            key = tuple(x for j, x in enumerate(r[:len(names) + 1]) if j != ie)
            half = lookup.get((key, r[ie] / 2))
            ratio = abs(r[ir]) / abs(half) if half not in (None, 0.0) else None
            new.append(r + (ratio,))
        rows, full = new, full + ["richardson_ratio"]
    return full, rows, failures


# entry point ----------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="e1m1clock", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("command", choices=sorted(list(COMMANDS) + ["sweep"]))
    p.add_argument("--config", type=Path, help="sectioned key = value config file")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--workers", type=int, default=None, help="parallel sweep workers (env E1M1_WORKERS)")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")
    p.add_argument("--scheme", choices=("a", "b"))
    p.add_argument("--double-diff", action="store_true", dest="double_diff")
    p.add_argument("--kind", choices=("pi", "pi_half"))
    p.add_argument("--oracle", choices=("kick", "rabi"))
    p.add_argument("--plot", action="store_true", help="also write a plotting script")
    p.add_argument("--command", dest="sweep_command", choices=sorted(COMMANDS), default="ifo",
                   help="command run at each sweep point")
    p.add_argument("--axis", action="append", metavar="SECTION.KEY=v1,v2,...", help="sweep axis (up to three)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = parse_config(text, args.set or [])
        plot = args.plot or cfg.get("output", "plot")
        prefix = cfg.get("output", "prefix")
        if args.command == "sweep":
            workers = args.workers or int(os.environ.get("E1M1_WORKERS", "1") or 1)
            axes = [parse_axis(a) for a in (args.axis or [])]
            header, rows, failures = sweep(text, axes, args.sweep_command, args, workers)
            write_outputs(args.out, "sweep", header, rows, plot, prefix)
            if failures:
                names = [a[0] for a in axes]
                write_outputs(args.out, "sweep_failures", names + ["status", "message"], failures, False, prefix)
                print(f"{len(failures)} sweep point(s) failed; see {prefix}sweep_failures.csv", file=sys.stderr)
                if any(f[-2] == "convergence" for f in failures):
                    return EXIT_CONVERGENCE
                return EXIT_INVALID
            return EXIT_OK
        model = build_model(cfg)
        header, rows = COMMANDS[args.command](model, args)
        write_outputs(args.out, args.command, header, rows, plot, prefix)
        return EXIT_OK
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except go.ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
