import csv

import numpy as np
import pytest

from e1m1clock import cli


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def run(tmp_path, *argv, config=None):
    args = list(argv) + ["--out", str(tmp_path)]
    if config is not None:
        cfg = tmp_path / "run.ini"
        cfg.write_text(config, encoding="utf-8")
        args += ["--config", str(cfg)]
    return cli.main(args)


def test_config_collects_all_errors():
    text = "[beam]\nw0_m = -1\n[sequence]\nT2_s = 0.01\nbogus = 3\n[nowhere]\nx = 1\n"
    with pytest.raises(cli.ConfigError) as info:
        cli.parse_config(text)
    errs = " | ".join(info.value.errors)
    for needle in ("beam.w0_m: must be positive", "sequence.bogus: unknown key", "nowhere: unknown section",
                   "sequence.T2_s"):
        assert needle in errs
    assert len(info.value.errors) >= 4


def test_config_syntax_error_has_line():
    with pytest.raises(cli.ConfigError) as info:
        cli.parse_config("[atom]\nM_kg = 1\nno equals sign here\n")
    assert "line 3" in info.value.errors[0]
    with pytest.raises(cli.ConfigError, match="line 3"):
        cli.parse_config("[atom]\nM_kg = 1\nM_kg = 2\n")


def test_config_cross_checks():
    with pytest.raises(cli.ConfigError, match="inconsistent"):
        cli.parse_config("[beam]\nw0_m = 1e-3\nz_R_m = 5\nwavelength_m = 698.4e-9\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config("[couplings]\nomega_E_rad_s = 1e4\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config("[sequence]\ntau_s = -0.1\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config("[numerics]\ngrid_points = 100\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config("", ["atom.epsilon=0.5"])


def test_invalid_config_exit_code(tmp_path, capsys):
    assert run(tmp_path, "rabi", config="[beam]\nw0_m = -1\nz_R_m = 0\n") == 2
    err = capsys.readouterr().err
    assert "beam.w0_m" in err and "beam.z_R_m" in err
    assert run(tmp_path, "rabi", "--set", "nope.x=1") == 2
    assert cli.main(["rabi", "--config", str(tmp_path / "missing.ini")]) == 2


def test_rabi_resonant_peak(tmp_path):
    assert run(tmp_path, "rabi") == 0
    header, rows = read_csv(tmp_path / "rabi.csv")
    assert header[:3] == ["t_s", "P_g", "P_e"]
    Pe = np.array([float(r[2]) for r in rows])
    assert Pe.max() == pytest.approx(1.0, abs=1e-3)
    om = float(rows[0][header.index("Omega_eff_rad_s")])
    assert om == pytest.approx(500.0, rel=1e-9)


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "ifo", "--scheme", "a") == 0
    assert (a / "ifo.csv").read_bytes() == (b / "ifo.csv").read_bytes()
    assert b"\r" not in (a / "ifo.csv").read_bytes()


def test_ifo_scheme_a_rows(tmp_path):
    assert run(tmp_path, "ifo", "--scheme", "a") == 0
    header, rows = read_csv(tmp_path / "ifo.csv")
    assert len(rows) == 2
    assert "phase_floor_rad" in header


def test_double_diff_single_row(tmp_path):
    assert run(tmp_path, "ifo", "--scheme", "a", "--double-diff") == 0
    header, rows = read_csv(tmp_path / "ifo.csv")
    assert len(rows) == 1
    for col in ("double_diff_rad", "double_diff_ref_rad", "phase_floor_rad"):
        assert col in header


def test_scheme_b(tmp_path):
    assert run(tmp_path, "ifo", "--scheme", "b") == 0
    header, rows = read_csv(tmp_path / "ifo.csv")
    assert "dphi_plus_rad" in header or any(h.startswith("dphi_plus") for h in header)
    assert rows


def test_pulse_and_beam(tmp_path):
    assert run(tmp_path, "pulse", "--kind", "pi") == 0
    header, rows = read_csv(tmp_path / "pulse.csv")
    assert len(rows) >= 4
    assert run(tmp_path, "beam") == 0
    header, rows = read_csv(tmp_path / "beam.csv")
    assert header[0] == "Z_m" and len(rows) == 61


def test_plot_script(tmp_path):
    assert run(tmp_path, "rabi", "--plot") == 0
    script = (tmp_path / "plot_rabi.py").read_text()
    assert "rabi.csv" in script
    compile(script, "plot_rabi.py", "exec")


def test_sweep_single_point_matches_single_run(tmp_path):
    single, swept = tmp_path / "s", tmp_path / "w"
    assert run(single, "ifo", "--scheme", "a", "--set", "atom.epsilon=1e-3") == 0
    assert run(swept, "sweep", "--command", "ifo", "--scheme", "a", "--axis", "atom.epsilon=1e-3") == 0
    h1, r1 = read_csv(single / "ifo.csv")
    h2, r2 = read_csv(swept / "sweep.csv")
    assert h2[:2] == ["atom.epsilon", "row"]
    assert [r[2:2 + len(h1)] for r in r2] == r1


DESK_DD = """
[atom]
M_kg = 1.45e-25
epsilon = 1e-3
[couplings]
omega0_rad_s = 500
[gravity]
g_m_s2 = 1e-6
[sequence]
deltaT_s = 0.02
T2_s = 0.04
T3_s = 0.08
tau_s = 0.006
k_p_1_m = 1e5
[wavepacket]
dv_m_s = 1e-5
"""


def test_sweep_richardson_column(tmp_path, monkeypatch):
    monkeypatch.setenv("E1M1_WORKERS", "2")
    assert run(tmp_path, "sweep", "--command", "ifo", "--scheme", "a", "--double-diff",
               "--axis", "atom.epsilon=1e-3,5e-4,2.5e-4", config=DESK_DD) == 0
    header, rows = read_csv(tmp_path / "sweep.csv")
    assert header[-1] == "richardson_ratio"
    ratios = [float(r[-1]) for r in rows if r[-1]]
    assert len(ratios) == 2
    assert all(abs(q - 4) < 0.2 for q in ratios)


def test_sweep_axis_validation(tmp_path):
    assert run(tmp_path, "sweep", "--axis", "atom.nothing=1,2") == 2
    assert run(tmp_path, "sweep") == 2
    many = ["--axis", "atom.epsilon=1e-3", "--axis", "gravity.g_m_s2=1", "--axis", "beam.z_R_m=5",
            "--axis", "beam.w0_m=1e-3"]
    assert run(tmp_path, "sweep", *many) == 2


def test_convergence_exit_code(tmp_path):
    cfg = """
[atom]
epsilon = 1e-3
[beam]
z_R_m = 1e-3
w0_m = 1e-5
[couplings]
Delta_rad_s = 1e5
[numerics]
oracle = kick
grid_points = 256
steps = 2
tol = 1e-12
"""
    assert run(tmp_path, "oracle", config=cfg) == 3


def test_kick_oracle_run(tmp_path):
    assert run(tmp_path, "oracle", "--oracle", "kick", "--set", "atom.epsilon=1e-3") == 0
    header, rows = read_csv(tmp_path / "oracle.csv")
    row = dict(zip(header, rows[0]))
    assert abs(float(row["rel_error"])) < 1e-6
    assert float(row["P_e"]) == pytest.approx(1.0, abs=1e-9)
