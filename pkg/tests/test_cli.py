import json
import math

import numpy as np
import pytest

from hpzlab import cli
from hpzlab.errors import ConfigError, OracleMismatch
from hpzlab.io import read_csv, write_csv
from hpzlab.presets import PRESETS

SMALL_MU = """
name: small
bath: {gamma: 1e-3, cutoff: 5.0, temperature: 2.0}
system: {alpha0: 2.0}
state: {kind: cat}
grid: {t_max: 4.0, n_points: 21}
outputs: [timescales, coeffs, mu]
"""

SMALL_ECS = """
name: ecs
bath: {gamma: 1e-3, cutoff: 3.0, temperature: 0.0}
state: {kind: ecs, n_modes: 2, alpha2: 4.0}
grid: {t_max: 3.0, n_points: 31}
outputs: [concurrence]
"""


def _cfg(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_csv_round_trip(tmp_path):
    x = np.array([0.1, 1 / 3, 1e-300, -2.5e7])
    write_csv(tmp_path / "a.csv", ["x", "y"], [x, 2 * x], {"b": 1.0, "a": [1, 2], "s": "text"})
    meta, header, rows = read_csv(tmp_path / "a.csv")
    assert header == ["x", "y"] and np.array_equal(rows[:, 0], x)
    assert list(meta) == ["a", "b", "s"] and json.loads(meta["a"]) == [1, 2]
    with pytest.raises(ValueError):
        write_csv(tmp_path / "b.csv", ["x", "y"], [x, x[:2]])


def test_csv_text_column(tmp_path):
    write_csv(tmp_path / "a.csv", ["q0", "branch"], [[1.0, 2.0], np.array(["linear", "quadratic"])])
    _, _, rows = read_csv(tmp_path / "a.csv")
    assert rows == [[1.0, "linear"], [2.0, "quadratic"]]


def test_presets_match_captions():
    for name in ["fig1", "fig2a", "fig2b"] + [f"fig3{c}" for c in "abcdef"] + [f"fig4{c}" for c in "abcd"]:
        assert name in PRESETS
        cli.preset(name)
    assert cli.preset("fig3c").bath.cutoff == 2.0
    assert cli.preset("fig3d").system.alpha0 == pytest.approx(500.0)
    assert cli.preset("fig3f").compare_gamma == 0.1
    f4 = cli.preset("fig4d")
    assert (f4.bath.gamma, f4.bath.cutoff, f4.bath.temperature) == (1e-3, 1e-3, 0.0)
    assert f4.alpha2 == pytest.approx(3500.0**2)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        cli.preset("fig9")
    with pytest.raises(ConfigError):
        cli.load_config(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError):
        cli.Scenario.from_dict({"bath": {"gamma": "x", "cutoff": 1.0}})
    with pytest.raises(ConfigError):
        cli.Scenario.from_dict({"bath": {"gamma": 1.0, "cutoff": 1.0}, "outputs": ["concurrence"]})
    with pytest.raises(ConfigError):
        cli.Scenario.from_dict({"bath": {"gamma": 1.0, "cutoff": 1.0}, "outputs": ["nope"]})
    with pytest.raises(ConfigError):
        cli.Scenario.from_dict({"bath": {"gamma": 1.0, "cutoff": 1.0}, "outputs": ["tau_d_sweep"]})


def test_yaml_reads_exponent_strings(tmp_path):
    sc = cli.load_config(_cfg(tmp_path, SMALL_MU))
    assert sc.bath.gamma == 1e-3 and sc.system.alpha0 == pytest.approx(2.0)
    assert sc.with_grid(n_points=5).grid.n_points == 5


def test_exit_codes(tmp_path, capsys):
    cfg = _cfg(tmp_path, SMALL_MU)
    assert cli.main(["timescales", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert cli.main(["preset", "fig9", "--out", str(tmp_path / "o")]) == 2
    bad = _cfg(tmp_path, "bath: {gamma: -1, cutoff: 1}\n", "bad.yaml")
    assert cli.main(["coeffs", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    # a triple root of the response polynomial is reported as a numerical failure
    triple = _cfg(tmp_path, f"bath: {{gamma: {8 / 9!r}, cutoff: 3.0}}\nsystem: {{omega0: {1 / math.sqrt(3)!r}}}\n"
                  "grid: {t_max: 1.0, n_points: 5}\n", "triple.yaml")
    assert cli.main(["decohere", "--config", str(triple), "--out", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err
    assert "DegenerateRoots" in err or "degenerate" in err.lower()


def test_oracle_mismatch_exit(tmp_path, monkeypatch):
    cfg = _cfg(tmp_path, SMALL_ECS)
    monkeypatch.setattr(cli.ent, "wootters_concurrence", lambda rho: -1.0)
    assert cli.main(["concurrence", "--config", str(cfg), "--out", str(tmp_path / "o"), "--check-oracle"]) == 4


def test_run_outputs_and_determinism(tmp_path):
    sc = cli.load_config(_cfg(tmp_path, SMALL_MU))
    r1 = cli.run(sc, tmp_path / "a", check_oracle=True)
    r2 = cli.run(sc, tmp_path / "b")
    assert r1.ok and r1.exit_code() == 0
    assert r1.summary["invariants"] == "ok"
    assert r1.oracle["mu_vs_quadrature_rel"] <= 1e-6
    assert r1.oracle["diffusion_vs_nested_rel"] <= 1e-6
    for name in ("coeffs.csv", "mu.csv", "moments.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    _, header, rows = read_csv(tmp_path / "a" / "moments.csv")
    assert header == cli.MOMENT_COLUMNS and rows.shape == (21, 9)
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["regime"] == r1.regime and "regime_tau_b_cutoff" in rep["summary"]
    script = tmp_path / "a" / "plot_small.py"
    assert script.exists()
    compile(script.read_text(), str(script), "exec")


def test_concurrence_run_with_oracle(tmp_path):
    sc = cli.load_config(_cfg(tmp_path, SMALL_ECS))
    rep = cli.run(sc, tmp_path, check_oracle=True)
    assert rep.ok and rep.oracle["concurrence_vs_wootters_abs"] <= 1e-10
    _, header, rows = read_csv(tmp_path / "concurrence.csv")
    assert header[:2] == ["t", "c"] and rows[0, 1] == pytest.approx(math.tanh(8.0), rel=1e-12)


def test_sweep_run(tmp_path):
    raw = {"bath": {"gamma": 1e-5, "cutoff": 10.0, "temperature": 50.0}, "outputs": ["tau_d_sweep"],
           "sweep": {"q0_min": 1.0, "q0_max": 1e4, "n": 12, "cutoffs": [10.0]}}
    rep = cli.run(cli.Scenario.from_dict(raw, "sw"), tmp_path)
    assert rep.ok
    lo, hi = rep.summary["tau_d_slopes"]["10"]
    assert lo == pytest.approx(-2.0, abs=0.1) and hi == pytest.approx(-1.0, abs=0.1)
    _, header, rows = read_csv(tmp_path / "taud_cutoff10.csv")
    assert header == ["q0", "tau_d", "branch"] and len(rows) == 12


def test_oracle_error_type_maps_to_exit_code():
    rep = cli.RunReport(scenario={}, regime="x", timescales={})
    cli._failure(rep, "mu", OracleMismatch("x"))
    cli._failure(rep, "mu", ArithmeticError("y"))
    assert rep.exit_code() == 3
    rep.failures = rep.failures[:1]
    assert rep.exit_code() == 4
