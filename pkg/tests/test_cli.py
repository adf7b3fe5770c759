import json

import numpy as np
import pytest

from shellhom import geometry as geo
from shellhom.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_INFINITE, EXIT_OK, EXIT_SOLVER, main
from shellhom.io import DEFAULT_CONFIG, config_hash, csv_text, grid_rows, load_config, read_csv

SMALL = """
regimes = [0, 1, "inf"]
[grid]
n_y = 4
n_t = 2
p_leg = 2
x_grid = [9, 9]
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cell_json(tmp_path, capsys):
    cfg = write(tmp_path, "c.toml", SMALL + "[cell]\npoints = [[0.0, 0.0], [0.1, -0.2]]\n")
    code, out, _ = run(capsys, "cell", "--config", cfg, "--jobs", "2")
    assert code == EXIT_OK
    d = json.loads(out)
    assert len(d["forms"]) == 6
    assert d["config_hash"] == load_config(cfg).hash
    f = d["forms"][0]
    assert f["gamma"] == 0.0 and f["point"] == [0.0, 0.0]
    assert np.allclose(np.array(f["m"]).reshape(3, 3)[0, 0], 2 / 9, atol=1e-10)
    assert d["forms"][-1]["gamma"] == "inf"


def test_sweep_csv_sorted(tmp_path, capsys):
    cfg = write(tmp_path, "s.toml", SMALL.replace('[0, 1, "inf"]', '["inf", 2, 0, 0.5]'))
    out_path = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--config", cfg, "--out", str(out_path))
    assert code == EXIT_OK
    text = out_path.read_text()
    assert text.startswith("# config_hash=")
    assert "# max_residual=" in text
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert lines[0] == "gamma,m11,m22,m33,m12,m13,m23"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["0.0", "0.5", "2.0", "inf"]


def test_energy_constant_q(tmp_path, capsys):
    cfg = write(tmp_path, "e.toml", SMALL + '[energy]\nq = [1.0, 1.0, 0.0]\nbasis = "orthonormal"\n'
                + f'integrand = "{tmp_path / "integrand.csv"}"\n')
    code, out, _ = run(capsys, "energy", "--config", cfg)
    assert code == EXIT_OK
    reps = json.loads(out)["reports"]
    for r in reps:
        assert r["value"] == pytest.approx(5 / 9 * r["area"], rel=1e-12)
    data = read_csv(str(tmp_path / "integrand.csv"), ["z1", "z2", "integrand"])
    assert data.shape == (81, 3) and np.allclose(data[:, 2], 5 / 9)


def test_energy_non_isometric_exit(tmp_path, capsys):
    cap = ((-0.4, 0.4), (-0.4, 0.4))
    grid = geo.ChartGrid.uniform(cap, 9)
    u = geo.SphereCap(1.0, cap).sample(grid) * np.array([1.0, 1.2, 1.0])
    path = write(tmp_path, "u.csv", csv_text(["z1", "z2", "x", "y", "z"], grid_rows(grid, u)))
    cfg = write(tmp_path, "e.toml", SMALL + f'[energy]\nimmersion = "{path}"\n')
    code, out, err = run(capsys, "energy", "--config", cfg)
    assert code == EXIT_INFINITE
    assert "not isometric" in err
    assert all(r["status"] == "infinite" and "value" not in r for r in json.loads(out)["reports"])


def test_energy_identity_immersion(tmp_path, capsys):
    cfg = write(tmp_path, "e.toml", SMALL + '[energy]\nimmersion = "identity"\n')
    code, out, _ = run(capsys, "energy", "--config", cfg)
    assert code == EXIT_OK
    assert all(abs(r["value"]) <= 1e-10 for r in json.loads(out)["reports"])


def test_recover_manufactured(tmp_path, capsys):
    cfg = write(tmp_path, "r.toml", SMALL.replace("x_grid = [9, 9]", "x_grid = [33, 33]"))
    out_path = str(tmp_path / "w.csv")
    code, _, err = run(capsys, "recover", "--config", cfg, "--out", out_path)
    assert code == EXIT_OK and "relative residual" in err
    w = read_csv(out_path, ["z1", "z2", "w1", "w2", "w3"])
    assert w.shape == (33 * 33, 5)
    meta = [ln for ln in open(out_path) if ln.startswith("# relative_residual=")]
    assert float(meta[0].split("=")[1]) <= 1e-6


def test_recover_from_csv_datum(tmp_path, capsys):
    grid = geo.ChartGrid.uniform(((-0.4, 0.4), (-0.4, 0.4)), 9)
    B = np.zeros(grid.shape + (3,))
    path = write(tmp_path, "B.csv", csv_text(["z1", "z2", "B11", "B22", "B12"], grid_rows(grid, B)))
    cfg = write(tmp_path, "r.toml", SMALL + f'[recover]\nB = "{path}"\n')
    code, out, _ = run(capsys, "recover", "--config", cfg)
    assert code == EXIT_OK
    vals = np.array([[float(v) for v in ln.split(",")] for ln in out.splitlines()[4:]])
    assert np.all(vals[:, 2:] == 0)


def test_recover_flat_chart_is_solver_failure(tmp_path, capsys):
    cfg = write(tmp_path, "f.toml", SMALL + '[chart]\nkind = "flat"\n')
    code, _, err = run(capsys, "recover", "--config", cfg)
    assert code == EXIT_SOLVER and "not uniformly convex" in err


def test_check_passes_and_writes_report(tmp_path, capsys):
    out_path = tmp_path / "rep.json"
    code, out, _ = run(capsys, "check", "--out", str(out_path), "--jobs", "1")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert len(lines) == 6 and all(ln.startswith("PASS") for ln in lines)
    rep = json.loads(out_path.read_text())
    assert rep["passed"] and rep["config_hash"] == config_hash(load_config().raw)


def test_check_loose_tolerance_fails(tmp_path, capsys):
    cfg = write(tmp_path, "l.toml", "[solver]\ntol = 1e-2\n")
    code, out, err = run(capsys, "check", "--config", cfg)
    assert code == EXIT_CHECK
    assert "FAIL oracle_equivalence" in out and "first failing check: oracle_equivalence" in err


def test_check_flat_chart_fails_recovery(tmp_path, capsys):
    cfg = write(tmp_path, "f.toml", '[chart]\nkind = "flat"\n')
    code, out, _ = run(capsys, "check", "--config", cfg)
    assert code == EXIT_CHECK
    assert "FAIL recovery: error=NotConvex" in out


@pytest.mark.parametrize("text, fragment", [
    ("regimes = [-1]", "invalid regime"),
    ("regimes = []", "empty"),
    ("[grid]\nn_y = 5", "n_y"),
    ("[grid]\nx_grid = 3", "x_grid"),
    ("[solver]\ntol = 2.0", "tol"),
    ('[chart]\nkind = "torus"', "chart kind"),
    ('[material]\nkind = "foam"', "material kind"),
    ("this is = = not toml", "invalid TOML"),
])
def test_config_errors(tmp_path, capsys, text, fragment):
    cfg = write(tmp_path, "bad.toml", text + "\n")
    code, _, err = run(capsys, "cell", "--config", cfg)
    assert code == EXIT_CONFIG
    assert fragment in err


def test_missing_config_file(capsys):
    code, _, err = run(capsys, "cell", "--config", "/nonexistent/x.toml")
    assert code == EXIT_CONFIG and "cannot read" in err


def test_bad_jobs(capsys):
    assert run(capsys, "cell", "--jobs", "0")[0] == EXIT_CONFIG


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_solver_failure_exit(tmp_path, capsys):
    cfg = write(tmp_path, "n.toml", SMALL + '[material]\nkind = "laminate"\nphase_a = {mu = 1.0, lam = 1.0}\n'
                'phase_b = {mu = 50.0, lam = 2.0}\n[solver]\ntol = 1e-13\nmax_iter = 1\n')
    code, _, err = run(capsys, "cell", "--config", cfg)
    assert code == EXIT_SOLVER and "no convergence" in err


def test_defaults_are_valid():
    cfg = load_config()
    assert [str(g) for g in cfg.regimes] == ["0.0", "1.0", "inf"]
    assert cfg.raw["grid"] == DEFAULT_CONFIG["grid"]
