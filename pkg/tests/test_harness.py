import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from hexllg.harness import io
from hexllg.harness.cli import main
from hexllg.harness.config import ConfigError, config_from_dict, read_config
from hexllg.harness.convergence import run_convergence
from hexllg.harness.simulate import run_simulate
from hexllg.harness.verify import corrupt_neighbors, run_verify
from hexllg.lattice import build_lattice

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


def zeeman_config(out):
    return {
        "lattice": {"n1": 2, "n2": 3, "h": 1.0},
        "params": {"J1": 1.0, "J2": 0.5, "mu": 1.0, "alpha": 0.2},
        "coeffs": {"B": {"kind": "constant", "value": [0.0, 0.0, 1.5]}},
        "initial": {"kind": "uniform", "direction": [0.0, 0.0, 1.0]},
        "time": {"t_end": 1.0, "dt": 0.1, "snapshot_times": [0.0, 1.0]},
        "outputs": {"directory": str(out)},
    }


def small_ladder(**time):
    t = {"t_end": 0.1, "dt_rule": {"c": 0.1}, "samples": 3}
    t.update(time)
    return {
        "lattice": {"n1": 2, "n2": 4, "h0": 0.5, "levels": 3},
        "params": {"J1": 1.0, "alpha": 0.5},
        "initial": {"kind": "gaussian_tilt", "center": [0.866, 1.5], "width": 0.5,
                    "amplitude": 1.0},
        "time": t,
        "integrator": "rk4",
    }


# ---- simulate


def test_parallel_state_is_stationary(tmp_path):
    res = run_simulate(config_from_dict(zeeman_config(tmp_path)))
    np.testing.assert_allclose(res.final.m, np.tile([0, 0, 1.0], (12, 1)), atol=1e-15)
    e = np.array(res.monitors.energy_star)
    assert np.all(e == e[0])
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "run.json", "series.csv", "snapshot_000.csv", "snapshot_001.csv"]
    manifest = json.loads((tmp_path / "run.json").read_text())
    assert manifest["steps"] == 10 and manifest["t_star_end"] == 1.0
    assert manifest["physical_time_end"] == pytest.approx(1.04)


def test_macrospin_config_matches_tanh_law():
    cfg = read_config(CONFIGS / "macrospin.json")
    res = run_simulate(cfg, out_dir=False)
    bt = cfg.params.mu * 2.0 / cfg.params.h_star**2
    m0z = cfg.initial["direction"][2]
    expect = np.tanh(cfg.params.alpha * bt * cfg.time.t_end + np.arctanh(m0z))
    assert np.max(np.abs(res.final.m[:, 2] - expect)) <= 1e-6


def test_exchange_relaxation_monitors():
    cfg = read_config(CONFIGS / "relax_gaussian.json")
    res = run_simulate(cfg, out_dir=False)
    e = np.array(res.monitors.energy_star)
    g1 = np.array([g[0] for g in res.monitors.grad_norm_sq])
    assert np.all(np.diff(e) <= 1e-12)
    assert np.all(g1 <= g1[0] * (1 + 1e-12))
    assert len(res.snapshots) == 3


def test_simulate_is_byte_reproducible(tmp_path):
    raw = json.loads((CONFIGS / "meron.json").read_text())
    raw["time"]["t_end"] = 0.05
    raw["time"]["snapshot_times"] = [0.0, 0.05]
    raw["outputs"]["directory"] = str(tmp_path / "out")
    files = ("run.json", "series.csv", "snapshot_000.csv", "snapshot_001.csv")
    runs = []
    for _ in range(2):
        assert main(["simulate", str(write(tmp_path, raw))]) == 0
        runs.append([(tmp_path / "out" / f).read_bytes() for f in files])
    assert runs[0] == runs[1]


def test_simulate_rejects_negative_coefficients(tmp_path):
    raw = zeeman_config(tmp_path)
    raw["coeffs"]["lambda"] = {"kind": "constant", "value": -0.5}
    with pytest.raises(ConfigError, match="coeffs.lambda"):
        run_simulate(config_from_dict(raw), out_dir=False)


def test_simulate_refuses_a_ladder():
    with pytest.raises(ConfigError, match="single lattice"):
        run_simulate(config_from_dict(small_ladder()), out_dir=False)


# ---- cli exit codes


def test_cli_validation_error_exit_1(tmp_path, capsys):
    raw = zeeman_config(tmp_path)
    raw["params"]["alpha"] = -2
    raw["lattice"]["bogus"] = 1
    assert main(["simulate", str(write(tmp_path, raw))]) == 1
    err = capsys.readouterr().err
    assert "params.alpha" in err and "lattice.bogus" in err


def test_cli_numerical_failure_exit_2(tmp_path, capsys):
    raw = zeeman_config(tmp_path)
    raw["params"]["J1"] = 200.0
    raw["initial"] = {"kind": "random_smooth", "seed": 1}
    raw["integrator"] = "midpoint"
    raw["time"] = {"t_end": 1.0, "dt": 0.5}
    assert main(["simulate", str(write(tmp_path, raw))]) == 2
    assert "reduce dt" in capsys.readouterr().err


def test_cli_verify_exit_codes(tmp_path, capsys):
    report = tmp_path / "verify.json"
    assert main(["verify", "--skip-orders", "--trials", "2", "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["passed"] is True
    assert main(["verify", "--skip-orders", "--trials", "1", "--corrupt-neighbors"]) == 3
    assert "FAILURES" in capsys.readouterr().out


def test_cli_resample(tmp_path):
    lat = build_lattice(3, 4, 0.5)
    rng = np.random.default_rng(0)
    m = rng.standard_normal((lat.num_nodes, 3))
    io.write_snapshot(tmp_path / "s.csv", lat, m / np.linalg.norm(m, axis=1, keepdims=True))
    assert main(["resample", str(tmp_path / "s.csv"), "--nx", "6", "--ny", "5"]) == 0
    lines = (tmp_path / "s_grid.csv").read_text().splitlines()
    assert len(lines) == 31 and lines[0] == ",".join(io.GRID_COLUMNS)
    out = tmp_path / "step.csv"
    assert main(["resample", str(tmp_path / "s.csv"), "--nx", "6", "--ny", "5", "--kind", "step",
                 "--out", str(out)]) == 0
    vals = np.array([[float(v) for v in ln.split(",")[4:]] for ln in out.read_text().splitlines()[1:]])
    np.testing.assert_allclose(np.linalg.norm(vals, axis=1), 1.0, atol=1e-15)
    (tmp_path / "bad.csv").write_text("nope\n")
    assert main(["resample", str(tmp_path / "bad.csv"), "--nx", "6", "--ny", "5"]) == 1


def test_cli_convergence(tmp_path):
    out = tmp_path / "conv"
    assert main(["convergence", str(write(tmp_path, small_ladder())), "--out", str(out)]) == 0
    report = json.loads((out / "convergence.json").read_text())
    assert report["passed"] and len(report["levels"]) == 3


# ---- verify


def test_verify_default_passes():
    report = run_verify(orders=False, trials=3)
    assert report.passed, report.failures()
    groups = {c.group for c in report.checks}
    assert groups == {"lattice", "calculus", "model", "interpolation", "dynamics"}


def test_verify_corrupted_table_fails_summation_by_parts():
    report = run_verify(orders=False, trials=1, corrupt=True)
    assert not report.passed
    assert "calculus.sbp_kappa_k2" in report.failures()


def test_corruption_breaks_symmetry_only_in_copy():
    lat = build_lattice(4, 4, 1.0)
    bad = corrupt_neighbors(lat)
    assert not np.array_equal(bad.neighbors[2], lat.neighbors[2])
    assert np.array_equal(lat.neighbors[2], build_lattice(4, 4, 1.0).neighbors[2])


# ---- convergence


def test_small_ladder_converges():
    res = run_convergence(config_from_dict(small_ladder()), out_dir=False)
    rep = res.report
    assert rep["monotone"] == {"to_continuum": True, "self": True}
    first = [lvl["l2_to_continuum"][0] for lvl in rep["levels"]]
    assert first[0] > first[1] > first[2]
    assert len(rep["times"]) == 3 and rep["times"][-1] == 0.1


def test_degenerate_ladder_has_zero_self_distance():
    raw = small_ladder()
    raw["lattice"]["ratio"] = 1
    res = run_convergence(config_from_dict(raw), out_dir=False)
    for lvl in res.report["levels"][:-1]:
        assert lvl["l2_to_next"] == [0.0] * 3
    assert not res.passed


@pytest.mark.parametrize("patch,fragment", [
    ({"lattice": {"n1": 2, "n2": 4, "h": 0.5}}, "ladder"),
    ({"lattice": {"n1": 2, "n2": 4, "h0": 0.5, "levels": 2}}, "lattice.levels"),
    ({"lattice": {"n1": 3, "n2": 4, "h0": 0.5, "levels": 3}}, "rectangular"),
    ({"initial": {"kind": "random_smooth", "seed": 0}}, "closed-form"),
    ({"time": {"t_end": 0.1, "dt": 0.01}}, "dt_rule"),
    ({"time": {"t_end": 0.0, "dt_rule": {"c": 0.1}}}, "t_end"),
])
def test_convergence_validation(patch, fragment):
    raw = small_ladder()
    raw.update(patch)
    with pytest.raises(ConfigError, match=fragment):
        run_convergence(config_from_dict(raw), out_dir=False)


def test_console_script_installed():
    assert shutil.which("hexllg") is not None
