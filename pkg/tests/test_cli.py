import hashlib
import json
import numpy as np
import pytest

from fbcool.cli import main
from fbcool.constants import AMU, HBAR
from fbcool.io import OUTPUT_ENV, read_csv
from fbcool.optics import wavenumber
from fbcool.sim import drag_config, recoil_system


def run_cli(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def load(out, fname):
    return json.loads((out / fname).read_text())


def test_force_curve_unity_gain_row(tmp_path):
    code, out = run_cli(tmp_path, "force-curve", "--loop", "a", "--vmax", "40", "--points", "400")
    assert code == 0
    rows = read_csv(out / "force_curve.csv")
    assert len(rows) == 401
    row = next(r for r in rows if float(r["v"]) == 1.0)
    assert float(row["f"]) == -0.5


def test_force_curve_loop_d(tmp_path):
    code, out = run_cli(tmp_path, "force-curve", "--loop", "d", "--vmax", "5", "--points", "50")
    assert code == 0
    rows = read_csv(out / "force_curve.csv")
    nu = np.array([float(r["v"]) for r in rows])
    f = np.array([float(r["f"]) for r in rows])
    np.testing.assert_allclose(f, -nu / (1 + nu**4 / 4), rtol=1e-12, atol=1e-300)


def test_force_curve_all_loops_and_plot(tmp_path):
    code, out = run_cli(tmp_path, "force-curve", "--loop", "all", "--points", "40", "--plot")
    assert code == 0
    loops = {r["loop"] for r in read_csv(out / "force_curve.csv")}
    assert len(loops) == 4
    assert (out / "force_curve.png").stat().st_size > 1000


def test_custom_loop_with_origin_pole_rejected(tmp_path):
    code, _ = run_cli(tmp_path, "force-curve", "--loop", "custom", "--num", "0,1", "--den", "1,0")
    assert code == 2


def test_custom_loop_accepted(tmp_path):
    code, out = run_cli(tmp_path, "force-curve", "--loop", "custom", "--num", "0,1", "--den", "1",
                        "--points", "4", "--vmax", "4")
    assert code == 0
    assert float(read_csv(out / "force_curve.csv")[1]["f"]) == -0.5


def test_unstable_loop_exit_code(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "force-curve", "--loop", "custom", "--num", "-2", "--den", "1,1")
    assert code == 3
    assert "poles" in capsys.readouterr().err
    code, out = run_cli(tmp_path, "loop-check", "--loop", "custom", "--num", "-2", "--den", "1,1",
                        name="lc")
    assert code == 3 and load(out, "loop_check.json")["stable"] is False


def test_loop_check_stable(tmp_path):
    code, out = run_cli(tmp_path, "loop-check", "--loop", "c")
    assert code == 0
    data = load(out, "loop_check.json")
    assert data["stable"] and all(p[0] < 0 for p in data["poles"])


def test_temperature_examples(tmp_path):
    code, out = run_cli(tmp_path, "temperature", "--eta", "1", "--q", "1")
    assert code == 0
    d = load(out, "temperature.json")
    assert d["kBT_over_Er"] == pytest.approx(16.0, rel=1e-12)
    k = wavenumber(852e-9)
    assert d["u_opt"] == pytest.approx(2 * HBAR * k / (133 * AMU), rel=1e-12)
    code, out = run_cli(tmp_path, "temperature", "--eta", "1", "--q", "0.5", name="half")
    assert load(out, "temperature.json")["kBT_over_Er"] == pytest.approx(24.0, rel=1e-12)
    code, _ = run_cli(tmp_path, "temperature", "--q", "0", name="bad")
    assert code == 2


def test_ensemble_presets(tmp_path):
    code, out = run_cli(tmp_path, "ensemble")
    assert code == 0
    rows = {r["label"]: r for r in read_csv(out / "scenarios.csv")}
    assert 0.07 <= float(rows["cah-trap"]["gamma_d"]) <= 0.15
    assert 230 <= float(rows["cah-room"]["gamma_d"]) <= 510
    assert list(rows["cah-trap"]) == ["label", "N", "T", "m", "lambda", "vth", "eta_gamma_sc",
                                      "gamma_bar", "gamma_d", "L"]


def test_ensemble_zero_atoms(tmp_path):
    code, out = run_cli(tmp_path, "ensemble", "--N", "0", "--T", "1", "--mass-amu", "41",
                        "--wavelength", "760e-9")
    assert code == 0
    assert float(read_csv(out / "scenarios.csv")[0]["gamma_d"]) == 0.0


def test_noise_spectrum(tmp_path):
    code, out = run_cli(tmp_path, "noise-spectrum", "--loop", "a", "--q", "0.5", "--N", "1e3",
                        "--vth", "0.1", "--zeta", "0.2", "--plot")
    assert code == 0
    rows = read_csv(out / "spectrum.csv")
    assert {r["source"] for r in rows} == {"photon", "detection", "shot", "thermal"}
    assert list(rows[0]) == ["omega", "density", "source"]
    assert (out / "spectrum.png").exists()
    code, _ = run_cli(tmp_path, "noise-spectrum", "--N", "10", name="bad")
    assert code == 2


def test_csv_floats_round_trip(tmp_path):
    _, out = run_cli(tmp_path, "ensemble", "--preset", "cah-room")
    text = (out / "scenarios.csv").read_text().splitlines()[1].split(",")
    for field in text[1:]:
        assert repr(float(field)) == field


@pytest.mark.parametrize("argv", [
    ["force-curve", "--loop", "b", "--points", "50"],
    ["noise-spectrum", "--loop", "c"],
    ["ensemble"],
    ["temperature", "--eta", "2"],
    ["loop-check", "--loop", "d"],
])
def test_reruns_are_byte_identical(tmp_path, argv):
    _, a = run_cli(tmp_path, *argv, name="a")
    _, b = run_cli(tmp_path, *argv, name="b")
    files = sorted(p.name for p in a.iterdir() if p.name != "manifest.json")
    assert files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_manifest_hash(tmp_path):
    _, out = run_cli(tmp_path, "force-curve", "--loop", "c", "--points", "10")
    m = load(out, "manifest.json")
    assert m["config_hash"] == hashlib.sha256((out / "config.json").read_bytes()).hexdigest()
    assert m["command"] == "force-curve"
    assert sorted(p.name for p in out.iterdir() if p.name == "manifest.json") == ["manifest.json"]


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"force-curve": {"loop": "d", "points": 8, "vmax": 2}}))
    code, out = run_cli(tmp_path, "force-curve", "--config", str(cfg), "--points", "4")
    assert code == 0
    rows = read_csv(out / "force_curve.csv")
    assert len(rows) == 5 and float(rows[-1]["v"]) == 2.0
    assert load(out, "config.json")["points"] == 4


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert main(["temperature"]) == 0
    assert (tmp_path / "env" / "temperature" / "temperature.json").exists()


def _sim_config(tmp_path, **over):
    system = recoil_system()
    u = 2 * HBAR * system.k / system.mass
    cfg = drag_config(system, "a", u, [u], periods=2, rolloff_factor=100).to_dict()
    cfg.update(over)
    path = tmp_path / "sim.json"
    path.write_text(json.dumps({"simulate": cfg}))
    return path, system


def test_simulate_drag_and_determinism(tmp_path):
    path, system = _sim_config(tmp_path)
    code, a = run_cli(tmp_path, "simulate", "--config", str(path), "--traces", "--plot", name="a")
    assert code == 0
    res = load(a, "result.json")
    assert res["drag_normalized"][0] == pytest.approx(-0.5, rel=0.05)
    assert (a / "traces.csv").exists() and (a / "traces.png").exists()
    _, b = run_cli(tmp_path, "simulate", "--config", str(path), name="b")
    assert load(b, "result.json")["summary_hash"] == res["summary_hash"]


def test_simulate_dt_violation(tmp_path):
    path, _ = _sim_config(tmp_path)
    d = json.loads(path.read_text())
    d["simulate"]["dt"] *= 10
    path.write_text(json.dumps(d))
    code, out = run_cli(tmp_path, "simulate", "--config", str(path))
    assert code == 2 and not (out / "result.json").exists()


def test_simulate_requires_config(tmp_path):
    code, _ = run_cli(tmp_path, "simulate")
    assert code == 2
