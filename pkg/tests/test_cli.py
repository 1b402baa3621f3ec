import io
import json
import shutil
import subprocess

import pytest

from spinbounce.cli import run_cli


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_rigid_text_and_json():
    code, out, _ = run("rigid", "--xdot", "10", "--ydot", "-2", "--omega", "0", "--mu", "0.3", "--r", "0.5")
    assert code == 0
    assert out.splitlines()[:2] == ["case I+", "x_dot 9.1"]
    code, out, _ = run("rigid", "--xdot", "2.5", "--ydot", "-2", "--format", "json")
    doc = json.loads(out)
    assert doc["case"] == "II+" and doc["roll_entry_impulse"] == pytest.approx(2.5 / 1.05)


def test_bounce_csv_to_file(tmp_path):
    path = tmp_path / "t.csv"
    code, out, _ = run("bounce", "--xdot", "0.3", "--omega", "1.0", "-o", str(path))
    assert code == 0 and out == ""
    lines = path.read_text().splitlines()
    assert lines[0].startswith("tau,x,xdot")
    assert lines[-1].split(",")[-1] == "slip+"


def test_sweep_json_with_set_override():
    code, out, _ = run(
        "sweep", "--grid-xdot", "0.3", "--grid-ydot", "-1", "--grid-omega", "0,1", "--set", "model.mu=0.4",
        "--format", "json",
    )
    assert code == 0
    recs = json.loads(out)
    assert len(recs) == 2 and recs[1]["rolled"]


def test_twofold_and_manifold():
    code, out, _ = run("twofold")
    doc = json.loads(out)
    assert (doc["sigma1"], doc["sigma2"]) == (1, -1)
    code, out, _ = run("manifold", "--mu", "0.4", "--xdot", "0.3", "--ydot", "-1", "--lo", "0.5", "--hi", "1.5")
    doc = json.loads(out)
    assert code == 0 and abs(doc["HF"]) < 1e-6 and doc["left_rolled"] and doc["right_rolled"]


def test_perturb_preset():
    code, out, _ = run("perturb", "--preset", "rolling-lift-off")
    doc = json.loads(out) if out.lstrip().startswith("{") else None
    assert code == 0 and doc is not None
    assert doc["B"]["HF"] > 0 > doc["C"]["HF"]


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[rigid]\nmu = 0.8\nr = 0.9\n[initial]\nx_dot = 3\ny_dot = -0.5\nomega = 4\n")
    monkeypatch.setenv("SPINBOUNCE_CONFIG", str(cfg))
    code, out, _ = run("rigid")
    assert out.splitlines()[1] == "x_dot 2.24"


def test_errors_have_codes(tmp_path):
    code, _, err = run("bounce", "--d2", "1.5")
    assert code == 2 and err.startswith("error[config]:")
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\n\nd2 = 3\n")
    code, _, err = run("bounce", "--config", str(bad))
    assert code == 2 and "line 3" in err
    code, _, err = run("bounce", "--y", "0.5")
    assert code == 1 and err.startswith("error[not-in-contact]:")
    code, _, err = run("rigid", "--ydot", "1")
    assert code == 1 and err.startswith("error[not-an-impact]:")
    code, _, err = run("frobnicate")
    assert code == 2 and err.startswith("error[usage]:")
    code, _, err = run("ingest", str(tmp_path / "missing.csv"))
    assert code == 4 and err.startswith("error[io]:")
    code, _, err = run("bounce", "--set", "model.mu")
    assert code == 2


def test_ingest_command(tmp_path, capsys):
    p = tmp_path / "m.csv"
    p.write_text(
        "vx_in[m/s],vy_in[m/s],spin_in[rpm],vx_out[m/s],vy_out[m/s],spin_out[rpm]\n"
        "20,-15,2000,12,6,3000\n20,15,2000,12,6,3000\n"
    )
    code, out, _ = run("ingest", str(p), "--time-unit", "0.001")
    assert code == 0
    assert out.splitlines()[0] == "line,surface,H0,HF" and len(out.splitlines()) == 2
    assert "rejected line 3" in capsys.readouterr().err


def test_console_script_entry_point():
    exe = shutil.which("spinbounce")
    if exe is None:
        pytest.skip("package not installed with its console script")
    proc = subprocess.run([exe, "rigid", "--xdot", "1", "--ydot", "-2"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("case III+")
    proc = subprocess.run([exe, "rigid", "--ydot", "2"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr.startswith("error[not-an-impact]")
