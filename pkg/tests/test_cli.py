import json
import math
import subprocess
import sys

import pytest

from dropletbif.cli import ConfigError, RunConfig, main, parse_config, read_config_file

SMALL_SCAN = ["--sigma-range", "0.36:0.38", "--resolution", "0.01", "--transient", "1000",
              "--keep", "1000", "--generations", "15", "--cap", "20000"]


def run(args, tmp_path, capsys):
    code = main(list(args) + ["--out", str(tmp_path)])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_fixed_points_example(tmp_path, capsys):
    code, out, _ = run(["fixed-points", "--mu", "0.5", "--sigma", "0.45", "--window", "-2:-1"], tmp_path, capsys)
    assert code == 0
    assert "-1.5707963268" in out and "-0.2065077201" in out and "saddle" in out
    doc = json.loads((tmp_path / "fixed_points.json").read_text())
    assert any(abs(r["location"][0] + math.pi / 2) < 1e-9 for r in doc)
    assert (tmp_path / "fixed_points.csv").exists()


def test_empty_window(tmp_path, capsys):
    code, out, _ = run(["fixed-points", "--sigma", "0.45", "--window", "0:0"], tmp_path, capsys)
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "fixed_points.json").read_text()) == []


def test_invalid_mu(tmp_path, capsys):
    code, _, err = run(["fixed-points", "--sigma", "0.45", "--mu", "1.5"], tmp_path, capsys)
    assert code == 2 and "mu must lie in (0,1)" in err


@pytest.mark.parametrize("args,key", [
    (["orbit", "--sigma", "0.45", "--keep", "-1"], "keep"),
    (["orbit", "--sigma", "abc"], "sigma"),
    (["orbit"], "sigma"),
    (["orbit", "--sigma", "0.45", "--x0", "1,2,3"], "x0"),
    (["manifold", "--map", "3d-diagonal", "--sigma", "0.45"], "map"),
    (["orbit", "--sigma", "0.45", "--emit", "png"], "emit"),
    (["render", "--name", "../x.svg"], "name"),
    (["lyapunov", "--sigma", "0.45", "--map", "henon"], "map"),
])
def test_config_errors_name_the_key(args, key, tmp_path, capsys):
    code, _, err = run(args, tmp_path, capsys)
    assert code == 2 and key in err


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 2


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nmu = 0.4\nsigma=0.3\nsigma-range = 0.1:0.2\n")
    _, c = parse_config(["orbit", "--config", str(cfg), "--mu", "0.6"])
    assert c.mu == 0.6 and c.sigma == 0.3 and c.sigma_range == (0.1, 0.2)
    cfg.write_text("colour = red\n")
    with pytest.raises(ConfigError, match="colour"):
        read_config_file(cfg)
    assert main(["orbit", "--config", str(cfg), "--sigma", "0.45"]) == 2
    assert main(["orbit", "--config", str(tmp_path / "missing.cfg"), "--sigma", "0.45"]) == 4


def test_negative_values_parse():
    _, c = parse_config(["fixed-points", "--sigma", "0.45", "--window", "-2:-1", "--saddle-x", "-1.5"])
    assert c.window == (-2.0, -1.0) and c.saddle_x == -1.5


def test_out_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("DROPLETBIF_OUT", str(tmp_path / "envdir"))
    assert main(["slice", "--sigma", "0.45"]) == 0
    assert (tmp_path / "envdir" / "slice_boundary.csv").exists()
    assert "cusp_y=" in capsys.readouterr().out


def test_orbit_manifold_lyapunov(tmp_path, capsys):
    code, out, _ = run(["orbit", "--sigma", "0.45", "--transient", "100", "--keep", "200"], tmp_path, capsys)
    assert code == 0 and "points=200" in out
    assert (tmp_path / "orbit.csv").read_text().startswith("n,x,y\n")
    code, out, _ = run(["manifold", "--sigma", "0.45", "--generations", "10"], tmp_path, capsys)
    assert code == 0 and "generations=10" in out
    assert (tmp_path / "manifold.csv").read_text().startswith("generation,index,x,y,arclength\n")
    code, out, _ = run(["lyapunov", "--map", "3d-coupled", "--sigma", "0.45", "--n", "2000"], tmp_path, capsys)
    assert code == 0 and len(out.split()) == 3
    code, _, err = run(["manifold", "--sigma", "0.45", "--saddle-x", "-1.0"], tmp_path, capsys)
    assert code == 2 and "saddle_x" in err


def test_scan_outputs(tmp_path, capsys):
    code, out, _ = run(["scan", *SMALL_SCAN, "--emit", "json,svg", "--spill-csv"], tmp_path, capsys)
    assert code == 0 and "neimark-sacker" in out
    doc = json.loads((tmp_path / "scan.json").read_text())
    assert doc["schema"] == 1 and doc["events"][0]["kind"] == "neimark-sacker"
    assert (tmp_path / "scan.svg").read_text().startswith("<svg")
    assert sorted(p.name for p in tmp_path.glob("orbit_sigma_*.csv")) == [
        "orbit_sigma_0.360000.csv", "orbit_sigma_0.370000.csv", "orbit_sigma_0.380000.csv"]


def test_scan_bytes_identical_modulo_timestamp(tmp_path, capsys):
    docs = []
    for k in range(2):
        d = tmp_path / str(k)
        assert main(["scan", *SMALL_SCAN, "--out", str(d)]) == 0
        docs.append(json.loads((d / "scan.json").read_text()))
    for d in docs:
        d.pop("timestamp")
    assert json.dumps(docs[0]) == json.dumps(docs[1])
    capsys.readouterr()


def test_render(tmp_path, capsys):
    (tmp_path / "s.csv").write_text("n,x,y\n0,0.1,0.2\n1,0.3,0.4\n")
    (tmp_path / "e.csv").write_text("n,x,y\n")
    args = ["render", "--samples", f"{tmp_path / 's.csv'},{tmp_path / 'e.csv'}",
            "--stable-lines", "-1.5707963", "--name", "a.svg"]
    assert run(args, tmp_path, capsys)[0] == 0
    first = (tmp_path / "a.svg").read_text()
    assert run(args, tmp_path, capsys)[0] == 0
    assert (tmp_path / "a.svg").read_text() == first and first.count("<circle") == 2
    code, _, err = run(["render", "--samples", str(tmp_path / "nope.csv")], tmp_path, capsys)
    assert code == 4 and "nope.csv" in err


def test_render_empty_sample(tmp_path, capsys):
    (tmp_path / "e.csv").write_text("")
    assert run(["render", "--samples", str(tmp_path / "e.csv")], tmp_path, capsys)[0] == 0
    svg = (tmp_path / "figure.svg").read_text()
    assert 'class="axes"' in svg and "<circle" not in svg


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "dropletbif.cli", "fixed-points", "--sigma", "0.45",
                        "--mu", "1.5", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 2 and "mu must lie in (0,1)" in r.stderr
