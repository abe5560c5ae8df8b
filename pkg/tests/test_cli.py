import json
import subprocess
import sys

import pytest

from schlafli.cli import main


def _scene(tmp_path, doc, name="scene.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


H3_SPACE = {"model": "hyperbolic", "K": -1}


def test_bundled_h3_scene(tmp_path, capsys):
    assert main(["run", "--scene", "schlafli_h3_sphere.json", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["all_passed"] and len(report["rows"]) >= 2
    header = (tmp_path / "report.csv").read_text().splitlines()[0]
    assert header == "task,object,quantity,computed,oracle,residual,tolerance,error_budget,passed,seed"
    assert "schlafli" in json.loads((tmp_path / "timings.json").read_text())


def test_demo_scene_plot_data_and_threads(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--scene", "demo.json", "--out", str(a), "--plot-data"]) == 0
    assert main(["run", "--scene", "demo.json", "--out", str(b), "--plot-data", "--threads", "3"]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert list(a.glob("plot_*.csv"))


def test_seed_override_changes_stochastic_rows(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--scene", "demo.json", "--out", str(a)])
    main(["run", "--scene", "demo.json", "--out", str(b), "--seed-override", "99"])
    assert (a / "report.json").read_bytes() != (b / "report.json").read_bytes()


def test_unknown_object_id(tmp_path, capsys):
    doc = {"schema": 1, "space": H3_SPACE, "objects": [],
           "tasks": [{"id": "x", "type": "volume", "object": "nope", "oracle": 1.0}]}
    assert main(["run", "--scene", str(_scene(tmp_path, doc)), "--out", str(tmp_path)]) == 2
    assert "$.tasks[0].object" in capsys.readouterr().err


def test_malformed_json_reports_position(tmp_path, capsys):
    p = _scene(tmp_path, '{\n  "schema": 1,\n  "tasks": [,]\n}')
    assert main(["run", "--scene", str(p), "--out", str(tmp_path)]) == 2
    assert f"{p}:3:" in capsys.readouterr().err


def test_missing_seed_for_stochastic_task(tmp_path, capsys):
    doc = {"schema": 1, "space": {"model": "euclidean"},
           "objects": [{"id": "b", "kind": "surface", "catalog": "sphere", "params": {"r": 1.0}}],
           "tasks": [{"id": "c", "type": "crofton", "object": "b"}]}
    assert main(["run", "--scene", str(_scene(tmp_path, doc)), "--out", str(tmp_path)]) == 2
    assert "$.tasks[0].seed" in capsys.readouterr().err


def test_zero_tolerance_monte_carlo_fails(tmp_path):
    doc = {"schema": 1, "space": {"model": "euclidean"},
           "objects": [{"id": "b", "kind": "surface", "catalog": "sphere", "params": {"r": 1.0}}],
           "tasks": [{"id": "c", "type": "crofton", "object": "b", "seed": 1, "samples": 2000,
                      "tolerance": 0}]}
    assert main(["run", "--scene", str(_scene(tmp_path, doc)), "--out", str(tmp_path)]) == 1


def test_wrong_volume_oracle_fails(tmp_path):
    doc = {"schema": 1, "space": H3_SPACE,
           "objects": [{"id": "s", "kind": "surface", "catalog": "sphere", "params": {"r": 1.0}}],
           "tasks": [{"id": "v", "type": "volume", "object": "s", "oracle": 3.5}]}
    assert main(["run", "--scene", str(_scene(tmp_path, doc)), "--out", str(tmp_path)]) == 1


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scene", "demo.json", "--bogus"])
    assert exc.value.code == 2


def test_list_catalog(capsys):
    assert main(["list-catalog", "--json"]) == 0
    cat = json.loads(capsys.readouterr().out)
    assert {"surfaces", "polyhedra", "warped", "tasks"} <= set(cat)
    assert "steffen" in cat["polyhedra"] and "sphere" in cat["surfaces"]
    assert main(["list-catalog"]) == 0
    assert "surfaces:" in capsys.readouterr().out


def test_console_entry_point_module():
    proc = subprocess.run([sys.executable, "-m", "schlafli.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
