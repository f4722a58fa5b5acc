import json
import subprocess
import sys

import numpy as np

from attrsbm.cli import main


def test_generate_detect_eval_roundtrip(tmp_path, capsys):
    assert main(["generate", "--z-out", "1", "--sigma", "1", "--seed", "3", "--out", str(tmp_path / "g")]) == 0
    for name in ("edges.txt", "attributes.csv", "labels.csv"):
        assert (tmp_path / "g" / name).exists()
    capsys.readouterr()
    g = tmp_path / "g"
    args = ["detect", "--edges", str(g / "edges.txt"), "--attributes", str(g / "attributes.csv"), "--truth", str(g / "labels.csv")]
    assert main(args + ["--out", str(tmp_path / "d")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["L"] == 4 and out["accuracy"] >= 0.95 and out["converged"]
    result = json.loads((tmp_path / "d" / "result.json").read_text())
    assert len(result["params"]["mu"]) == 4
    beliefs = np.loadtxt(tmp_path / "d" / "beliefs.csv", delimiter=",", skiprows=1)
    assert beliefs.shape == (128, 5) and np.allclose(beliefs[:, 1:].sum(1), 1)
    assert main(["eval", "--labels", str(tmp_path / "d" / "labels.csv"), "--edges", str(g / "edges.txt"), "--truth", str(g / "labels.csv")]) == 0
    ev = json.loads(capsys.readouterr().out)
    assert ev["accuracy"] == out["accuracy"] and abs(ev["modularity"] - out["modularity"]) < 1e-15


def test_detect_dataset_methods(capsys):
    for method in ("bp-em", "naive-mf", "kmeans"):
        assert main(["detect", "--dataset", "karate", "--sigma", "1", "--method", method]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["method"] == method and out["accuracy"] >= 0.9


def test_detect_with_config(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[solver]\nmax_iterations = 2\n")
    main(["detect", "--dataset", "football", "--sigma", "5", "--config", str(cfg)])
    assert json.loads(capsys.readouterr().out)["iterations"] <= 2


def test_sweep_and_config_file(tmp_path, capsys):
    cfg = tmp_path / "s.toml"
    cfg.write_text('[experiment]\nkind = "single-run"\ntrials = 2\nmethods = ["kmeans"]\nseed = 4\n')
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    assert "kmeans" in capsys.readouterr().out
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()
    assert main(["sweep", "--kind", "four-group-sweep-sigma", "--z-out", "3", "--sigma", "1", "2", "--trials", "1",
                 "--method", "kmeans", "--out", str(tmp_path / "c")]) == 0
    assert len((tmp_path / "c" / "summary.csv").read_text().splitlines()) == 3


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "attrsbm", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "sweep" in r.stdout
