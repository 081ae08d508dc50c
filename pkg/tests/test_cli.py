import json

import pytest

from ggmech.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_calibrate_gauss(capsys):
    code, out, _ = run(capsys, "calibrate", "--mechanism", "gauss_pdp", "--epsilon", "1", "--delta", "0.05", "--delta1", "1")
    assert code == 0
    res = json.loads(out)
    assert res["sigma"] == pytest.approx(2.18843750, abs=1e-8)


def test_calibrate_histogram_gg(capsys):
    code, out, _ = run(
        capsys, "calibrate", "--mechanism", "gg_pdp", "--p", "3", "--epsilon", "1", "--delta", "0.05", "--bins", "64"
    )
    assert code == 0
    assert json.loads(out)["method"] == "deterministic"


def test_calibrate_from_spec_file(tmp_path, capsys):
    spec = {"kind": "tgg_edp", "p": 2, "epsilon": 1.0, "delta": 0.0,
            "profile": {"delta1": [1.0], "bounds": [[0, 1]]}, "mc": None}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    code, out, _ = run(capsys, "calibrate", "--spec", str(path))
    assert code == 0
    assert json.loads(out)["b"] == pytest.approx(6**0.5)


def test_configuration_error_exit_code(capsys):
    code, _, err = run(capsys, "calibrate", "--mechanism", "laplace", "--epsilon", "1", "--delta", "0.1", "--delta1", "1")
    assert code == 2
    assert "delta must be 0" in err
    code, _, _ = run(capsys, "calibrate", "--mechanism", "gauss_adp", "--epsilon", "2", "--delta", "0.1", "--delta1", "1")
    assert code == 2
    code, out, _ = run(
        capsys, "calibrate", "--mechanism", "gauss_adp", "--epsilon", "2", "--delta", "0.1", "--delta1", "1",
        "--allow-large-epsilon",
    )
    assert code == 0


def test_ingestion_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "h.csv"
    bad.write_text("label,count\na,-1\n")
    code, _, err = run(capsys, "sanitize", "--mechanism", "laplace", "--epsilon", "1", "--input", str(bad), "--seed", "1")
    assert code == 3
    assert "line 2" in err


def test_convergence_error_exit_code(capsys):
    code, _, _ = run(capsys, "compare", "equiv-eps", "--epsilon1", "1", "--delta", "0.05", "--t", "1000")
    assert code == 4


def test_sanitize_requires_seed(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sanitize", "--mechanism", "laplace", "--epsilon", "1", "--values", "1,2"])
    assert exc.value.code == 2


def test_sanitize_histogram(tmp_path, capsys):
    src = tmp_path / "h.csv"
    src.write_text("label,count\na,3\nb,5\n")
    argv = ["sanitize", "--mechanism", "laplace", "--epsilon", "1", "--input", str(src), "--seed", "7",
            "--postprocess", "clamp", "normalize"]
    code, out, err = run(capsys, *argv)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "label,value"
    assert sum(float(v.split(",")[1]) for v in lines[1:]) == pytest.approx(8.0)
    assert "scale_used=2" in err
    assert run(capsys, *argv)[1] == out


def test_sanitize_output_overwrite(tmp_path, capsys):
    dest = tmp_path / "out.csv"
    argv = ["sanitize", "--mechanism", "gauss_pdp", "--epsilon", "1", "--delta", "0.05", "--values", "1,2,3",
            "--seed", "1", "--output", str(dest)]
    assert run(capsys, *argv)[0] == 0
    assert run(capsys, *argv)[0] != 0
    assert run(capsys, *argv, "--overwrite")[0] == 0


def test_compare_tails(tmp_path, capsys):
    code, out, err = run(capsys, "compare", "tails", "--epsilon", "1", "--delta", "0.05", "--points", "2001")
    assert code == 0
    assert out.splitlines()[0] == "t,p1,p2,ratio,likely"
    assert len(out.splitlines()) == 2002
    assert "7.64" in err


def test_compare_equiv(capsys):
    code, out, _ = run(capsys, "compare", "equiv-eps", "--epsilon1", "1", "--delta", "0.05", "--t", "5")
    assert code == 0
    assert float(out) == pytest.approx(1.20894518, abs=1e-7)


def test_experiment(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mechanisms": ["laplace"], "epsilons": [1.0], "repeats": 3}))
    dest = tmp_path / "rep.json"
    code, _, _ = run(capsys, "experiment", "--config", str(cfg), "--seed", "5", "--output", str(dest))
    assert code == 0
    rep = json.loads(dest.read_text())
    assert rep["metadata"]["seed"] == 5 and rep["metadata"]["repeats"] == 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"unknown": 1}))
    assert run(capsys, "experiment", "--config", str(bad), "--seed", "1")[0] == 2


def test_experiment_requires_seed():
    with pytest.raises(SystemExit) as exc:
        main(["experiment"])
    assert exc.value.code == 2
