import json

import numpy as np
import pytest

from robust_ot import DiscreteMeasure, InputFormatError, solve_standard
from robust_ot.cli import main, parse_grid
from robust_ot.estimation import detect_elbow, SweepCurve
from robust_ot.fixtures import elbow_instance, recovery_files_pair
from robust_ot.io import (measure_from_csv_text, measure_from_json_text, read_measure,
                          write_measure)


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _write(tmp_path, name, measure):
    path = tmp_path / name
    write_measure(measure, path)
    return path


def test_json_roundtrip(tmp_path):
    mu = DiscreteMeasure([[0.1, 2.0], [3.0, -1.5]], [0.3, 0.7])
    assert read_measure(_write(tmp_path, "m.json", mu)) == mu


def test_json_defaults_uniform():
    mu = measure_from_json_text('{"points": [1, 2, 3, 4]}')
    assert mu.dim == 1 and np.allclose(mu.weights, 0.25)


@pytest.mark.parametrize("text,line,col", [
    ('{"points": [[1], [NaN]]}', 1, 19),
    ('{"points":\n  [[1],\n   [Infinity]]}', 3, 5),
    ('{"points": [[1e999]]}', 1, 14),
    ('{"points": [[1], [2]', 1, 21),
])
def test_json_non_finite_positions(text, line, col):
    with pytest.raises(InputFormatError) as info:
        measure_from_json_text(text)
    assert (info.value.line, info.value.column) == (line, col)


def test_csv_reader():
    mu = measure_from_csv_text("w,x,y\n0.5,0,1\n0.5,2,3\n")
    assert mu == DiscreteMeasure([[0.0, 1.0], [2.0, 3.0]], [0.5, 0.5])
    with pytest.raises(InputFormatError) as info:
        measure_from_csv_text("0.5,0,1\n0.5,nan,3\n")
    assert (info.value.line, info.value.column) == (2, 5)
    with pytest.raises(InputFormatError):
        measure_from_csv_text("0.5,0,1\n0.5,2\n")


def test_error_names_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"points": [[NaN]]}')
    with pytest.raises(InputFormatError) as info:
        read_measure(bad)
    assert "bad.json" in str(info.value) and "line 1" in str(info.value)


def test_parse_grid():
    assert parse_grid("0:0.4:0.1").tolist() == [0.0, 0.1, 0.2, 0.3, 0.4]
    assert parse_grid("-1:1:1").tolist() == [-1.0, 0.0, 1.0]


def test_cli_robust_recovery(tmp_path, capsys):
    mu, nu = recovery_files_pair()
    a, b = _write(tmp_path, "a.json", mu), _write(tmp_path, "b.json", nu)
    code, out, _ = _run(capsys, "robust", "--p", 1, "--eps", 0.2, a, b)
    assert code == 0
    res = json.loads(out)
    assert abs(res["value"] - 0.8) < 1e-12
    assert abs(res["removed_mu"]["mass"] - 0.2) < 1e-12


def test_cli_dist_roundtrip(tmp_path, capsys):
    rng = np.random.default_rng(0)
    mu = DiscreteMeasure(rng.standard_normal((5, 2)))
    nu = DiscreteMeasure(rng.standard_normal((6, 2)))
    a, b = _write(tmp_path, "a.json", mu), _write(tmp_path, "b.json", nu)
    code, out, _ = _run(capsys, "dist", a, a)
    assert code == 0 and json.loads(out)["value"] == 0.0
    code, out, _ = _run(capsys, "dist", "--p", 2, a, b)
    from robust_ot import GroundCost
    assert json.loads(out)["value"] == solve_standard(mu, nu, GroundCost(p=2.0)).value


def test_cli_sweep_elbow(tmp_path, capsys):
    mt, nt, _ = elbow_instance(eps=0.2)
    a, b = _write(tmp_path, "a.json", mt), _write(tmp_path, "b.json", nt)
    code, out, _ = _run(capsys, "sweep", "--grid", "0:0.4:0.02", a, b)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "tau,value_p,slope"
    rows = [ln.split(",") for ln in lines[1:]]
    assert rows[-1][2] == ""
    taus = np.array([float(r[0]) for r in rows])
    vals = np.array([float(r[1]) for r in rows])
    slopes = np.array([float(r[2]) for r in rows[:-1]])
    eps_hat, _ = detect_elbow(SweepCurve(taus, vals, slopes))
    assert abs(eps_hat - 0.2) < 1e-12


def test_cli_robust_methods(tmp_path, capsys):
    rng = np.random.default_rng(1)
    a = _write(tmp_path, "a.json", DiscreteMeasure(rng.standard_normal((5, 2))))
    b = _write(tmp_path, "b.json", DiscreteMeasure(rng.standard_normal((5, 2))))
    _, out, _ = _run(capsys, "robust", "--eps", 0.2, a, b)
    exact = json.loads(out)["value_p"]
    _, out, _ = _run(capsys, "robust", "--eps", 0.2, "--method", "sinkhorn", a, b)
    assert abs(json.loads(out)["value_p"] - exact) <= 0.01 * exact
    _, out, _ = _run(capsys, "robust", "--eps", 0.2, "--method", "dual", a, b)
    assert abs(json.loads(out)["value_p"] - exact) <= 1e-3 * (1 + exact)
    code, out, _ = _run(capsys, "robust", "--eps-mu", 0.1, "--eps-nu", 0.2, "--plan", a, b)
    assert code == 0 and "plan" in json.loads(out)
    code, out, _ = _run(capsys, "robust", "--eps", 0.1, "--certificate", "--sigma", 1,
                        "--q", 4, a, b)
    cert = json.loads(out)["certificate"]
    assert abs(cert["bounds"]["multiplicative"] - 0.3) < 1e-12


def test_cli_other_commands(tmp_path, capsys):
    rng = np.random.default_rng(2)
    a = _write(tmp_path, "a.json", DiscreteMeasure(rng.standard_normal((6, 2))))
    b = _write(tmp_path, "b.json", DiscreteMeasure(rng.standard_normal((6, 2)) + 3))
    code, out, _ = _run(capsys, "test2s", "--eps", 0.1, "--rho", 0.01, a, b)
    assert code == 0 and json.loads(out)["decision"] == "reject"
    pairs = tmp_path / "pairs.json"
    x = rng.standard_normal(8).tolist()
    pairs.write_text(json.dumps({"x": x, "y": x}))
    code, out, _ = _run(capsys, "testindep", "--eps", 0.0, "--rho", 0.01, pairs)
    assert code == 0 and json.loads(out)["decision"] == "reject"
    code, out, _ = _run(capsys, "sliced", "--k", 1, "--projections", 10, a, b)
    assert code == 0 and json.loads(out)["num_projections"] == 10
    code, out, _ = _run(capsys, "sliced", "--sliced", "max", "--restarts", 2, a, b)
    assert code == 0 and "frame" in json.loads(out)
    sample = _write(tmp_path, "s.json", DiscreteMeasure([[2.0], [50.0]], [0.8, 0.2]))
    tmpl = _write(tmp_path, "t.json", DiscreteMeasure.dirac([0.0]))
    code, out, _ = _run(capsys, "mde", "--template", tmpl, "--grid", "0:5:1", "--eps", 0.2,
                        sample)
    res = json.loads(out)
    assert code == 0 and res["label"] == 2.0 and res["value"] == 0.0
    code, out, _ = _run(capsys, "bench", "--suite", "elbow", "breakdown")
    assert code == 0 and "FAIL" not in out


def test_cli_output_file(tmp_path, capsys):
    a = _write(tmp_path, "a.json", DiscreteMeasure.dirac([0.0]))
    b = _write(tmp_path, "b.json", DiscreteMeasure.dirac([1.0]))
    target = tmp_path / "out.json"
    code, out, _ = _run(capsys, "dist", a, b, "-o", target)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["value"] == 1.0


def test_cli_exit_codes(tmp_path, capsys):
    a = _write(tmp_path, "a.json", DiscreteMeasure.dirac([0.0]))
    bad = tmp_path / "bad.json"
    bad.write_text('{"points": [[0], [Infinity]]}')
    code, _, err = _run(capsys, "dist", a, bad)
    assert code == 2 and "line 1" in err and "column" in err
    assert _run(capsys, "robust", a, a)[0] == 2
    assert _run(capsys, "robust", "--eps", 1.5, a, a)[0] == 2
    assert _run(capsys, "robust", "--eps", 0.1, "--eps-mu", 0.1, a, a)[0] == 2
    assert _run(capsys, "dist", a, tmp_path / "missing.json")[0] == 2
    assert _run(capsys, "frobnicate")[0] == 2
    assert _run(capsys, "bench", "--suite", "nope")[0] == 2
    c = _write(tmp_path, "c.json", DiscreteMeasure.dirac([0.0, 1.0]))
    assert _run(capsys, "dist", a, c)[0] == 2
