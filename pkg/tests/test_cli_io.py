import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epsstar import cli, fileio
from epsstar.errors import EmptySampleError, ParseError
from epsstar.landscape import StrategyPoint, pareto_frontier


def run(argv):
    return cli.main([str(a) for a in argv])


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# --- loss files -----------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=50))
def test_loss_file_round_trip(tmp_path_factory, vals):
    p = tmp_path_factory.mktemp("rt") / "l.csv"
    fileio.write_losses(p, vals)
    back = fileio.read_losses(p)
    np.testing.assert_array_equal(back, np.array(vals))
    fileio.write_losses(p, back)
    np.testing.assert_array_equal(fileio.read_losses(p), back)


def test_prediction_layouts(tmp_path):
    b = write(tmp_path / "b.csv", "prediction,label\n0.8,1\n0.8,0\n")
    np.testing.assert_allclose(fileio.read_losses(b), [-math.log(4), math.log(4)])
    m = write(tmp_path / "m.csv", "p_0,p_1,p_2,label\n0.1,0.8,0.1,1\n0.5,0.25,0.25,0\n")
    np.testing.assert_allclose(fileio.read_losses(m), [-math.log(4), 0.0], atol=1e-15)
    with pytest.raises(ParseError):
        fileio.read_losses(b, "losses")


@pytest.mark.parametrize("text, err", [
    ("", EmptySampleError),
    ("loss\n", EmptySampleError),
    ("loss\n1.0\nnan\n", ParseError),
    ("loss\n1.0\ninf\n", ParseError),
    ("loss\nabc\n", ParseError),
    ("value\n1.0\n", ParseError),
    ("p_0,p_2,label\n0.5,0.5,0\n", ParseError),
    ("prediction,label\n0.5\n", ParseError),
])
def test_loss_file_faults(tmp_path, text, err):
    with pytest.raises(err):
        fileio.read_losses(write(tmp_path / "f.csv", text))


def test_atomic_write_leaves_no_temp(tmp_path):
    fileio.atomic_write(tmp_path / "x.txt", "a")
    fileio.atomic_write(tmp_path / "x.txt", "b")
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
    assert (tmp_path / "x.txt").read_text() == "b"


def test_manifest_formats(tmp_path):
    fileio.write_losses(tmp_path / "a.csv", [1, 2, 3])
    write(tmp_path / "m.csv", 'model_id,train,pop,utility,tags\nx,a.csv,a.csv,0.5,"{""k"": 1}"\n')
    man = fileio.read_manifest(tmp_path / "m.csv")
    assert man.entries[0].tags == {"k": 1} and man.entries[0].utility == 0.5
    write(tmp_path / "d.json", json.dumps([{"model_id": "x", "train": "a.csv", "pop": "a.csv"},
                                           {"model_id": "x", "train": "a.csv", "pop": "a.csv"}]))
    with pytest.raises(ParseError):
        fileio.read_manifest(tmp_path / "d.json")
    write(tmp_path / "missing.json", json.dumps([{"model_id": "x", "train": "nope.csv", "pop": "a.csv"}]))
    with pytest.raises(FileNotFoundError):
        fileio.read_manifest(tmp_path / "missing.json")


# --- commands -------------------------------------------------------------

def test_audit_identical_files(tmp_path):
    f = fileio.write_losses(tmp_path / "l.csv", np.random.default_rng(0).normal(size=500))
    out = tmp_path / "r.json"
    assert run(["audit", "--train", f, "--pop", f, "--out", out]) == 0
    doc = json.loads(out.read_text())
    assert doc["epsilon_star"] == 0.0
    assert doc["provenance"]["inputs"]["train"]["sha256"] == fileio.file_digest(f)


def test_audit_bad_delta(tmp_path, capsys):
    f = fileio.write_losses(tmp_path / "l.csv", [1.0, 2.0, 3.0])
    assert run(["audit", "--train", f, "--pop", f, "--delta", "1.5"]) == 2
    assert "DomainError" in capsys.readouterr().err


def test_exit_code_partition(tmp_path, monkeypatch):
    monkeypatch.setenv(fileio.OUTPUT_DIR_ENV, str(tmp_path))
    good = fileio.write_losses(tmp_path / "g.csv", [1.0, 2.0, 3.0])
    nan = write(tmp_path / "n.csv", "loss\n1.0\nnan\n")
    empty = write(tmp_path / "e.csv", "")
    const = fileio.write_losses(tmp_path / "c.csv", [4.0, 4.0])
    assert run(["audit", "--train", tmp_path / "missing.csv", "--pop", good]) == 2
    assert run(["audit", "--train", nan, "--pop", good]) == 2
    assert run(["audit", "--train", empty, "--pop", good]) == 2
    assert run(["audit", "--train", const, "--pop", const]) == 3
    with pytest.raises(SystemExit) as e:
        cli.main(["audit", "--train", str(good)])
    assert e.value.code == 2


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(fileio.OUTPUT_DIR_ENV, str(tmp_path / "out"))
    f = fileio.write_losses(tmp_path / "l.csv", [1.0, 2.0, 3.0, 5.0])
    assert run(["audit", "--train", f, "--pop", f]) == 0
    assert (tmp_path / "out" / "audit.json").exists()


def test_golden_audit(tmp_path, data_dir):
    out = tmp_path / "golden.json"
    assert run(["audit", "--train", data_dir / "gamma_train.csv", "--pop", data_dir / "gamma_pop.csv",
                "--delta", "1e-5", "--out", out]) == 0
    got, want = json.loads(out.read_text()), json.loads((data_dir / "golden_audit.json").read_text())
    assert abs(got["epsilon_star"] - want["epsilon_star"]) <= 1e-9
    got["provenance"].pop("inputs"), want["provenance"].pop("inputs")
    assert got.keys() == want.keys() and got["provenance"] == want["provenance"]


def test_simulate_cardinality_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["simulate", "--d-list", "0", "--n-list", "1000", "--repeats", "2",
                    "--seed", "7", "--out-dir", d, "--svg"]) == 0
    rows = (a / "simulation_rows.csv").read_bytes()
    assert rows == (b / "simulation_rows.csv").read_bytes()
    assert len(rows.decode().splitlines()) == 1 + 6
    assert (a / "simulation.svg").exists()


def test_simulate_bad_flags():
    with pytest.raises(SystemExit) as e:
        cli.main(["simulate", "--n-list", "abc"])
    assert e.value.code == 2
    assert cli.main(["simulate", "--delta", "2", "--out-dir", "/tmp/never"]) == 2


def test_mechanism_single_entry(tmp_path, data_dir):
    man = {"entries": [{"model_id": "only", "train": str(data_dir / "mechanism" / "m0_train.csv"),
                        "pop": str(data_dir / "mechanism" / "m0_pop.csv")}]}
    mp = write(tmp_path / "m.json", json.dumps(man))
    out = tmp_path / "mech.json"
    assert run(["mechanism", "--manifest", mp, "--delta", "1e-5", "--out", out]) == 0
    doc = json.loads(out.read_text())
    assert doc["eps_bar"] == doc["per_model"][0]["epsilon_star"]
    assert doc["holds"] is True
    assert abs(doc["jensen_bound"] - doc["eps_bar"]) < 1e-12


def test_mechanism_bundled(tmp_path, data_dir):
    out = tmp_path / "mech.json"
    assert run(["mechanism", "--manifest", data_dir / "mechanism" / "manifest.json", "--out", out]) == 0
    doc = json.loads(out.read_text())
    assert doc["n_models"] == 5 and doc["holds"]


def test_ksfit_bundled(tmp_path, data_dir):
    out = tmp_path / "ks.csv"
    assert run(["ksfit", "--losses", data_dir / "normal_sample.csv", "--components", "1..5",
                "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 6
    assert all(0 <= float(l.split(",")[3]) <= 1 for l in lines[1:])


def test_landscape_bundled(tmp_path, data_dir):
    out = tmp_path / "ls.json"
    assert run(["landscape", "--manifest", data_dir / "landscape" / "manifest.json", "--out", out]) == 0
    doc = json.loads(out.read_text())
    pts = [StrategyPoint.from_dict(p) for p in doc["points"]]
    assert len(pts) == 12
    brute = {p.id for p in pts if not any(
        q.utility >= p.utility and q.eps_star_mean <= p.eps_star_mean
        and (q.utility > p.utility or q.eps_star_mean < p.eps_star_mean) for q in pts)}
    assert set(doc["frontier"]["dominance_set"]) == brute
    assert tuple(doc["frontier"]["hull_set"]) == pareto_frontier(pts).hull_set
    for fmt in ("csv", "svg"):
        assert run(["landscape", "--manifest", data_dir / "landscape" / "manifest.json",
                    "--format", fmt, "--out", tmp_path / f"ls.{fmt}"]) == 0
    assert run(["landscape", "--manifest", data_dir / "landscape" / "manifest.json",
                "--format", "pdf", "--out", tmp_path / "x"]) == 2
