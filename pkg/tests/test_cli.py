import csv
import io
import json
import subprocess
import sys

import pytest

from ctinfluence import fixture_path, load_network
from ctinfluence.cli import run_cli

TOY = str(fixture_path("toy"))
STAR = str(fixture_path("star"))
DIAMOND = str(fixture_path("diamond"))


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_influence_toy():
    code, out, err = run("influence", "--network", TOY, "--sources", "0", "--horizon", "1.0")
    assert code == 0 and err == ""
    assert out.strip() == "sigma 1.8963617"


def test_influence_json(tmp_path):
    p = tmp_path / "r.json"
    code, _, _ = run("influence", "--network", TOY, "--sources", "0", "--horizon", "1", "--out", str(p))
    doc = json.loads(p.read_text())
    assert code == 0
    assert abs(doc["sigma"] - 1.8963616764856731) < 1e-9
    assert doc["state_space_sizes"] == [0, 2, 3]


def test_approx_flags():
    code, out, _ = run("influence", "--network", TOY, "--sources", "0", "--horizon", "1", "--ltp", "2")
    assert code == 0 and out.strip() == "sigma 1.6321206"
    code, _, err = run("influence", "--network", TOY, "--sources", "0", "--horizon", "1", "--ltp", "3", "--lsn", "3")
    assert code == 1 and "kind=usage" in err


def test_maximize_saturates(tmp_path):
    p = tmp_path / "t.json"
    code, out, _ = run("maximize", "--network", TOY, "-k", "3", "--horizon", "1.0", "--method", "greedy",
                       "--out", str(p))
    assert code == 0
    assert "sources 0,1,2" in out and "sigma 3.0000000" in out
    doc = json.loads(p.read_text())
    assert [q["node"] for q in doc["picks"]] == [0, 1, 2] and doc["sigma"] == 3.0
    assert doc["bound"] is None and doc["evaluations"] > 0


@pytest.mark.parametrize("method", ["greedy", "exhaustive", "random", "degree"])
def test_maximize_methods(method):
    code, out, _ = run("maximize", "--network", STAR, "-k", "1", "--horizon", "10", "--method", method,
                       "--bound", "--no-lazy")
    assert code == 0 and "bound" in out
    if method != "random":
        assert "sources 0\n" in out


def test_malformed_tsv_exit_2(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("# nodes: 3\n0\t1\t1.0\n1\t2\toops\n")
    code, out, err = run("influence", "--network", str(p), "--sources", "0", "--horizon", "1")
    assert code == 2 and out == ""
    assert err.count("\n") == 1 and "line 3" in err and "kind=data code=2" in err


def test_data_errors():
    assert run("influence", "--network", "/nonexistent.tsv", "--sources", "0", "--horizon", "1")[0] == 2
    assert run("influence", "--network", TOY, "--sources", "9", "--horizon", "1")[0] == 2
    assert run("influence", "--network", TOY, "--sources", "0", "--horizon", "-1")[0] == 2
    assert run("maximize", "--network", TOY, "-k", "4", "--horizon", "1")[0] == 2
    assert run("influence", "--network", TOY, "--sources", "0", "--horizon", "1", "--ltp", "1")[0] == 2


def test_usage_errors():
    assert run()[0] == 1
    assert run("frobnicate")[0] == 1
    assert run("influence", "--network", TOY)[0] == 1
    assert run("influence", "--network", TOY, "--sources", "a,b", "--horizon", "1")[0] == 1
    assert run("maximize", "--network", TOY, "-k", "1", "--horizon", "1", "--method", "pagerank")[0] == 1


def test_budget_exit_3():
    code, _, err = run("influence", "--network", DIAMOND, "--sources", "0", "--horizon", "1", "--max-states", "2")
    assert code == 3 and "kind=budget" in err and err.count("\n") == 1


def test_simulate(tmp_path):
    p = tmp_path / "mc.json"
    code, out, _ = run("simulate", "--network", TOY, "--sources", "0", "--horizon", "1", "--runs", "20000",
                       "--rng-seed", "4", "--compare", "--out", str(p))
    assert code == 0 and out.startswith("sigma_hat ")
    doc = json.loads(p.read_text())
    assert abs(doc["mc"]["sigma_hat"] - doc["exact"]["sigma"]) < 4 * doc["mc"]["stderr"]
    again = tmp_path / "mc2.json"
    run("simulate", "--network", TOY, "--sources", "0", "--horizon", "1", "--runs", "20000",
        "--rng-seed", "4", "--compare", "--out", str(again))
    assert again.read_text() == p.read_text()


def test_bound():
    code, out, _ = run("bound", "--network", STAR, "--sources", "1", "-k", "1", "--horizon", "1")
    lines = dict(line.split() for line in out.splitlines())
    assert code == 0 and float(lines["bound"]) >= float(lines["sigma"])


def test_sweep(tmp_path):
    net = tmp_path / "g.tsv"
    assert run("generate", "--model", "kronecker", "--iterations", "5", "--seed-matrix", "0.9,0.5;0.5,0.3",
               "--rng-seed", "2", "--out", str(net))[0] == 0
    code, out, _ = run("sweep", "--network", str(net), "-k", "4", "--horizon", "1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["method", "k", "sigma", "seconds", "bound"]
    assert {r["method"] for r in rows} == {"greedy", "random", "degree"}
    assert len(rows) == 12
    g = [r for r in rows if r["method"] == "greedy"]
    sig = [float(r["sigma"]) for r in g]
    assert sig == sorted(sig)
    assert all(float(r["bound"]) >= float(r["sigma"]) for r in g)


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    for p in (a, b):
        assert run("generate", "--model", "forestfire", "--n", "200", "--rng-seed", "9",
                   "--rate-dist", "uniform:0,10", "--out", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    net = load_network(a)
    assert net.node_count == 200 and all(0 < r <= 10 for r in net.rate)
    code, out, _ = run("generate", "--model", "kronecker", "--iterations", "2", "--seed-matrix", "1,1;1,1")
    assert code == 0 and out.startswith("# nodes: 4\n") and out.count("\n") == 13


def test_generate_bad_flags():
    assert run("generate", "--model", "kronecker", "--seed-matrix", "1,2;3")[0] == 1
    assert run("generate", "--model", "kronecker", "--seed-matrix", "1.5,0;0,0")[0] == 2
    assert run("generate", "--model", "kronecker", "--rate-dist", "uniform:3,1")[0] == 1


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ctinfluence.cli", "influence", "--network", TOY, "--sources", "0", "--horizon", "1"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "sigma 1.8963617"
    bad = subprocess.run([sys.executable, "-m", "ctinfluence.cli", "--bogus"], capture_output=True, text=True)
    assert bad.returncode == 1 and bad.stderr.startswith("ctinfluence: error kind=usage")
