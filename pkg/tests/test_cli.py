import io
import json
import math

import numpy as np
import pytest

from airylab import cli
from airylab.errors import ArgumentError, NumericError
from airylab.walks import WalkEnsemble, sample_ni_geometric


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_arctic_example():
    code, out, err = run("arctic", "--model", "geometric", "--n", "1", "--beta", "1", "--m", "1",
                         "--format", "json")
    assert code == 0
    row = json.loads(out)[0]
    assert row["g"] == pytest.approx(2 + 2 * math.sqrt(2), rel=1e-15)
    manifest = json.loads(err)
    assert manifest["config"]["command"] == "arctic" and "airylab_version" in manifest


def test_zero_samples_is_a_usage_error():
    code, _, err = run("simulate", "--model", "geometric", "--n", "3", "--m", "2",
                       "--samples", "0", "--seed", "1")
    assert code == 2 and "samples" in err


@pytest.mark.parametrize("argv", [
    ("simulate", "--model", "geometric", "--n", "3", "--m", "2", "--samples", "2"),
    ("simulate", "--model", "nope", "--n", "3", "--m", "2", "--samples", "2", "--seed", "1"),
    ("arctic", "--model", "geometric", "--n", "2", "--mesh", "3:1:1"),
    ("kernel", "--kind", "conjugated", "--n", "50", "--m", "50", "--mesh", "0:1:1"),
    ("bogus",),
])
def test_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_numeric_failure_exit_code(monkeypatch):
    def boom(*a, **k):
        raise NumericError("did not converge", estimate=0.5)
    monkeypatch.setattr(cli, "cmd_twcdf", boom)
    code, _, err = run("twcdf", "--mesh", "-1:0:1")
    assert code == 3
    assert json.loads(err) == {"error": "numeric", "message": "did not converge", "estimate": 0.5}


def test_simulate_is_deterministic_across_workers(tmp_path):
    base = ["simulate", "--model", "geometric", "--n", "4", "--m", "5", "--samples", "7",
            "--seed", "3", "--k", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*base, "--out", str(a))[0] == 0
    assert run(*base, "--workers", "2", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert manifest["config"]["seed"] == 3 and manifest["outputs"]["rows"] == 7 * 2 * 6


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv("AIRYLAB_WORKERS", "2")
    code, _, err = run("arctic", "--model", "exponential", "--n", "2", "--m", "3")
    assert code == 0 and json.loads(err)["config"]["workers"] == 2


def test_simulate_rescaled_exponential():
    code, out, _ = run("simulate", "--model", "exponential", "--n", "30", "--m", "30",
                       "--samples", "2", "--seed", "1", "--mesh", "-0.5:0.5:0.5")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "replica,line,t,value" and len(lines) == 1 + 2 * 3


@pytest.mark.parametrize("model", ["sj", "poisson_lines", "brownian"])
def test_simulate_other_models(model):
    code, out, _ = run("simulate", "--model", model, "--n", "3", "--m", "4", "--samples", "2",
                       "--seed", "1", "--k", "2")
    assert code == 0 and len(out.strip().splitlines()) == 1 + 2 * 2 * 5


def test_walks_bernoulli_are_packed_at_start():
    code, out, _ = run("walks", "--model", "bernoulli", "--n", "3", "--horizon", "5",
                       "--samples", "2", "--seed", "4", "--format", "json")
    rows = json.loads(out)
    assert code == 0
    starts = {(r["replica"], r["walk_index"]): r["value"] for r in rows if r["time"] == 0}
    assert all(v == w - 1 for (_, w), v in starts.items())
    assert max(r["time"] for r in rows) == 5


def test_kernel_outputs():
    code, out, _ = run("kernel", "--mesh", "-1:1:1", "--s", "-0.5", "--format", "json")
    recs = json.loads(out)
    assert code == 0 and len(recs) == 9
    assert set(recs[0]) == {"query", "value", "error_estimate", "quadrature_config"}
    code, out, _ = run("kernel", "--kind", "prelimit", "--n", "1", "--m", "4",
                       "--mesh", "0:1:1")
    lines = out.strip().splitlines()
    assert lines[0] == "xn,sn,yn,tn,value,error_estimate"
    # a single walk: density at 0 after 4 fair steps
    assert float(lines[1].split(",")[4]) == pytest.approx(1 / 16, abs=1e-12)


def test_twcdf_and_compare():
    code, out, _ = run("twcdf", "--mesh", "-2:0:2")
    assert code == 0 and out.splitlines()[1].startswith("-2,0.4132241")
    code, out, _ = run("compare", "--model", "exponential", "--n", "20", "--samples", "200",
                       "--seed", "1")
    rep = json.loads(out)
    assert code == 0 and rep["test"] == "ks_vs_tracy_widom" and 0 <= rep["statistic"] <= 1


def test_plotdata_files(tmp_path):
    code, _, _ = run("plotdata", "--n", "3", "--horizon", "5", "--seed", "2",
                     "--out", str(tmp_path))
    assert code == 0
    traj = (tmp_path / "trajectories.csv").read_text().splitlines()
    over = (tmp_path / "arctic.csv").read_text().splitlines()
    assert traj[0] == "time,walk_index,value" and len(traj) == 1 + 3 * 6
    assert over[0] == "time,g,g1,g2" and len(over) == 1 + 5


def test_overlay_rows_equal_the_arctic_tabulation(tmp_path):
    # five geometric walks with beta = 1
    assert run("plotdata", "--n", "5", "--beta", "1", "--horizon", "20", "--seed", "1",
               "--out", str(tmp_path))[0] == 0
    code, out, _ = run("arctic", "--model", "geometric", "--n", "5", "--beta", "1",
                       "--mesh", "1:20:1")
    over = (tmp_path / "arctic.csv").read_text().splitlines()
    assert code == 0 and over[1:] == out.splitlines()[1:]
    traj = (tmp_path / "trajectories.csv").read_text().splitlines()[1:]
    assert {int(r.split(",")[0]) for r in traj} == set(range(21))


def test_verify_small_suite():
    code, out, _ = run("verify", "--suite", "small")
    assert code == 0 and out.count("[PASS]") == 8 and "[FAIL]" not in out


def test_emit_plotdata_empty_ensemble_gives_overlay_only():
    traj, over = cli.emit_plotdata(None, "geometric", 3, 1.0, np.arange(4))
    assert traj.strip() == "time,walk_index,value"
    assert len(over.strip().splitlines()) == 4


def test_emit_plotdata_mismatches():
    ens = sample_ni_geometric(2, 1.0, 4, seed=1)
    with pytest.raises(ArgumentError):
        cli.emit_plotdata(ens, "bernoulli", 2, 1.0, ens.times)
    with pytest.raises(ArgumentError):
        cli.emit_plotdata(ens, "geometric", 2, 1.0, np.arange(3))
    bern = WalkEnsemble("bernoulli", 1.0, [0, 1], [[0, 1], [1, 2]])
    traj, _ = cli.emit_plotdata(bern, "bernoulli", 2, 1.0, [0, 1])
    assert len(traj.strip().splitlines()) == 5


def test_parse_mesh():
    assert cli.parse_mesh("-1:1:0.5").tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
    for bad in ("1:0:1", "0:1:0", "a:b", "0:1"):
        with pytest.raises(cli.UsageError):
            cli.parse_mesh(bad)
