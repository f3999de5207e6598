import json

import pytest

from evcsl.cli import main
from evcsl.instance_io import load_instance, load_solution, save_instance, save_solution
from evcsl.model import Solution

from conftest import make_instance


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.setenv("EVCSL_OUTPUT_DIR", str(tmp_path))
    return tmp_path


@pytest.fixture
def small(workdir):
    path = workdir / "small.json"
    rc = main(["generate", "--clients", "15", "--candidates", "25", "--substations", "2",
               "--stations", "3", "--geometry", "clustered", "--seed", "4", "--name", "small",
               "--out", str(path)])
    assert rc == 0
    return path


def run_json(capsys, argv):
    rc = main(argv)
    return rc, json.loads(capsys.readouterr().out)


def test_generate_defaults_to_output_dir(workdir):
    assert main(["generate", "--clients", "5", "--candidates", "8", "--substations", "1",
                 "--stations", "2", "--name", "g"]) == 0
    inst = load_instance(workdir / "g.json")
    assert (inst.n_clients, inst.n_candidates, inst.n_stations) == (5, 8, 2)


def test_generate_needs_sizes(workdir, capsys):
    assert main(["generate", "--clients", "5"]) == 1
    assert "--candidates" in capsys.readouterr().err


def test_solve_and_evaluate(small, workdir, capsys):
    sol = workdir / "sol.json"
    traj = workdir / "traj.csv"
    rc, out = run_json(capsys, ["solve", "--instance", str(small), "--preset", "VNS-2",
                                "--evals", "3000", "--seed", "1", "--out", str(sol),
                                "--trajectory", str(traj)])
    assert rc == 0
    assert out["preset"] == "VNS-2" and out["evals"] <= 3000
    assert traj.read_text().startswith("evals,violations,avg_distance_m\n")
    rc, ev = run_json(capsys, ["evaluate", "--instance", str(small), "--solution", str(sol)])
    assert rc == 0
    assert ev["avg_distance"] == pytest.approx(out["avg_distance"])
    assert len(ev["open"]) == 3


def test_solve_with_overrides(small, workdir, capsys):
    cfg = workdir / "cfg.json"
    cfg.write_text('{"population_size": 8}')
    rc, out = run_json(capsys, ["solve", "--instance", str(small), "--preset", "GA-2",
                                "--config", str(cfg), "--evals", "500"])
    assert rc == 0 and out["preset"] == "GA-2*"
    assert (workdir / "solution.json").exists()
    assert main(["solve", "--instance", str(small), "--algo", "ga",
                 "--config", '{"colour": 1}', "--evals", "10"]) == 1


def test_solve_needs_budget(small, capsys):
    assert main(["solve", "--instance", str(small), "--preset", "GA-1"]) == 1
    assert "--evals" in capsys.readouterr().err


def test_infeasible_exit_code(workdir, capsys):
    inst = make_instance([[1.0, 2.0, 3.0]], de=[[9.0, 9.0, 0.0]], mp=[2], n_stations=2,
                         de_max=5.0)
    ipath, spath = workdir / "i.json", workdir / "s.json"
    save_instance(inst, ipath)
    save_solution(Solution((0, 1)), spath)
    rc, ev = run_json(capsys, ["evaluate", "--instance", str(ipath), "--solution", str(spath)])
    assert rc == 2 and ev["substation_feasible"] is False
    assert ev["substation_assignment"] == [-1, -1]


def test_missing_and_broken_inputs(workdir, capsys):
    assert main(["evaluate", "--instance", str(workdir / "none.json"),
                 "--solution", "x.json"]) == 1
    assert "error:" in capsys.readouterr().err
    bad = workdir / "bad.json"
    bad.write_text("{")
    assert main(["solve", "--instance", str(bad), "--preset", "GA-1", "--evals", "5"]) == 1


def test_bench_and_report(small, workdir, capsys):
    csv_path = workdir / "r.csv"
    rc = main(["bench", "--instance", str(small), "--preset", "GA-1", "--preset", "VNS-2",
               "--runs", "3", "--evals", "800", "--stations", "2", "3",
               "--out", str(csv_path)])
    assert rc == 0
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 1 + 2 * 2 * 3
    assert lines[1].startswith("small-Ms2,ga,GA-1,0,")

    rc, rep = run_json(capsys, ["report", str(csv_path), "--json", "--baseline-value", "5000",
                                "--ecdf-dir", str(workdir / "ecdf")])
    assert rc == 0
    assert len(rep["summary"]) == 4 and len(rep["wilcoxon"]) == 2
    assert all(p.endswith(".csv") for p in rep["ecdf_files"])
    assert (workdir / "ecdf" / "ecdf_small-Ms3_VNS-2.csv").exists()

    assert main(["report", str(csv_path), "--scale", "0.01"]) == 0
    text = capsys.readouterr().out
    assert "(x10^2)" in text and "VNS-2" in text


def test_report_baseline_from_solution(small, workdir, capsys):
    csv_path = workdir / "r.csv"
    assert main(["bench", "--instance", str(small), "--preset", "VNS-2", "--runs", "2",
                 "--evals", "500", "--out", str(csv_path)]) == 0
    base = workdir / "base.json"
    save_solution(Solution((0, 1, 2)), base)
    rc, rep = run_json(capsys, ["report", str(csv_path), "--json", "--instance", str(small),
                                "--baseline-solution", str(base)])
    assert rc == 0 and rep["baseline_avg_distance"] > 0
    assert main(["report", str(csv_path), "--baseline-solution", str(base)]) == 1


def test_bench_to_stdout_is_deterministic(small, capsys):
    argv = ["bench", "--instance", str(small), "--preset", "GA-2", "--runs", "2",
            "--evals", "600"]
    assert main(argv) == 0
    first = [l.rsplit(",", 1)[0] for l in capsys.readouterr().out.splitlines()]
    assert main(argv + ["--parallel", "2"]) == 0
    second = [l.rsplit(",", 1)[0] for l in capsys.readouterr().out.splitlines()]
    assert first == second


def test_import(workdir):
    (workdir / "c.csv").write_text("id,lon,lat,population\na,-4.42,36.72,10\n")
    (workdir / "k.csv").write_text("id,lon,lat\nx,-4.42,36.72\ny,-4.41,36.71\n")
    (workdir / "s.csv").write_text("id,lon,lat,capacity\nz,-4.41,36.71,1\n")
    assert main(["import", "--clients-csv", str(workdir / "c.csv"),
                 "--candidates-csv", str(workdir / "k.csv"),
                 "--substations-csv", str(workdir / "s.csv"), "--stations", "1",
                 "--name", "mini"]) == 0
    inst = load_instance(workdir / "mini.json")
    assert inst.metric == "haversine" and inst.n_candidates == 2


def test_solution_file_is_loadable(small, workdir):
    out = workdir / "s.json"
    assert main(["solve", "--instance", str(small), "--preset", "GA-1", "--evals", "200",
                 "--out", str(out)]) == 0
    assert len(load_solution(out, load_instance(small))) == 3
