import io

import pytest

from evcsl.bench import (REPORT_HEADER, BenchReport, RunRecord, pairwise_wilcoxon,
                         read_report_csv, run_batch, summary_table, write_ecdf_csv,
                         write_report_csv)
from evcsl.ga import GaConfig
from evcsl.run import Budget

from conftest import tiny_synthetic


def rows_without_wall(records):
    return [r.csv_row()[:-1] for r in records]


@pytest.fixture(scope="module")
def inst():
    return tiny_synthetic(6)


def test_batch_seeds_and_labels(inst):
    rep = run_batch(inst, "GA-2", 4, 10, Budget(evals=1500), instance_id="tiny")
    assert [r.seed for r in rep.records] == [10, 11, 12, 13]
    assert {r.preset for r in rep.records} == {"GA-2"}
    assert rep.algorithm == "ga" and rep.instance == "tiny"
    assert all(r.evals <= 1500 for r in rep.records)


@pytest.mark.parametrize("preset", ["GA-1", "VNS-2"])
def test_parallel_matches_serial(inst, preset):
    serial = run_batch(inst, preset, 4, 0, Budget(evals=2000))
    parallel = run_batch(inst, preset, 4, 0, Budget(evals=2000), parallelism=2)
    assert rows_without_wall(serial.records) == rows_without_wall(parallel.records)


def test_config_objects_are_accepted(inst):
    rep = run_batch(inst, GaConfig(population_size=10), 2, 0, Budget(evals=500),
                    keep_results=True)
    assert rep.preset == "custom" and len(rep.results) == 2


def test_report_summary_and_ecdf(inst):
    rep = run_batch(inst, "VNS-2", 3, 0, Budget(evals=2000), baseline=10_000.0)
    s = rep.summary()
    assert s.n == 3 and s.min <= s.mean <= s.max
    pts = rep.ecdf()
    assert pts[-1][1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        BenchReport("x", "ga", "GA-1", rep.records).ecdf()


def test_report_rejects_repeated_seeds():
    r = RunRecord("x", "ga", "GA-1", 0, 1.0, 10, 0.1)
    with pytest.raises(ValueError, match="distinct"):
        BenchReport("x", "ga", "GA-1", [r, r])
    with pytest.raises(ValueError):
        BenchReport("x", "ga", "GA-1", [])


def test_csv_roundtrip(tmp_path):
    recs = [RunRecord("inst", "vns", "VNS-1", s, 1234.5 + s / 3, 100 * s, 0.25)
            for s in range(3)]
    path = tmp_path / "r.csv"
    write_report_csv(recs, path)
    text = path.read_text().splitlines()
    assert text[0] == ",".join(REPORT_HEADER)
    assert text[1] == "inst,vns,VNS-1,0,1234.5,0,0.250"
    assert read_report_csv(path) == recs


def test_csv_errors(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("instance,algorithm\n")
    with pytest.raises(ValueError, match="header"):
        read_report_csv(path)
    path.write_text(",".join(REPORT_HEADER) + "\nx,ga,GA-1,zero,1.0,1,0.1\n")
    with pytest.raises(ValueError, match=":2:"):
        read_report_csv(path)


def test_ecdf_csv():
    buf = io.StringIO()
    write_ecdf_csv([(0.0, 0.5), (2.5, 1.0)], fh=buf)
    assert buf.getvalue() == "improvement_pct,cum_fraction\n0.0,0.5\n2.5,1.0\n"


def fake_records():
    out = []
    for s in range(8):
        out.append(RunRecord("i", "ga", "GA-1", s, 1000.0 + s, 1, 0.0))
        out.append(RunRecord("i", "ga", "GA-2", s, 900.0 + s, 1, 0.0))
        out.append(RunRecord("i", "vns", "VNS-1", s, 1000.0 + s, 1, 0.0))
    return out


def test_summary_table():
    rows = summary_table(fake_records(), scale=0.01)
    assert [r["preset"] for r in rows] == ["GA-1", "GA-2", "VNS-1"]
    assert rows[1]["mean_sd"] == "9.04±0.024"
    assert rows[0]["min"] == "10.00"


def test_pairwise_wilcoxon():
    rows = pairwise_wilcoxon(fake_records())
    assert [(r["a"], r["b"]) for r in rows] == [("GA-1", "GA-2"), ("GA-1", "VNS-1"),
                                                 ("GA-2", "VNS-1")]
    first = rows[0]
    assert first["m"] == 3 and first["better"] == "GA-2"
    assert first["p"] == pytest.approx(2 / 2 ** 8)
    assert first["p_adj"] == pytest.approx(3 * 2 / 2 ** 8)
    same = rows[1]
    assert same["method"] == "all-zero" and same["better"] == "tie"


def test_pairwise_needs_equal_runs():
    recs = fake_records() + [RunRecord("i", "ga", "GA-1", 99, 1.0, 1, 0.0)]
    with pytest.raises(ValueError, match="runs"):
        pairwise_wilcoxon(recs)
