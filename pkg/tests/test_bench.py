import csv
import json

import numpy as np
import pytest

from afpump.bench import (
    SCHEMA_VERSION,
    Manifest,
    compare_gaps,
    compute_gap,
    read_metrics,
    read_references,
    run_experiment,
    success_ratio,
)
from afpump.cli import main
from afpump.instances import knapsack_cover, set_partition
from afpump.model import MipInstance
from afpump.mps import write_mps


def test_gap_formula():
    assert compute_gap(110.0, 100.0) == pytest.approx(10.0)
    assert compute_gap(100.0, 100.0) == 0.0
    assert compute_gap(0.9, 0.4) == pytest.approx(50.0)
    assert compute_gap(-105.0, -100.0) == pytest.approx(-5.0)
    assert compute_gap(None, 1.0) is None
    assert compute_gap(1.0, None) is None


def test_success_ratio_exact():
    assert success_ratio([True] * 7 + [False] * 3) == 0.7
    assert success_ratio([]) == 0.0


def test_reference_sidecar(tmp_path):
    p = tmp_path / "refs.txt"
    p.write_text("# optima\nmas76 40005.05\nvpm2 13.75  # best known\n\n")
    assert read_references(p) == {"mas76": 40005.05, "vpm2": 13.75}
    p.write_text("broken line here\n")
    with pytest.raises(ValueError, match="refs.txt:1"):
        read_references(p)


@pytest.fixture
def bench_dir(tmp_path):
    for inst, _ in (set_partition(12, 20, seed=1), knapsack_cover(15, seed=4)):
        write_mps(inst, tmp_path / f"{inst.name}.mps")
    (tmp_path / "refs.txt").write_text("setpart_12x20_1 18\nknapcover_15_4 -100\n")
    manifest = {"instances": ["*.mps"], "seeds": [0, 1, 2], "algorithm": "afp", "stages": 2,
                "config": {"n_total": 60, "n_run": 30}, "references": "refs.txt"}
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    return tmp_path


def test_run_experiment_outputs_and_determinism(bench_dir):
    m = Manifest.load(bench_dir / "manifest.json")
    assert len(m.instances) == 2
    assert run_experiment(m, bench_dir / "out1") == 0
    assert run_experiment(Manifest.load(bench_dir / "manifest.json"), bench_dir / "out2") == 0
    for name in ("runs.csv", "metrics.csv"):
        assert (bench_dir / "out1" / name).read_bytes() == (bench_dir / "out2" / name).read_bytes()
    rows = read_metrics(bench_dir / "out1" / "metrics.csv")
    assert {r["instance"] for r in rows} == {"setpart_12x20_1", "knapcover_15_4"}
    for r in rows:
        assert r["schema"] == str(SCHEMA_VERSION)
        assert int(r["seeds"]) == 3
        assert float(r["success"]) == int(r["successes"]) / 3
        if r["best_objective"]:
            assert float(r["gap"]) == pytest.approx(compute_gap(float(r["best_objective"]), float(r["reference"])))
    with open(bench_dir / "out1" / "runs.csv") as fh:
        runs = list(csv.DictReader(fh))
    assert len(runs) == 6
    assert all(int(r["iterations"]) <= 60 for r in runs)
    events = sorted((bench_dir / "out1" / "events").glob("*.jsonl"))
    assert len(events) == 6
    summary = json.loads((bench_dir / "out1" / "results.json").read_text())
    assert summary["schema"] == SCHEMA_VERSION and len(summary["runs"]) == 6
    timing = (bench_dir / "out1" / "timing.csv").read_text().splitlines()
    assert timing[0].startswith("schema,instance") and len(timing) == 3


def test_parallel_workers_give_identical_tables(bench_dir):
    m = Manifest.load(bench_dir / "manifest.json")
    run_experiment(m, bench_dir / "serial", workers=1)
    run_experiment(m, bench_dir / "pool", workers=2)
    assert (bench_dir / "serial" / "metrics.csv").read_bytes() == (bench_dir / "pool" / "metrics.csv").read_bytes()


def test_bad_instance_is_recorded_not_fatal(tmp_path):
    inst, _ = knapsack_cover(6, seed=0)
    write_mps(inst, tmp_path / "good.mps")
    (tmp_path / "bad.mps").write_text("NAME bad\nROWS\n N obj\nGARBAGE\nENDATA\n")
    m = Manifest(instances=[str(tmp_path / "bad.mps"), str(tmp_path / "good.mps")], seeds=[0],
                 config={"n_total": 20})
    assert run_experiment(m, tmp_path / "out") == 1
    rows = {r["instance"]: r for r in read_metrics(tmp_path / "out" / "metrics.csv")}
    assert rows["bad"]["status"].startswith("parse error")
    assert rows["good"]["status"] == "ok"


def test_infeasible_instances_still_exit_zero(tmp_path):
    inst = MipInstance(name="nope", objective=np.zeros(1), A=np.array([[2.0], [4.0]]), sense=("G", "L"),
                       rhs=np.array([1.0, 3.0]), lower=np.zeros(1), upper=np.ones(1), integers=np.array([0]))
    write_mps(inst, tmp_path / "nope.mps")
    m = Manifest(instances=[str(tmp_path / "nope.mps")], seeds=[0, 1], config={"n_total": 20})
    assert run_experiment(m, tmp_path / "out") == 0
    row = read_metrics(tmp_path / "out" / "metrics.csv")[0]
    assert row["success"] == "0.0" and row["gap"] == ""


def test_maximization_gap_uses_minimization_sense(tmp_path):
    from afpump.bench import aggregate

    rows = [{"instance": "m", "algorithm": "afp", "stages": 1, "seed": 0, "status": "ok", "feasible": True,
             "objective": 90.0, "iterations": 3, "maximize": True, "parse_seconds": 0.0}]
    metrics, _ = aggregate(rows, {"m": 100.0})
    assert metrics[0]["gap"] == pytest.approx(10.0)


def test_compare_counts_strictly_lower_gaps():
    a = [{"instance": "p", "gap": "1.0"}, {"instance": "q", "gap": "5.0"}, {"instance": "r", "gap": ""},
         {"instance": "s", "gap": "2.0"}]
    b = [{"instance": "p", "gap": "3.0"}, {"instance": "q", "gap": "5.0"}, {"instance": "r", "gap": "0.5"},
         {"instance": "s", "gap": "1.0"}]
    counts = compare_gaps(a, b, {"p": "A", "q": "A", "r": "B", "s": "B"})
    assert counts == {"A": {"a": 1, "b": 0, "ties": 1}, "B": {"a": 0, "b": 2, "ties": 0}}


def test_manifest_validation():
    with pytest.raises(ValueError):
        Manifest(instances=["x"], seeds=[0], algorithm="cplex")
    with pytest.raises(ValueError):
        Manifest(instances=["x"], seeds=[0], stages=3)
    with pytest.raises(ValueError):
        Manifest(instances=["x"], seeds=[])


def test_cli_run_compare_and_plot(bench_dir, capsys):
    out = bench_dir / "cli"
    code = main(["run", str(bench_dir / "*.mps"), "--seeds", "0-1", "--n-total", "40", "--stages", "1",
                 "--algorithm", "fp", "--quality-norm", "coeff", "--out", str(out)])
    assert code == 0
    assert "setpart_12x20_1,fp,1" in capsys.readouterr().out
    code = main(["compare", str(out / "metrics.csv"), str(out / "metrics.csv")])
    assert code == 0
    assert capsys.readouterr().out.startswith("class,lower_gap_a,lower_gap_b,ties")
    svg = bench_dir / "diag.svg"
    afp = bench_dir / "afp"
    main(["run", "--manifest", str(bench_dir / "manifest.json"), "--moves", "rr,spd", "--out", str(afp)])
    assert main(["plot", str(afp / "events" / "knapcover_15_4__seed0.jsonl"), "--out", str(svg)]) == 0
    assert svg.read_text().lstrip().startswith("<?xml")


def test_cli_rejects_unknown_move():
    with pytest.raises(SystemExit):
        main(["run", "x.mps", "--moves", "teleport", "--out", "o"])


def test_worker_env_default(monkeypatch):
    from afpump.bench import default_workers

    monkeypatch.setenv("AFPUMP_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.delenv("AFPUMP_WORKERS")
    assert default_workers() == 1
