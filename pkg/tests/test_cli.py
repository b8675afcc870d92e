import json

import numpy as np
import pytest

from dynsel.cli import (EvaluationReport, MethodResult, RunSpec, SpecError, emit_report,
                        main, run_benchmark)
from dynsel.methods import METHOD_IDS

FAST = ("ola", "knora_e", "knora_u", "single_best", "static_selection", "des_p")


def test_report_shape():
    rep = run_benchmark(RunSpec(synthetic="blobs", n_samples=300, methods=("ola", "knora_e")))
    doc = rep.to_dict()
    assert list(doc) == ["version", "seed", "config", "splits", "oracle_accuracy", "methods"]
    assert [m["id"] for m in doc["methods"]] == ["knora_e", "ola"]
    assert doc["splits"] == {"train": 150, "dsel": 75, "test": 75}
    assert 0.0 <= doc["oracle_accuracy"] <= 1.0


def test_json_is_byte_identical_across_runs_and_jobs():
    spec = dict(synthetic="quadrant-experts", n_samples=300, methods=FAST + ("meta_des",))
    a = emit_report(run_benchmark(RunSpec(**spec)))
    b = emit_report(run_benchmark(RunSpec(**spec)))
    c = emit_report(run_benchmark(RunSpec(**spec, jobs=4)))
    assert a == b == c


def test_unknown_method_lists_valid_ids(capsys):
    with pytest.raises(SpecError, match="knora_e"):
        RunSpec(synthetic="blobs", methods=("xyz",))
    assert main(["--synthetic", "blobs", "--methods", "xyz"]) == 2
    err = capsys.readouterr().err
    assert "xyz" in err and all(m in err for m in METHOD_IDS)


@pytest.mark.parametrize("argv", [
    ["--synthetic", "blobs", "--splits", "0.5,0.5,0.5"],
    ["--synthetic", "blobs", "--k", "0"],
    ["--synthetic", "blobs", "--meta-k", "3"],
])
def test_validation_errors_exit_2(argv):
    assert main(argv) == 2


def test_runtime_errors_exit_1(tmp_path):
    assert main(["--data", str(tmp_path / "missing.csv")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,x,a\n2.0,3.0,b\n")
    assert main(["--data", str(bad)]) == 1


def test_fixed_decimal_formatting():
    rep = EvaluationReport("0.1.0", 0, {}, {"train": 2, "dsel": 1, "test": 1}, 1.0,
                           (MethodResult("ola", 0.5, 1.0),))
    text = emit_report(rep, "json")
    assert '"accuracy": 0.500000' in text and '"oracle_accuracy": 1.000000' in text
    assert EvaluationReport.from_dict(json.loads(text)) == rep


def test_table_sorted_and_aligned():
    rep = EvaluationReport("0.1.0", 0, {}, {"train": 2, "dsel": 1, "test": 1}, 1.0,
                           (MethodResult("rank", 0.25, 1.0), MethodResult("knora_u", 0.75, 3.5)))
    lines = emit_report(rep, "table").splitlines()
    assert lines[1].startswith("knora_u") and lines[2].startswith("rank")
    assert lines[1].index("0.750000") == lines[2].index("0.250000")
    assert lines[-1].startswith("oracle")


def test_json_round_trip_via_out(tmp_path):
    out = tmp_path / "r.json"
    assert main(["--synthetic", "blobs", "--n-samples", "200", "--methods", "ola,rank",
                 "--format", "json", "--out", str(out)]) == 0
    rep = EvaluationReport.from_dict(json.loads(out.read_text()))
    assert {m.id for m in rep.methods} == {"ola", "rank"}
    assert emit_report(rep, "json") == out.read_text()


def test_save_and_load_pool_reproduce(tmp_path):
    path = tmp_path / "pool.json"
    base = dict(synthetic="blobs", n_samples=300, methods=("ola", "knora_u"))
    saved = run_benchmark(RunSpec(**base, save_pool=str(path)))
    loaded = run_benchmark(RunSpec(**base, load_pool=str(path)))
    for m in saved.methods:
        assert loaded.method(m.id).accuracy == m.accuracy
    assert loaded.oracle_accuracy == saved.oracle_accuracy


def test_csv_input(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(120, 3))
    y = np.where(X[:, 0] + X[:, 1] > 0, "pos", "neg")
    path = tmp_path / "d.csv"
    path.write_text("a,b,c,label\n" + "".join(
        f"{r[0]},{r[1]},{r[2]},{lab}\n" for r, lab in zip(X, y)))
    rep = run_benchmark(RunSpec(data=str(path), has_header=True, methods=("ola",)))
    assert rep.splits["test"] == 30 and rep.method("ola").accuracy > 0.7


@pytest.mark.parametrize("seed", range(5))
def test_oracle_bounds_hard_voting_methods(seed):
    hard = ("ola", "lca", "mcb", "rank", "knora_e", "knora_u", "single_best",
            "static_selection")
    rep = run_benchmark(RunSpec(synthetic="quadrant-experts", n_samples=300, seed=seed,
                                methods=hard))
    assert all(m.accuracy <= rep.oracle_accuracy for m in rep.methods)


def test_timings_are_opt_in():
    rep = run_benchmark(RunSpec(synthetic="blobs", n_samples=200, methods=("ola",)))
    assert "wall_time_ms" not in emit_report(rep, "json")
    timed = run_benchmark(RunSpec(synthetic="blobs", n_samples=200, methods=("ola",),
                                  timings=True))
    assert timed.method("ola").wall_time_ms >= 0
