import json

import numpy as np
import pytest

from cutkit.cli import main, random_two_qubit_circuit
from cutkit.data import load_results


def _metrics(path):
    return load_results(path)["metrics"]


def test_validate_exact_is_error_free(tmp_path):
    out = tmp_path / "v"
    assert main(["validate", "--runs", "2", "--exact", "--out", str(out)]) == 0
    m = _metrics(out / "validate_report.json")
    for name in ("ghz", "random"):
        assert m[name]["cut_deviation_mean"] < 1e-9


def test_validate_report_structure(tmp_path):
    out = tmp_path / "v"
    assert main(["validate", "--runs", "3", "--seed", "5", "--out", str(out)]) == 0
    report = load_results(out / "validate_report.json")
    assert report["config"]["runs"] == 3
    m = report["metrics"]["ghz"]
    assert m["num_subexperiments"] == 6
    assert m["sampling_overhead"] == pytest.approx(3.0)
    assert len(m["per_run_cut_deviation"]) == 3
    assert np.mean(m["per_run_cut_deviation"]) == pytest.approx(m["cut_deviation_mean"])


def test_random_circuit_seeded():
    a = random_two_qubit_circuit(3)
    b = random_two_qubit_circuit(3)
    c = random_two_qubit_circuit(4)
    assert a == b
    assert a != c
    assert sum(op.kind == "CZ" for op in a.ops) == 3


def test_train_and_eval_cut_exact(tmp_path):
    out = tmp_path / "t"
    code = main(
        ["train", "--model", "modulo", "--iterations", "3", "--seed", "1", "--out", str(out)]
    )
    assert code == 0
    report = load_results(out / "train_report.json")
    assert len(report["metrics"]["loss_history"]) == 3
    model_file = report["model_file"]
    assert json.load(open(model_file))["config"]["head"] == "modulo"

    out2 = tmp_path / "e"
    assert main(["eval-cut", model_file, "--exact", "--out", str(out2)]) == 0
    m = _metrics(out2 / "eval_cut_report.json")
    assert m["agreement_rate"] == 1.0
    assert m["mean_accumulated_deviation"] < 1e-9
    assert np.array(m["confusion_uncut"]).sum() == 38
    conf_csv = (out2 / "confusion_cut.csv").read_text()
    assert conf_csv.splitlines()[0].count(",") == 3


def test_train_warm_start(tmp_path):
    out = tmp_path / "w"
    main(["train", "--iterations", "2", "--seed", "2", "--out", str(out)])
    model_file = load_results(out / "train_report.json")["model_file"]
    out2 = tmp_path / "w2"
    code = main(
        [
            "train",
            "--iterations",
            "1",
            "--seed",
            "2",
            "--warm-start",
            model_file,
            "--out",
            str(out2),
        ]
    )
    assert code == 0


def test_warm_start_config_mismatch_rejected(tmp_path):
    out = tmp_path / "m"
    main(["train", "--model", "modulo", "--iterations", "1", "--seed", "0", "--out", str(out)])
    model_file = load_results(out / "train_report.json")["model_file"]
    code = main(
        [
            "train",
            "--model",
            "parity",
            "--iterations",
            "1",
            "--warm-start",
            model_file,
            "--out",
            str(out),
        ]
    )
    assert code != 0


def test_missing_model_file_is_io_error(tmp_path):
    code = main(["eval-cut", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == 3


def test_noise_compare_report_and_csv(tmp_path):
    out = tmp_path / "t"
    main(["train", "--iterations", "2", "--seed", "3", "--out", str(out)])
    model_file = load_results(out / "train_report.json")["model_file"]
    out2 = tmp_path / "n"
    code = main(
        [
            "noise-compare",
            model_file,
            "--runs",
            "2",
            "--shots",
            "256",
            "--out",
            str(out2),
        ]
    )
    assert code == 0
    m = _metrics(out2 / "noise_compare_report.json")
    assert m["uncut_error_mean"] > 0
    assert len(m["per_run_cut_error"]) == 2
    header = (out2 / "noise_compare.csv").read_text().splitlines()[0]
    assert header == "bitstring,exact_p,uncut_mean,uncut_std,cut_mean,cut_std"


def test_reports_byte_identical_across_runs(tmp_path):
    args = ["validate", "--runs", "3", "--seed", "11"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    a = json.dumps(load_results(tmp_path / "a" / "validate_report.json")["metrics"], sort_keys=True)
    b = json.dumps(load_results(tmp_path / "b" / "validate_report.json")["metrics"], sort_keys=True)
    assert a == b
