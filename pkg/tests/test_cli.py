import json

import numpy as np
import pytest

from tailkde.cli import main
from tailkde.core.data import DataMatrix, read_csv
from tailkde.core.rng import RngStream
from tailkde.services.sampling import sample, univariate_targets
from tailkde.services.tailindex import data_vs_data_index
from tailkde.utils.response import write_sample_csv


def run_json(argv, path):
    code = main([*argv, "--output", str(path)])
    return code, json.loads(path.read_text(encoding="utf-8"))


def test_no_command_is_a_config_error():
    assert main([]) == 4


def test_unknown_flag_is_a_config_error():
    assert main(["fit", "--bogus"]) == 4


def test_missing_input_file(tmp_path, capsys):
    assert main(["fit", "--input", str(tmp_path / "absent.csv")]) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    assert '"error_code": "DataError"' in captured.err


def test_missing_required_argument():
    assert main(["fit"]) == 4


def test_simulate_writes_sample(tmp_path, capsys):
    csv = tmp_path / "gum.csv"
    assert main(["simulate", "--target", "gum", "--n", "120", "--seed", "5", "--csv", str(csv)]) == 0
    content = json.loads(capsys.readouterr().out)
    assert content["success"] is True
    assert content["results"]["family"] == "gumbel"
    assert read_csv(csv).n == 120


def test_simulate_unknown_target(tmp_path):
    assert main(["simulate", "--target", "weibull", "--csv", str(tmp_path / "x.csv")]) == 4


def test_fit_reports_grid_and_config(serial_settings, sample_csv, tmp_path):
    code, content = run_json(["fit", "--input", str(sample_csv), "--estimator", "hist", "--threads", "1"],
                             tmp_path / "fit.json")
    assert code == 0
    results = content["results"]
    assert results["command"] == "fit"
    assert results["estimator"] == "hist"
    assert results["quantile_level"] == 0.95
    assert results["config"]["args"]["estimator"] == "hist"
    assert results["config"]["settings"]["THREADS"] == 1
    assert len(results["grid"]["values"]) == len(results["grid"]["axes"][0])


def test_both_threshold_forms_rejected(sample_csv):
    assert main(["fit", "--input", str(sample_csv), "--threshold-quantile", "0.9", "--threshold", "5"]) == 4


def test_config_echo_reproduces_run(serial_settings, sample_csv, tmp_path):
    first = tmp_path / "first.json"
    _, original = run_json(["fit", "--input", str(sample_csv), "--estimator", "hist",
                            "--threshold-quantile", "0.9"], first)
    code, again = run_json(["fit", "--config", str(first)], tmp_path / "second.json")
    assert code == 0
    assert again["results"]["estimator"] == "hist"
    assert again["results"]["threshold"] == original["results"]["threshold"]
    assert again["results"]["grid"] == original["results"]["grid"]


def test_tail_fits_once(serial_settings, sample_csv, tmp_path):
    code, content = run_json(["tail", "--input", str(sample_csv), "--estimator", "kns",
                              "--threshold-quantile", "0.95", "0.9", "--no-grid"], tmp_path / "tail.json")
    assert code == 0
    results = content["results"]
    assert results["fit_count"] == 1
    levels = [entry["quantile_level"] for entry in results["thresholds"]]
    assert levels == [0.9, 0.95]
    assert results["thresholds"][0]["normalizer"] > results["thresholds"][1]["normalizer"]
    assert results["thresholds"][0]["grid"] is None


def test_select_names_a_candidate(serial_settings, sample_csv, tmp_path):
    code, content = run_json(["select", "--input", str(sample_csv), "--reference", "hist"], tmp_path / "sel.json")
    assert code == 0
    assert content["results"]["winner"] in ("fre", "gum", "gpd")


def test_compare_keeps_going_after_a_bad_file(serial_settings, sample_csv, tmp_path):
    missing = str(tmp_path / "missing.csv")
    code, content = run_json(["compare", "--observed", str(sample_csv), "--models", str(sample_csv), missing,
                              "--estimator", "hist"], tmp_path / "cmp.json")
    assert code == 0
    rows = content["results"]["rows"]
    assert rows[0]["indices"]["T~2"] == pytest.approx(0.0, abs=1e-12)
    assert rows[1]["error"]
    assert content["results"]["winners"]["T~2"] == str(sample_csv)


def shifted(data, sds=5.0):
    values = data.values
    return DataMatrix(values + sds * values.std(axis=0, ddof=1))


def test_compare_ranks_unshifted_model_first(serial_settings, sample_csv, gumbel_sample, tmp_path):
    near, far = tmp_path / "near.csv", tmp_path / "far.csv"
    write_sample_csv(sample(univariate_targets()["gum"], 400, RngStream(4)), near)
    write_sample_csv(shifted(gumbel_sample), far)
    code, content = run_json(["compare", "--observed", str(sample_csv), "--models", str(far), str(near),
                              "--estimator", "hist", "--index", "l1", "l2"], tmp_path / "cmp.json")
    assert code == 0
    results = content["results"]
    assert results["winners"] == {"T~1": str(near), "T~2": str(near)}
    for row in results["rows"]:
        assert row["indices"]["T~1"] != pytest.approx(row["indices"]["T~2"])
    near_row, far_row = results["rows"][1], results["rows"][0]
    assert far_row["indices"]["T~2"] > near_row["indices"]["T~2"]


def test_quick_theory_checks_pass(tmp_path):
    code, content = run_json(["verify-theory", "--quick"], tmp_path / "theory.json")
    assert code == 0
    assert content["results"]["passed"] is True
    assert len(content["results"]["checks"]) == 7


def test_study_rejects_bad_experiment():
    assert main(["study", "--experiment", "3d"]) == 4


@pytest.mark.slow
def test_unshifted_model_wins_across_replicates(serial_settings):
    target = univariate_targets()["gum"]
    wins = []
    for k in range(100):
        observed = sample(target, 400, RngStream(777, 2 * k))
        near = sample(target, 400, RngStream(777, 2 * k + 1))
        scores = [data_vs_data_index(observed, model, "hist", quantile_level=0.95).value
                  for model in (near, shifted(observed))]
        wins.append(int(np.argmin(scores)) == 0)
    assert sum(wins) >= 95
