"""End-to-end tests of the command-line interface."""

import json

import numpy as np
import pytest

from fixnet.cli import block_check_rows, decay_check_rows, main, run_approx_check
from fixnet.rng import Stream


def _write_training_csv(path, n=16, seed=0):
    stream = Stream(seed)
    x = stream.uniform_matrix(n, 2, low=-1.0, high=1.0)
    y = x[:, 0] + 0.5 * x[:, 1] + 0.02 * stream.normals(n)
    lines = ["x1,x2,y"]
    lines.extend(f"{a:.17g},{b:.17g},{c:.17g}" for (a, b), c in zip(x, y))
    path.write_text("\n".join(lines) + "\n")
    return x, y


def _write_query_csv(path, rows):
    lines = ["x1,x2"]
    lines.extend(f"{a:.17g},{b:.17g}" for a, b in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_config(path, doc):
    doc = {"schema": 1, **doc}
    path.write_text(json.dumps(doc))
    return str(path)


FAST_FIT = {"r": 1, "N": 1, "M": 2, "R": 1e5, "trials": 3}


def test_fit_then_predict_round_trip(tmp_path, capsys):
    train = tmp_path / "train.csv"
    _write_training_csv(train)
    model = tmp_path / "model.json"
    config = _write_config(tmp_path / "fit.json", FAST_FIT)

    code = main(["fit", "--config", config, "--input", str(train),
                 "--output", str(model), "--seed", "1"])
    out = capsys.readouterr().out
    assert code == 0
    assert "coefficient bound audit: pass" in out
    assert "features: 9" in out
    assert model.exists()

    queries = [(0.1, -0.2), (0.1, -0.2), (0.5, 0.5)]
    query_csv = tmp_path / "query.csv"
    _write_query_csv(query_csv, queries)
    pred_csv = tmp_path / "pred.csv"
    code = main(["predict", "--model", str(model), "--input", str(query_csv),
                 "--output", str(pred_csv)])
    assert code == 0
    lines = pred_csv.read_text().strip().split("\n")
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    assert any("# seed: 1" == ln for ln in header)
    assert body[0] == "prediction"
    values = [float(v) for v in body[1:]]
    assert len(values) == 3
    # Identical input rows give byte-identical predictions.
    assert body[1] == body[2]
    # Fitted on a near-linear target, the model must track it roughly.
    assert values[0] == pytest.approx(0.1 - 0.1, abs=0.35)


def test_predict_empty_input(tmp_path, capsys):
    train = tmp_path / "train.csv"
    _write_training_csv(train)
    model = tmp_path / "model.json"
    config = _write_config(tmp_path / "fit.json", FAST_FIT)
    assert main(["fit", "--config", config, "--input", str(train),
                 "--output", str(model)]) == 0
    capsys.readouterr()

    empty = tmp_path / "empty.csv"
    empty.write_text("x1,x2\n")
    out_csv = tmp_path / "out.csv"
    assert main(["predict", "--model", str(model), "--input", str(empty),
                 "--output", str(out_csv)]) == 0
    assert "0 predictions" in capsys.readouterr().out
    body = [ln for ln in out_csv.read_text().strip().split("\n")
            if not ln.startswith("#")]
    assert body == ["prediction"]


def test_predict_dimension_mismatch(tmp_path, capsys):
    train = tmp_path / "train.csv"
    _write_training_csv(train)
    model = tmp_path / "model.json"
    config = _write_config(tmp_path / "fit.json", FAST_FIT)
    assert main(["fit", "--config", config, "--input", str(train),
                 "--output", str(model)]) == 0
    capsys.readouterr()

    bad = tmp_path / "bad.csv"
    bad.write_text("x1\n0.5\n")
    code = main(["predict", "--model", str(model), "--input", str(bad),
                 "--output", str(tmp_path / "o.csv")])
    assert code == 2
    assert "expects d=2" in capsys.readouterr().err


def test_fit_reports_csv_header_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2\n0.1,0.2\n")
    code = main(["fit", "--input", str(bad)])
    assert code == 2
    err = capsys.readouterr().err
    assert "error:" in err and "y" in err


def test_fit_refuses_oversized_feature_grids(tmp_path, capsys):
    train = tmp_path / "train.csv"
    _write_training_csv(train)
    config = _write_config(tmp_path / "big.json", {"r": 1, "N": 1, "M": 10_000_000})
    code = main(["fit", "--config", config, "--input", str(train),
                 "--output", str(tmp_path / "m.json")])
    assert code == 2
    assert "exceeds the supported maximum" in capsys.readouterr().err


def test_fit_rejects_unknown_estimator(tmp_path, capsys):
    train = tmp_path / "train.csv"
    _write_training_csv(train)
    config = _write_config(tmp_path / "bad.json", {"estimator": "forest"})
    assert main(["fit", "--config", config, "--input", str(train)]) == 2
    assert "unknown estimator" in capsys.readouterr().err


def test_config_schema_is_validated(tmp_path, capsys):
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"schema": 2}))
    assert main(["fit", "--config", str(bad), "--input", "x.csv"]) == 2
    assert "schema" in capsys.readouterr().err


def test_missing_input_is_reported(tmp_path, capsys):
    assert main(["fit", "--input", str(tmp_path / "nope.csv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_bench_command_mini_run_is_reproducible(tmp_path, capsys):
    config = _write_config(tmp_path / "bench.json", {
        "targets": ["m2"],
        "noises": [0.05],
        "methods": ["constant", "kernel"],
        "n": 25,
        "eval_n": 100,
        "reps": 2,
        "ref_realizations": 2,
    })
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["bench", "--config", config, "--output", str(out_a)]) == 0
    assert main(["bench", "--config", config, "--output", str(out_b)]) == 0
    stdout = capsys.readouterr().out
    assert "m2 noise=0.05 constant:" in stdout
    csv_a = (out_a / "bench_report.csv").read_bytes()
    csv_b = (out_b / "bench_report.csv").read_bytes()
    assert csv_a == csv_b
    assert (out_a / "bench_report.md").exists()
    assert b"# seed: 0" in csv_a


def test_rate_command_mini_run(tmp_path, capsys):
    config = _write_config(tmp_path / "rate.json", {
        "sample_sizes": [20, 30, 40, 50],
        "seeds": 1,
        "trials": 2,
        "m_grid": [2],
        "eval_n": 50,
    })
    out_dir = tmp_path / "rate_out"
    assert main(["rate", "--config", config, "--output", str(out_dir)]) == 0
    stdout = capsys.readouterr().out
    assert "slope:" in stdout
    report = (out_dir / "rate_report.csv").read_text()
    assert report.startswith("# fixnet rate experiment")
    assert "n,mean_error" in report


def test_approx_check_quick_passes(tmp_path, capsys):
    table = tmp_path / "table.csv"
    code = main(["approx-check", "--quick", "--output", str(table)])
    stdout = capsys.readouterr().out
    assert code == 0
    assert "FAIL" not in stdout
    verdicts = [ln for ln in stdout.split("\n") if ln.endswith("pass")]
    assert len(verdicts) == 15
    text = table.read_text()
    assert "check,scale,measured,bound,ok" in text


def test_block_check_rows_cover_all_blocks_and_scales():
    rows = block_check_rows(scales=(1e3,))
    assert [r["check"] for r in rows] == [
        "identity", "square", "product", "positive-part", "tent",
    ]
    assert all(r["ok"] for r in rows)
    assert all(r["measured"] <= r["bound"] for r in rows)


def test_decay_check_rows_sit_in_window():
    rows = decay_check_rows()
    assert len(rows) == 2
    for r in rows:
        assert r["lower"] <= r["measured"] <= r["bound"]
        assert r["ok"]


def test_run_approx_check_full_includes_decay():
    rows, ok = run_approx_check(full=True, scales=(1e3,))
    assert ok
    assert len(rows) == 7
