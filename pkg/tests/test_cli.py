import json

import numpy as np
import pandas as pd
import pytest

from resvar.cli import main
from resvar.report import PAYLOAD_FILES
from resvar.synthgen import generate_panel
from resvar.market_data import write_panel


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    write_panel(generate_panel(n_days=260, seed=31), root / "panel.csv")
    (root / "run.yaml").write_text(
        "data: {path: panel.csv}\n"
        "backtest: {calibration_days: 220, evaluation_days: 30, n_draws: 150, master_seed: 4}\n"
        "output: {dir: report}\n"
        "log_level: WARNING\n"
    )
    return root


def test_validate_ok(workspace, capsys):
    assert main(["validate", "--config", str(workspace / "run.yaml")]) == 0
    out = capsys.readouterr().out
    assert "260 days" in out and "RES" in out and "ADF" in out


def test_validate_missing_column(workspace, tmp_path, capsys):
    df = pd.read_csv(workspace / "panel.csv").drop(columns="id3_price")
    df.to_csv(tmp_path / "bad.csv", index=False)
    assert main(["validate", "--data", str(tmp_path / "bad.csv")]) == 2
    assert "id3_price" in capsys.readouterr().err


def test_validate_malformed_config(tmp_path):
    (tmp_path / "c.yaml").write_text("backtest: {n_draws: [\n")
    assert main(["validate", "--config", str(tmp_path / "c.yaml")]) == 1


def test_validate_missing_data_file(tmp_path):
    assert main(["validate", "--data", str(tmp_path / "none.csv")]) == 1


def test_backtest_and_report(workspace, tmp_path, capsys):
    out = tmp_path / "r1"
    before = (workspace / "panel.csv").read_bytes()
    assert main(["backtest", "--config", str(workspace / "run.yaml"), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "MaxSharpe" in text and "%-difference vs DA" in text
    for name in PAYLOAD_FILES + ("manifest.json",):
        assert (out / name).is_file()
    assert (workspace / "panel.csv").read_bytes() == before

    decisions = pd.read_csv(out / "report_decisions.csv")
    assert len(decisions) == 30 * 24 * 5
    assert list(decisions.columns) == ["date", "hour", "strategy", "g_star", "predicted_revenue",
                                       "sharpe", "var5", "realized_revenue"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 4 and len(manifest["config_hash"]) == 64

    out2 = tmp_path / "r2"
    assert main(["backtest", "--config", str(workspace / "run.yaml"), "--out", str(out2),
                 "--threads", "2"]) == 0
    for name in PAYLOAD_FILES:
        assert (out / name).read_bytes() == (out2 / name).read_bytes(), name

    capsys.readouterr()
    assert main(["report", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "DM p-values (revenue)" in text


def test_backtest_strategy_subset(workspace, tmp_path):
    out = tmp_path / "sub"
    assert main(["backtest", "--config", str(workspace / "run.yaml"), "--out", str(out),
                 "--strategies", "da,id", "--draws", "100", "--seed", "1"]) == 0
    summary = json.loads((out / "report_summary.json").read_text())
    assert sorted(summary["strategies"]) == ["DA", "ID"]


def test_backtest_abort_exit_code(workspace, tmp_path, monkeypatch):
    import resvar.backtest as bt
    from resvar.errors import NotPositiveDefinite

    def broken(*a):
        raise NotPositiveDefinite(0)

    monkeypatch.setattr(bt, "fit_hour_model", broken)
    assert main(["backtest", "--config", str(workspace / "run.yaml"), "--out", str(tmp_path)]) == 3


def test_backtest_bad_strategy(workspace, tmp_path):
    assert main(["backtest", "--config", str(workspace / "run.yaml"), "--out", str(tmp_path),
                 "--strategies", "moon"]) == 1


def test_synth_round_trip(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["synth", "--days", "150", "--seed", "2", "--out", str(out)]) == 0
    assert len(pd.read_csv(out)) == 150 * 24
    assert main(["validate", "--data", str(out)]) == 0


def test_synth_defaults(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["synth"]) == 0
    assert len(pd.read_csv(tmp_path / "panel.csv")) == 1461 * 24


def test_synth_too_short(tmp_path):
    assert main(["synth", "--days", "50", "--out", str(tmp_path / "x.csv")]) == 1
    assert not (tmp_path / "x.csv").exists()


def test_synth_unstable_truth(tmp_path):
    from resvar.synthgen import default_truth

    truth = default_truth()
    truth.lag_coeffs[1][:, 2, 2] = 1.5
    truth.save(tmp_path / "t.json")
    assert main(["synth", "--truth", str(tmp_path / "t.json"), "--days", "100",
                 "--out", str(tmp_path / "x.csv")]) == 1


def test_synth_idempotent(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert main(["synth", "--days", "120", "--seed", "3", "--out", str(tmp_path / name),
                     "--write-truth", str(tmp_path / (name + ".json"))]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv.json").read_bytes() == (tmp_path / "b.csv.json").read_bytes()


def test_report_missing_dir(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == 1
