#!/usr/bin/env python3
"""
End-to-end tests of the command-line front end.
"""

import sys

import pandas as pd
import pytest

from experiments.app import ORACLE_SEED, main
from experiments.manifest import read_key_values
from experiments.oracles import LISTEN_TIME_DRAWS, listen_time_equivalence
from experiments.output import BOUND_COLUMNS, OUTAGE_COLUMNS
from simulator.config import settings

OUTAGE_HEADER = "snr_db,rate_bpcu,n_relays,n_rotations,block_len,isolated,trials,failures,outage_prob,ci_low,ci_high"


@pytest.fixture(autouse=True)
def no_log_file(monkeypatch):
    monkeypatch.setattr(settings, "log_file", "")


def _outage_args(output, *extra):
    return [
        "outage", "--relays", "1", "--rotations", "2", "--frame", "64", "--rate", "2",
        "--snr-db", "0:40:5", "--trials", "2000", "--seed", "7", "--output", str(output), *extra,
    ]


def test_outage_writes_csv_and_manifest(tmp_path):
    """Test a 9-point SNR sweep and its manifest."""
    out = tmp_path / "outage.csv"
    assert main(_outage_args(out)) == 0

    text = out.read_text(encoding="utf-8")
    assert text.splitlines()[0] == OUTAGE_HEADER
    assert OUTAGE_HEADER == ",".join(OUTAGE_COLUMNS)
    assert text.endswith("\n") and "\r" not in text
    table = pd.read_csv(out)
    assert len(table) == 9
    assert table["snr_db"].tolist() == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
    assert (table["trials"] == 2000).all()
    assert ((table["ci_low"] <= table["outage_prob"]) & (table["outage_prob"] <= table["ci_high"])).all()

    manifest = read_key_values(str(out) + ".manifest", "outage")
    assert manifest["seed"] == "7"
    assert manifest["snr_db"] == "0:40:5"
    raw = (tmp_path / "outage.csv.manifest").read_text(encoding="utf-8")
    assert "subcommand=outage" in raw
    assert "tool_version=" in raw and "finished_at=" in raw


def test_outage_miso_is_monotone(tmp_path):
    out = tmp_path / "miso.csv"
    assert main(_outage_args(out, "--combining", "miso")) == 0
    failures = pd.read_csv(out)["failures"].tolist()
    assert failures == sorted(failures, reverse=True)


def test_outage_rerun_is_byte_identical(tmp_path):
    """Test determinism across thread counts and a manifest replay."""
    first, second, replay = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(_outage_args(first, "--threads", "1")) == 0
    assert main(_outage_args(second, "--threads", "3")) == 0
    assert first.read_bytes() == second.read_bytes()

    assert main(["outage", "--config", str(first) + ".manifest", "--output", str(replay)]) == 0
    assert replay.read_bytes() == first.read_bytes()


def test_flags_override_config_file(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text("relays=1\nrate=2\nsnr_db=10,20\ntrials=1000\nseed=3\n", encoding="utf-8")
    out = tmp_path / "o.csv"
    assert main(["outage", "--config", str(config), "--trials", "500", "--output", str(out)]) == 0
    assert (pd.read_csv(out)["trials"] == 500).all()
    assert read_key_values(str(out) + ".manifest", "outage")["trials"] == "500"


def test_connectivity_sweep(tmp_path):
    out = tmp_path / "iso.csv"
    args = ["outage", "--relays", "3", "--rotations", "4", "--rate", "2", "--snr-db", "10,20",
            "--trials", "500", "--seed", "1", "--isolated", "false,true", "--output", str(out)]
    assert main(args) == 0
    rows = out.read_text(encoding="utf-8").splitlines()[1:]
    assert [row.split(",")[5] for row in rows] == ["false", "false", "true", "true"]


def test_outage_config_errors(tmp_path, capsys):
    """Test exit code 2 before any computation."""
    out = tmp_path / "bad.csv"
    assert main(["outage", "--relays", "1", "--rate", "2", "--snr-db", "0:10:5", "--trials", "10",
                 "--output", str(out)]) == 2
    assert "--seed" in capsys.readouterr().err
    assert main(_outage_args(out, "--block", "3")) == 2
    assert main(_outage_args(out, "--ordering", "sideways")) == 2
    assert main(_outage_args(out, "--seed", "-4")) == 2
    assert not out.exists()

    config = tmp_path / "bad.conf"
    config.write_text("relays=1\ncolour=blue\n", encoding="utf-8")
    assert main(["outage", "--config", str(config)]) == 2
    assert main(["outage", "--config", str(tmp_path / "missing.conf")]) == 2


def test_unknown_flag_exits_with_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["outage", "--frobnicate", "1"])
    assert exc.value.code == 2


def test_manifest_from_other_subcommand_rejected(tmp_path):
    out = tmp_path / "dmt.csv"
    assert main(["dmt", "--frames", "16", "--grid", "0:1:0.5", "--output", str(out)]) == 0
    assert main(["outage", "--config", str(out) + ".manifest"]) == 2


def test_dmt_table(tmp_path):
    """Test the DMT table shape, endpoint row and bound validity."""
    out = tmp_path / "dmt.csv"
    assert main(["dmt", "--relays", "1", "--frames", "16,64,256", "--grid", "0:1:0.01", "--output", str(out)]) == 0
    table = pd.read_csv(out)
    assert list(table.columns) == ["r", "d_optimal", "d_lower_bound_T16", "d_lower_bound_T64", "d_lower_bound_T256"]
    assert len(table) == 101
    assert table.iloc[0].tolist() == [0.0, 2.0, 2.0, 2.0, 2.0]
    for column in table.columns[2:]:
        assert (table[column] <= table["d_optimal"] + 1e-9).all()
    assert (tmp_path / "dmt.csv.manifest").exists()


def test_dmt_invalid_grid(tmp_path):
    assert main(["dmt", "--grid", "0:2:0.5", "--output", str(tmp_path / "d.csv")]) == 2
    assert main(["dmt", "--grid", "0:1", "--output", str(tmp_path / "d.csv")]) == 2
    assert main(["dmt", "--frames", "1", "--output", str(tmp_path / "d.csv")]) == 2


def test_rate_table(capsys):
    assert main(["rate", "--bits", "2", "--relays", "3", "--blocks", "1,4,8"]) == 0
    assert capsys.readouterr().out == "block_len,useful_rate_bpcu\n1,0.5\n4,0.8\n8,0.8888888889\n"
    assert main(["rate", "--bits", "2", "--relays", "1", "--blocks", "1"]) == 0
    assert capsys.readouterr().out.splitlines()[1] == "1,0.6666666667"
    assert main(["rate", "--blocks", "0,4"]) == 2


def test_oracle_suite_passes(tmp_path, capsys):
    """Test the built-in oracles with a reduced SISO trial count."""
    report = tmp_path / "oracle.tsv"
    assert main(["oracle", "--trials", "20000", "--output", str(report)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split("\t") == ["oracle", "status", "expected", "computed", "tolerance"]
    statuses = {line.split("\t")[0]: line.split("\t")[1] for line in lines[1:]}
    assert set(statuses) == {
        "siso_closed_form", "deterministic_trace", "schedule_coverage", "dmt_endpoints",
        "listen_time_equivalence", "useful_rate_values", "region_lp_agreement",
    }
    assert set(statuses.values()) == {"pass"}
    assert report.read_text(encoding="utf-8").splitlines() == lines
    assert (tmp_path / "oracle.tsv.manifest").exists()

def test_listen_time_oracle_default_draws():
    """Test the listen-time oracle at its default of 10^4 random single-relay draws."""
    assert LISTEN_TIME_DRAWS == 10_000
    result = listen_time_equivalence(int(ORACLE_SEED))
    assert result.passed and result.computed == 0.0


def test_bound_table(tmp_path):
    """Test the paired-rotation versus lower-bound outage table and its manifest."""
    out = tmp_path / "bound.csv"
    args = ["bound", "--rate", "1,2", "--snr-db", "10,20", "--trials", "2000", "--seed", "5", "--output", str(out)]
    assert main(args) == 0
    table = pd.read_csv(out)
    assert list(table.columns) == BOUND_COLUMNS
    assert table["rate_bpcu"].tolist() == [1.0, 1.0, 2.0, 2.0]
    assert table["snr_db"].tolist() == [10.0, 20.0, 10.0, 20.0]
    assert (table["frame_len"] == 64).all() and (table["trials"] == 2000).all()
    assert (table["bound_failures"] >= table["paired_failures"]).all()
    assert read_key_values(str(out) + ".manifest", "bound")["rate"] == "1,2"

    assert main(["bound", "--rate", "2", "--snr-db", "10", "--trials", "10", "--output", str(out)]) == 2
    assert main(["bound", "--rate", "2", "--snr-db", "10", "--trials", "10", "--seed", "1",
                 "--frame", "0", "--output", str(tmp_path / "b.csv")]) == 2


def test_help_names_the_application(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert settings.app_name in capsys.readouterr().out


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
