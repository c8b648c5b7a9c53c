import json

import numpy as np
import pytest

from beepmis import cli
from beepmis.harness import Report
from beepmis.kernel import INACTIVE, Scenario, empty_trace

SMALL = ["-n", "16", "--family", "gnp", "--gen", "p=0.3"]


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_run_batch_exits_zero(capsys):
    code, out = run_cli(capsys, "run", "--protocol", "luby", "--seeds", "3", *SMALL)
    assert code == cli.EXIT_OK
    summary = json.loads(out.out)
    assert summary["trials"] == 3 and summary["mis_violation_trials"] == 0


def test_run_writes_report(capsys, tmp_path):
    code, _ = run_cli(capsys, "run", "--protocol", "fastmis", "--seed-list", "4,9", *SMALL, "--out", str(tmp_path))
    assert code == cli.EXIT_OK
    data = json.loads((tmp_path / "report.json").read_text())
    assert [t["seed"] for t in data["trials"]] == [4, 9]


def test_run_exits_nonzero_on_violation(capsys, monkeypatch):
    fake = Report({}, [], {"trials": 1, "mis_violation_trials": 1, "stats": {}})
    monkeypatch.setattr(cli, "run_batch", lambda cfg: fake)
    code, out = run_cli(capsys, "run", "--protocol", "luby", *SMALL)
    assert code == cli.EXIT_VIOLATION
    assert "mis_violation_trials" in out.err


def test_run_exits_nonzero_on_k_statistic(capsys, monkeypatch):
    fake = Report({}, [], {"trials": 1, "mis_violation_trials": 0, "stats": {"k_decreases": 2}})
    monkeypatch.setattr(cli, "run_batch", lambda cfg: fake)
    code, _ = run_cli(capsys, "run", "--protocol", "luby", *SMALL)
    assert code == cli.EXIT_VIOLATION


def test_run_preset(capsys):
    code, out = run_cli(capsys, "run", "--preset", "criterion-9")
    assert code == cli.EXIT_OK
    assert out.out.split()[:3] == ["criterion", "9", "[PASS]"]


def test_config_error_exit_code(capsys):
    code, out = run_cli(capsys, "run", "--protocol", "fastmis", "--N", "4", *SMALL)
    assert code == cli.EXIT_USAGE
    assert "error" in out.err


def test_sweep(capsys, tmp_path):
    code, out = run_cli(capsys, "sweep", "--protocol", "luby", "--seeds", "2", "--ns", "16", "32", "64",
                        "--gen", "p=0.2", "--out", str(tmp_path))
    assert code == cli.EXIT_OK
    assert json.loads(out.out)["fit"] is not None
    assert (tmp_path / "sweep.json").exists()


def test_replay_then_verify(capsys, tmp_path):
    code, out = run_cli(capsys, "replay", "--protocol", "luby", "--seed", "2", *SMALL, "--out", str(tmp_path))
    assert code == cli.EXIT_OK
    npz = tmp_path / "trace-luby-seed2.npz"
    csv = tmp_path / "trace-luby-seed2.csv"
    assert npz.exists() and csv.exists()
    code, out = run_cli(capsys, "verify-trace", str(npz), "--k0", "6")
    assert code == cli.EXIT_OK
    rep = json.loads(out.out)
    assert rep["independent"] and rep["maximal"]


def test_verify_csv_with_scenario(capsys, tmp_path):
    sc_path = tmp_path / "sc.json"
    assert run_cli(capsys, "gen-scenario", *SMALL, "--seed", "2", "--out", str(sc_path))[0] == cli.EXIT_OK
    run_cli(capsys, "replay", "--protocol", "fastmis", "--seed", "0", "--scenario", str(sc_path),
            "--out", str(tmp_path))
    code, out = run_cli(capsys, "verify-trace", str(tmp_path / "trace-fastmis-seed0.csv"), "--scenario", str(sc_path))
    assert code == cli.EXIT_OK
    assert json.loads(out.out)["maximal"]


def test_verify_csv_needs_scenario(capsys, tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("round,node,state,action,observation,beep_prob\n")
    assert run_cli(capsys, "verify-trace", str(p))[0] == cli.EXIT_USAGE


def test_verify_flags_decreasing_k(capsys, tmp_path):
    tr = empty_trace(Scenario(1, [], (0,)), 0, 3)
    tr.state[:] = INACTIVE
    tr.k[:] = np.array([[12], [12], [6]])
    tr.save(tmp_path / "bad.npz")
    code, out = run_cli(capsys, "verify-trace", str(tmp_path / "bad.npz"))
    assert code == cli.EXIT_VIOLATION
    assert json.loads(out.out)["hard"]["k_decreases"] == 1


def test_gen_scenario_prints_json(capsys):
    code, out = run_cli(capsys, "gen-scenario", "--generator", "case1", "--gen", "k=4", "--gen", "l=1",
                        "--gen", "p=0.5", "--gen", "scale=2")
    assert code == cli.EXIT_OK
    assert json.loads(out.out)["nodes"] > 0


def test_codec_encode_decode(capsys):
    code, out = run_cli(capsys, "codec", "encode", "--block", "5", "--data", "101")
    assert code == cli.EXIT_OK
    bits = out.out.strip()
    code, out = run_cli(capsys, "codec", "decode", "--bits", bits + "00")
    assert "block 5 data 101" in out.out


def test_codec_prefix(capsys):
    code, out = run_cli(capsys, "codec", "prefix", "--length", "8")
    assert out.out.split() == ["01020103", "11011001"]


def test_codec_align(capsys):
    code, out = run_cli(capsys, "codec", "align", "--l", "3", "--start", "40")
    assert code == cli.EXIT_OK
    assert json.loads(out.out)["l"] == 3


def test_codec_rejects_bad_bits(capsys):
    assert run_cli(capsys, "codec", "encode", "--block", "1", "--data", "12")[0] == cli.EXIT_USAGE


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        cli.main([])
