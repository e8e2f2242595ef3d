import csv
import json
import subprocess
import sys

import pytest

from weakdistill import cli
from weakdistill.cli import ConfigError, RunConfig, build_parser, main, resolve_config
from weakdistill.errors import RejectionBudgetExceeded


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def floats(row):
    return [float(x) if x else None for x in row]


def test_pure_trace_golden(tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["pure", "--alpha-sq", "0.4", "--steps", "15", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["n", "epsilon_n", "p_n", "p_net_n", "p_s_n"]
    assert len(rows) == 15
    assert rows[0] == ["1", "0.20000000000000007", "0.47999999999999998", "0.47999999999999998", "0.47999999999999998"]
    assert floats(rows[-1])[4] == pytest.approx(0.8, abs=1e-5)
    manifest = json.loads((tmp_path / "trace.csv.manifest.json").read_text())
    assert manifest["config"]["alpha_sq"] == 0.4
    assert manifest["total_success"] == pytest.approx(0.8, abs=1e-5)
    assert {"weakdistill", "python", "numpy"} <= set(manifest["versions"])
    assert "total" in manifest["timings_s"]


def test_pure_already_maximal_exit_code(capsys):
    assert main(["pure", "--alpha-sq", "0.5"]) == 3


def test_pure_entropy_sweep_golden(tmp_path):
    out = tmp_path / "entropy.csv"
    assert main(["pure", "--sweep-entropy", "--points", "99", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["s_value", "alpha_sq", "total_success"]
    assert len(rows) == 99
    assert rows[0] == ["0.01", "0.0025062814466900174", "0.0050125628933800348"]
    vals = [floats(r) for r in rows]
    for s, _, total in vals:
        assert total == pytest.approx(1 - (1 - s) ** 0.5, abs=1e-10)
    assert all(b[2] > a[2] for a, b in zip(vals, vals[1:]))
    assert vals[-1][2] == pytest.approx(0.9, abs=1e-12)


def test_trajectory_json_golden_and_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["trajectory", "--alpha-sq", "0.4", "--samples", "100000", "--seed", "7", "--format", "json"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    summary = json.loads(a.read_text())
    assert summary["n_success"] == 79892
    assert 0.7962 <= summary["success_fraction"] <= 0.8038
    lo, hi = summary["confidence_interval_95"]
    assert lo < summary["success_fraction"] < hi
    assert "timings_s" not in summary
    assert summary["mean_steps_to_success"] == pytest.approx(1.5439468282180944, abs=1e-15)


def test_trajectory_csv_golden(capsys):
    assert main(["trajectory", "--alpha-sq", "0.4", "--samples", "1000", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == (
        "alpha_sq,expected_total_success,master_seed,mean_steps_to_success,n_steps,"
        "n_success,n_trajectories,sigma,success_fraction,ci_low,ci_high"
    )
    row = lines[1].split(",")
    assert row[5] == "806" and row[6] == "1000"


def test_trajectory_zero_samples_is_config_error():
    assert main(["trajectory", "--samples", "0"]) == 2


def test_mixed_sweep_dephasing_point(capsys):
    assert main(["mixed-sweep", "--channel", "dephasing", "--alpha-sq", "0.4", "--u", "0.25"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "s_value,weight,c_before,c_after,sign"
    s, w, c0, c1, sign = lines[1].split(",")
    assert float(c0) == pytest.approx(0.489898, abs=1e-6)
    assert float(c1) == pytest.approx(0.5, abs=1e-12)
    assert sign == "1"


def test_mixed_sweep_amplitude_damping_grid_golden(tmp_path):
    out = tmp_path / "ad.csv"
    assert main(["mixed-sweep", "--channel", "amplitude_damping", "--grid", "3", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["s_value", "weight", "c_before", "c_after", "sign"]
    assert len(rows) == 9
    assert rows[0][:2] == ["0.25", "0.25"]
    assert floats(rows[0])[2] == pytest.approx(0.375, abs=1e-15)
    assert floats(rows[0])[3] == pytest.approx(0.28669446363747919, abs=1e-12)
    assert rows[0][4] == "-1"


def test_mixed_sweep_monte_carlo_golden(tmp_path):
    out = tmp_path / "mc.csv"
    args = ["mixed-sweep", "--channel", "monte-carlo", "--a-sz", "-0.5", "--grid", "2", "--samples", "20", "--seed", "3"]
    assert main(args + ["--out", str(out)]) == 0
    path = tmp_path / "mc_asz-0.5000.csv"
    header, rows = read_csv(path)
    assert header == ["s_value", "lambda", "n_samples", "mean_c_before", "mean_c_after", "sign"]
    assert len(rows) == 4
    first = floats(rows[0])
    assert first[:3] == pytest.approx([1 / 3, 1 / 3, 20])
    assert first[3] == pytest.approx(0.28269283404298073, abs=1e-12)
    assert first[4] == pytest.approx(0.38909027455203826, abs=1e-12)
    assert rows[0][5] == "1"
    manifest = json.loads((tmp_path / "mc.csv.manifest.json").read_text())
    assert manifest["master_seed"] == 3 and manifest["n"] == 20
    assert manifest["a_sz"] == [-0.5] and manifest["partial"] is False
    assert manifest["files"] == [str(path)]


def test_monte_carlo_manifest_records_threshold(tmp_path):
    out = tmp_path / "mc.csv"
    args = ["mixed-sweep", "--channel", "monte-carlo", "--a-sz", "-0.95", "0.3", "--grid", "1", "--samples", "5"]
    assert main(args + ["--out", str(out)]) == 0
    manifest = json.loads((tmp_path / "mc.csv.manifest.json").read_text())
    assert manifest["threshold_s_value"]["-0.95"] == pytest.approx(0.0975, abs=1e-15)
    assert manifest["threshold_s_value"]["0.3"] is None
    assert len(manifest["files"]) == 2


def test_monte_carlo_multiple_values_need_out():
    assert main(["mixed-sweep", "--channel", "mc", "--a-sz", "-0.5", "0.5", "--grid", "1", "--samples", "5"]) == 2


def test_monte_carlo_thread_independent(tmp_path):
    base = ["mixed-sweep", "--channel", "mc", "--a-sz", "0.1", "--grid", "2", "--samples", "30", "--seed", "9"]
    assert main(base + ["--out", str(tmp_path / "a" / "x.csv")]) == 0
    assert main(base + ["--out", str(tmp_path / "b" / "x.csv"), "--threads", "4"]) == 0
    name = "x_asz+0.1000.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_budget_exceeded_flushes_partial_output(tmp_path, monkeypatch):
    real = cli.iter_monte_carlo

    def failing(*args, **kwargs):
        gen = real(*args, **kwargs)
        yield next(gen)
        yield next(gen)
        raise RejectionBudgetExceeded("budget", accepted=3, rejections=1_000_001)

    monkeypatch.setattr(cli, "iter_monte_carlo", failing)
    out = tmp_path / "mc.csv"
    args = ["mixed-sweep", "--channel", "mc", "--a-sz", "0.2", "--grid", "2", "--samples", "5", "--out", str(out)]
    assert main(args) == 4
    _, rows = read_csv(tmp_path / "mc_asz+0.2000.csv")
    assert len(rows) == 2
    manifest = json.loads((tmp_path / "mc.csv.manifest.json").read_text())
    assert manifest["partial"] is True
    assert manifest["failure"]["rejections"] == 1_000_001


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 11, "alpha-sq": 0.3, "steps": 5, "samples": 50}))
    parser = build_parser()
    env = {"WEAKDISTILL_SEED": "3", "WEAKDISTILL_THREADS": "2"}
    r = resolve_config(parser.parse_args(["trajectory"]), env)
    assert r.master_seed == 3 and r.threads == 2
    r = resolve_config(parser.parse_args(["trajectory", "--config", str(cfg)]), env)
    assert (r.master_seed, r.alpha_sq, r.n_steps, r.n_samples) == (11, 0.3, 5, 50)
    r = resolve_config(parser.parse_args(["trajectory", "--config", str(cfg), "--seed", "4"]), env)
    assert r.master_seed == 4 and r.alpha_sq == 0.3
    r = resolve_config(parser.parse_args(["trajectory"]), {})
    assert r.master_seed == RunConfig().master_seed


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["pure", "--config", str(bad)]) == 2
    nested = tmp_path / "nested.json"
    nested.write_text(json.dumps({"grid": {"n": 3}}))
    assert main(["pure", "--config", str(nested)]) == 2
    assert main(["pure", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["pure", "--alpha-sq", "1.5"]) == 2
    assert main(["mixed-sweep", "--channel", "dephasing", "--u", "0.9"]) == 2
    assert main(["mixed-sweep", "--channel", "teleport"]) == 2
    assert main(["nonsense"]) == 2


def test_run_config_round_trip():
    cfg = RunConfig(command="mixed-sweep", a_sz=(-0.95, 0.5), lam=0.3, grid=11, channel="monte-carlo")
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    with pytest.raises(ConfigError):
        RunConfig(command="pure", n_steps=0).validate()


def test_module_entry_point(tmp_path):
    out = tmp_path / "t.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "weakdistill", "pure", "--steps", "3", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert len(read_csv(out)[1]) == 3


def test_json_format_for_tables(capsys):
    assert main(["pure", "--steps", "2", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["columns"][0] == "n" and len(doc["rows"]) == 2
