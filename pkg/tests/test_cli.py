"""Command-line interface: subcommands, exit codes, file outputs."""

import json

from mmwmcast.cli import main

FAST = ["--q-samples", "400"]


def test_calibrate_writes_cache(tmp_path, capsys):
    cache = tmp_path / "cal.jsonl"
    rc = main(["calibrate", "--n-antennas", "16", "--q-samples", "400",
               "--grid-size", "64", "--cache", str(cache)])
    assert rc == 0
    assert cache.exists()
    out = capsys.readouterr().out
    assert "eta1=" in out and "Z=" in out


def test_estimate_prints_per_user_rows(tmp_path, capsys):
    rc = main(["estimate", "--n-antennas", "16", "--seed", "1", *FAST])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 3  # header + K=3 users


def test_design_prints_sizes_summing_to_64(calib64_mag, capsys):
    # Session fixture pre-warms the full-size calibration memo.
    rc = main(["design", "--seed", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert rc == 0
    size_line = next(l for l in out.splitlines() if l.startswith("sub-array"))
    assert "(sum=64)" in size_line
    assert "phase factors" in out


def test_fig1_campaign_writes_outputs(tmp_path, capsys):
    cfg = dict(
        kind="gain-error", n_antennas=16, trials=5, q_samples=400,
        calibration_grid=64, snr_db_grid=[0.0, 6.0],
    )
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = main(["fig1", "--config", str(cfg_path), "--seed", "7",
               "--trials", "4", "--out", str(tmp_path / "out")])
    assert rc == 0
    trials = (tmp_path / "out" / "fig1_trials.jsonl").read_text().splitlines()
    curves = (tmp_path / "out" / "fig1_curves.csv").read_text().splitlines()
    assert len(trials) == 2 * 4  # grid points x trials
    assert len(curves) == 1 + 2


def test_fig2_campaign_writes_outputs(tmp_path, capsys):
    cfg = dict(
        kind="min-snr", n_antennas=16, trials=2, q_samples=400,
        calibration_grid=64, snr_db_grid=[12.0],
    )
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = main(["fig2", "--config", str(cfg_path), "--out", str(tmp_path / "out")])
    assert rc == 0
    curves = (tmp_path / "out" / "fig2_curves.csv").read_text().splitlines()
    assert len(curves) == 1 + 3  # three methods at one SNR point


def test_fig_config_kind_mismatch_is_config_error(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(dict(kind="min-snr")))
    rc = main(["fig1", "--config", str(cfg_path)])
    assert rc == 1


def test_oracle_small_instance(capsys):
    rc = main(["oracle", "--n-antennas", "6", "--entry-bits", "2", "--seed", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "candidates evaluated: 4096" in out


def test_oracle_refuses_full_size(capsys):
    rc = main(["oracle", "--n-antennas", "64"])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_unknown_subcommand_exits_2(capsys):
    assert main(["nonsense"]) == 2


def test_unknown_flag_exits_2(capsys):
    assert main(["estimate", "--bogus"]) == 2
