from pathlib import Path

import pytest

from teqkd.cli import _bits_hex, main

ROOT = Path(__file__).resolve().parents[1]
BASELINE = ROOT / "scenarios" / "baseline.cfg"
EAVESDROPPER = ROOT / "scenarios" / "eavesdropper.cfg"


def write(tmp_path, text, name="s.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_bits_hex():
    assert _bits_hex([1, 0, 0, 1, 1]) == "98"
    assert _bits_hex([]) == ""


def test_run_baseline_clean(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(BASELINE), "--out", str(out), "--omniscient", "--quiet"]) == 0
    for name in ("events.log", "transcript.log", "summary.txt", "summary.csv", "key_A.hex", "key_B.hex"):
        assert (out / name).exists(), name
    assert (out / "key_A.hex").read_text() == (out / "key_B.hex").read_text()
    assert "decision = clean" in (out / "summary.txt").read_text()


def test_keys_only_in_omniscient_mode(tmp_path):
    assert main(["run", str(BASELINE), "--out", str(tmp_path), "--quiet"]) == 0
    assert not (tmp_path / "key_A.hex").exists()


def test_run_with_eavesdropper_exit_2(tmp_path):
    assert main(["run", str(EAVESDROPPER), "--out", str(tmp_path), "--quiet"]) == 2


def test_no_fire_is_inconclusive(tmp_path):
    cfg = write(tmp_path, "n_rounds = 1\nparty.p_wide = 0.99\nparty.wide.efficiency = 0\n"
                          "party.narrow_low.efficiency = 0\nparty.narrow_high.efficiency = 0\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 3


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, "n_rounds = -5\nparty.p_wide = 7\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "s.cfg:1: n_rounds" in err and "s.cfg:2" in err
    assert main(["run", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 1


def test_sweep_requires_values(tmp_path, capsys):
    cfg = write(tmp_path, "sweep.parameter = party.p_wide\nsweep.values = \n")
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "empty" in capsys.readouterr().err
    assert main(["sweep", str(BASELINE), "--out", str(tmp_path / "o")]) == 1


def test_sweep_writes_table_independent_of_jobs(tmp_path):
    cfg = write(tmp_path, "n_rounds = 30\nn_trials = 60\nadversary.enabled = true\n"
                          "sweep.parameter = party.p_wide\nsweep.values = 0.2, 0.6\n")
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "a"), "--quiet"]) == 0
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "b"), "--quiet", "--jobs", "2"]) == 0
    a = (tmp_path / "a" / "summary.csv").read_text()
    assert a == (tmp_path / "b" / "summary.csv").read_text()
    header, *rows = a.splitlines()
    assert header.split(",")[:4] == ["value", "seed", "key_rate", "detection_probability"]
    assert len(rows) == 2


def test_replay_matches_run_summary(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", str(EAVESDROPPER), "--out", str(out), "--omniscient"])
    printed = capsys.readouterr().out
    assert main(["replay", str(out / "events.log")]) == code
    assert capsys.readouterr().out == printed == (out / "summary.txt").read_text()


def test_byte_identical_reruns(tmp_path):
    for d in ("a", "b"):
        main(["run", str(EAVESDROPPER), "--out", str(tmp_path / d), "--omniscient", "--quiet"])
    for name in ("events.log", "transcript.log", "summary.txt", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
