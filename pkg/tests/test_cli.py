from pathlib import Path

import numpy as np
import pytest

from spinqed.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _read(path):
    rows = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    names = rows[0].split(",")
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    return dict(zip(names, data.T))


def test_correction_sign(tmp_path):
    assert main(["correction", "--config", str(CONFIGS / "correction.ini"), "--out", str(tmp_path)]) == 0
    cols = _read(tmp_path / "correction.csv")
    assert cols["t"][0] == 0 and cols["t"][-1] == pytest.approx(10.0)
    assert cols["s1_z"][0] == 0
    assert np.all(cols["s1_z"] <= 0)


def test_bound_prints_one(tmp_path, capsys):
    assert main(["bound", "--config", str(CONFIGS / "bound.ini"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "bound 1.0\n" in out


def test_bloch_columns(tmp_path):
    assert main(["bloch", "--out", str(tmp_path)]) == 0
    cols = _read(tmp_path / "bloch.csv")
    t = cols["t"]
    assert np.max(np.abs(cols["R0_11"] - np.cos(2 * t))) < 1e-10
    assert np.max(np.abs(cols["S0_3"] - 1.0)) < 1e-10


def test_header_provenance(tmp_path):
    main(["correction", "--config", str(CONFIGS / "correction.ini"), "--out", str(tmp_path)])
    head = [l for l in (tmp_path / "correction.csv").read_text().splitlines() if l.startswith("#")]
    text = "\n".join(head)
    assert "spinqed 0.1.0" in text
    assert "[cutoff] kind = gaussian" in text
    assert "[grid] n_radial" in text


def test_byte_identical_reruns(tmp_path):
    for name in ("a", "b"):
        assert main(["photon-rate", "--config", str(CONFIGS / "photon_rate.ini"),
                     "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "photon_rate.csv").read_bytes()
    b = (tmp_path / "b" / "photon_rate.csv").read_bytes()
    assert a == b


def test_oracle_and_sweep(tmp_path):
    assert main(["oracle", "--config", str(CONFIGS / "oracle.ini"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "oracle.csv").exists() and (tmp_path / "oracle_summary.json").exists()
    assert main(["sweep", "--config", str(CONFIGS / "sweep.ini"), "--out", str(tmp_path),
                 "--threads", "2"]) == 0
    assert (tmp_path / "sweep_summary.json").exists()


def test_config_error_exit(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SPINQED_HBAR_VALUE", "-1")
    assert main(["bloch", "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_unknown_key_exit(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nn_radail = 3\n")
    assert main(["bloch", "--config", str(bad), "--out", str(tmp_path)]) == 1


def test_numeric_failure_exit(tmp_path, capsys):
    bad = tmp_path / "drift.ini"
    bad.write_text("[time]\nt_final = 2000\ndt = 0.5\nn_samples = 3\n")
    assert main(["bloch", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_selftest(tmp_path, capsys):
    assert main(["selftest", "--config", str(CONFIGS / "defaults.ini"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS] 9 selftest" in out
