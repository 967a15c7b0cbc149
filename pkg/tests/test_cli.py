import csv
import json
import subprocess
import sys

import pytest

from jcas.cli import CSV_HEADER, main
from jcas.region import build_region
from jcas.scenario import ChannelParams, ResourceSplit, e_nqi, e_qi_d


def test_unknown_flag_is_usage_error(capsys):
    assert main(["region", "--bogus"]) == 2
    err = capsys.readouterr().err
    assert "usage:" in err and "--bogus" in err


def test_missing_command_is_usage_error(capsys):
    assert main([]) == 2


def test_invalid_parameter_names_flag(capsys):
    assert main(["exponents", "--eta", "1.5"]) == 2
    assert "--eta" in capsys.readouterr().err


def test_region_csv_schema_and_round_trip(tmp_path):
    out, base = tmp_path / "region.csv", tmp_path / "base.csv"
    args = ["region", "--eta", "0.99", "--n-th", "1e4", "--n", "10", "--lambda-grid", "5", "--split-grid", "4"]
    assert main(args + ["--out", str(out), "--baseline-out", str(base)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    rows = list(csv.DictReader(lines))
    points, frontier = build_region(ChannelParams(0.99, 1e4, 10.0), 5, 4)
    assert len(rows) == len(points)
    for row, p in zip(rows, points):
        assert float(row["rate_nats"]) == p.rate
        assert float(row["exponent_nats"]) == p.exponent
        assert float(row["lambda"]) == p.lam
    flagged = [i for i, r in enumerate(rows) if r["frontier"] == "1"]
    assert flagged == sorted(frontier.indices)
    assert base.read_text().splitlines()[0] == CSV_HEADER


def test_region_deterministic_across_threads(tmp_path, monkeypatch):
    args = ["region", "--n", "2", "--lambda-grid", "6", "--split-grid", "5", "--out"]
    assert main(args + [str(tmp_path / "a.csv")]) == 0
    monkeypatch.setenv("JCAS_THREADS", "3")
    assert main(args + [str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_exponents_json(capsys):
    assert main(["exponents", "--eta", "0.9", "--n-th", "100", "--n", "0.01", "--n-s", "0.005", "--n-m", "0.005"]) == 0
    recs = {r["name"]: r for r in json.loads(capsys.readouterr().out)}
    assert set(recs) == {"e_nqi_exact", "e_nqi_approx", "e_qi_d_exact", "e_qi_d_approx"}
    p = ChannelParams(0.9, 100.0, 0.01)
    assert recs["e_nqi_exact"]["value"] == e_nqi(p)
    assert recs["e_qi_d_exact"]["value"] == e_qi_d(p, ResourceSplit(0.0, 0.005, 0.005))
    assert recs["e_qi_d_exact"]["units"] == "nats/copy"
    assert recs["e_qi_d_exact"]["params"]["n_s"] == 0.005


def test_rates_with_lambda(capsys):
    assert main(["rates", "--eta", "0.99", "--n-th", "1e4", "--n", "0.1", "--n-m", "0.1", "--lambda", "0.5"]) == 0
    recs = {r["name"]: r["value"] for r in json.loads(capsys.readouterr().out)}
    assert recs["r_ua"] <= recs["chi_ua_exact"]
    assert recs["combined_rate"] == pytest.approx(0.5 * recs["c_ea"] + 0.5 * recs["r_ua"])


def test_rates_exact_ea_capability_error(capsys):
    assert main(["rates", "--eta", "0.99", "--n-th", "1e4", "--n", "10", "--ea-mode", "fock"]) == 1
    assert "error" in capsys.readouterr().err


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("eta = 0.9\nn-th = 100\nn = 0.01\n")
    assert main(["exponents", "--config", str(cfg)]) == 0
    first = json.loads(capsys.readouterr().out)[0]
    assert first["params"]["eta"] == 0.9
    assert main(["exponents", "--config", str(cfg), "--eta", "0.8"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["params"]["eta"] == 0.8


@pytest.mark.parametrize("header, code", [("[run]\n", 0), ("", 0), ("[other]\n", 2)])
def test_config_section_header(tmp_path, capsys, header, code):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(header + "eta = 0.9\n")
    assert main(["exponents", "--config", str(cfg)]) == code
    capsys.readouterr()


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("eta = 0.9\ncolour = blue\n")
    assert main(["exponents", "--config", str(cfg)]) == 2
    assert "colour" in capsys.readouterr().err


def test_simulate_byte_identical(tmp_path, monkeypatch):
    args = ["simulate", "--hypotheses", "pair", "--means", "0.1,1", "--copies", "4,8,12", "--trials", "5000", "--seed", "7", "--out"]
    assert main(args + [str(tmp_path / "a.json")]) == 0
    assert main(args + [str(tmp_path / "b.json")]) == 0
    monkeypatch.setenv("JCAS_THREADS", "4")
    assert main(args + [str(tmp_path / "c.json")]) == 0
    a = (tmp_path / "a.json").read_bytes()
    assert a == (tmp_path / "b.json").read_bytes() == (tmp_path / "c.json").read_bytes()
    names = [r["name"] for r in json.loads(a)]
    assert "fitted_exponent" in names and "analytic_exponent" in names


def test_verify_suite_passes(capsys):
    assert main(["verify", "--suite", "chernoff"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 3 and "FAIL" not in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "jcas", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "simulate" in res.stdout
