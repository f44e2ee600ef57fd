import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ebikecast import bundle
from ebikecast.cli import EXIT_MISSING_INPUT, main
from ebikecast.ingest import read_annual, read_monthly

NS = "{http://www.w3.org/2000/svg}"
FAST = ["--order", "1,1,1"]


@pytest.fixture(scope="module")
def prepped(tmp_path_factory):
    out = tmp_path_factory.mktemp("prep")
    assert main(["prep", "--output", str(out)]) == 0
    return out


def test_prep_conserves_annual_totals(prepped):
    annual = read_annual(prepped / "AnnualUSEbikeSales.csv")
    monthly = read_monthly(prepped / "MonthlyUSEbikeSales.csv")
    sums = monthly.values.reshape(-1, 12).sum(axis=1)
    assert np.allclose(sums, annual.values, rtol=1e-9)
    assert annual[2019] == read_annual(bundle.path(bundle.KNOWN_US))[2019]
    assert (prepped / "monthly_sales.svg").exists()


def test_prep_ref_year_default(tmp_path, prepped):
    assert main(["prep", "--output", str(tmp_path), "--ref-year", "2019", "--no-plots"]) == 0
    assert (tmp_path / "MonthlyUSEbikeSales.csv").read_bytes() == (prepped / "MonthlyUSEbikeSales.csv").read_bytes()


def test_prep_ref_year_changes_proxy(tmp_path, prepped):
    assert main(["prep", "--output", str(tmp_path), "--ref-year", "2018", "--no-plots"]) == 0
    assert (tmp_path / "AnnualUSEbikeSales.csv").read_bytes() != (prepped / "AnnualUSEbikeSales.csv").read_bytes()


def test_missing_input(tmp_path, capsys):
    code = main(["prep", "--output", str(tmp_path), "--european", str(tmp_path / "nope.csv")])
    assert code == EXIT_MISSING_INPUT
    assert "not found" in capsys.readouterr().err


def test_bad_input_exit_code(tmp_path, capsys):
    bad = tmp_path / "eu.csv"
    bad.write_text("Year,Sales\n2019,-5\n")
    assert main(["prep", "--output", str(tmp_path), "--european", str(bad)]) == 3
    assert "negative" in capsys.readouterr().err


def test_seed_changes_simulate_not_prep(tmp_path, prepped):
    a, b = tmp_path / "a", tmp_path / "b"
    for out, seed in ((a, "1"), (b, "2")):
        assert main(["prep", "--output", str(out), "--seed", seed, "--no-plots"]) == 0
        assert main(["simulate", "--output", str(out), "--seed", seed, "--trials", "5", "--no-plots"]) == 0
    assert (a / "MonthlyUSEbikeSales.csv").read_bytes() == (b / "MonthlyUSEbikeSales.csv").read_bytes()
    assert (a / "simulation_trials.csv").read_bytes() != (b / "simulation_trials.csv").read_bytes()


def test_seed_from_environment(tmp_path, prepped, monkeypatch):
    args = ["simulate", "--input", str(prepped / "MonthlyUSEbikeSales.csv"), "--trials", "3", "--no-plots"]
    monkeypatch.setenv("EBIKECAST_SEED", "7")
    assert main(args + ["--output", str(tmp_path / "env")]) == 0
    monkeypatch.delenv("EBIKECAST_SEED")
    assert main(args + ["--output", str(tmp_path / "flag"), "--seed", "7"]) == 0
    assert (tmp_path / "env" / "simulation_trials.csv").read_bytes() == (
        tmp_path / "flag" / "simulation_trials.csv"
    ).read_bytes()


def test_forecast_svg_has_horizon_points(tmp_path, prepped):
    args = ["forecast", "--input", str(prepped / "MonthlyUSEbikeSales.csv"), "--output", str(tmp_path)]
    assert main(args + FAST) == 0
    root = ET.parse(tmp_path / "forecast.svg").getroot()
    lines = {pl.find(f"{NS}title").text: pl for pl in root.iter(f"{NS}polyline")}
    assert len(lines["forecast mean"].get("points").split()) == 137
    rows = (tmp_path / "MonthlyEBikeUSForecast.csv").read_text().splitlines()
    assert rows[0] == "Month,Mean,Lower,Upper"
    assert len(rows) == 138


def test_forecast_rows_ordered(tmp_path, prepped):
    args = ["forecast", "--input", str(prepped / "MonthlyUSEbikeSales.csv"), "--output", str(tmp_path), "--no-plots"]
    assert main(args + FAST + ["--horizon", "12"]) == 0
    rows = [r.split(",") for r in (tmp_path / "MonthlyEBikeUSForecast.csv").read_text().splitlines()[1:]]
    for _, mean, lo, hi in rows:
        assert float(lo) <= float(mean) <= float(hi)


def test_simulate_outputs(tmp_path, prepped):
    args = ["simulate", "--input", str(prepped / "MonthlyUSEbikeSales.csv"), "--output", str(tmp_path)]
    assert main(args + ["--trials", "4", "--param", "miles=70,5"]) == 0
    summary = (tmp_path / "simulation_summary.csv").read_text().splitlines()
    assert summary[0] == "Year,CO2kg_mean,CO2kg_std,kCal_mean,kCal_std"
    trials = (tmp_path / "simulation_trials.csv").read_text().splitlines()
    assert trials[0] == "Trial,Month,CO2kg,kCal"
    assert {r.split(",")[0] for r in trials[1:]} == {"0", "1", "2", "3"}
    root = ET.parse(tmp_path / "co2_trials.svg").getroot()
    assert len(list(root.iter(f"{NS}polyline"))) == 4


def test_bad_param_name(tmp_path, prepped):
    args = ["simulate", "--input", str(prepped / "MonthlyUSEbikeSales.csv"), "--output", str(tmp_path)]
    assert main(args + ["--param", "speed=1,1", "--no-plots"]) == 9


def test_importance_output(tmp_path, capsys):
    assert main(["importance", "--output", str(tmp_path), "--trees", "20"]) == 0
    rows = (tmp_path / "importances.csv").read_text().splitlines()
    assert rows[0] == "Variable,Importance"
    assert abs(sum(float(r.split(",")[1]) for r in rows[1:]) - 1) < 1e-9
    assert "MAE" in capsys.readouterr().out


def test_diagnose_and_fit(tmp_path, prepped, capsys):
    src = ["--input", str(prepped / "MonthlyUSEbikeSales.csv"), "--output", str(tmp_path)]
    assert main(["diagnose", *src, *FAST]) == 0
    assert main(["fit", *src, *FAST]) == 0
    out = capsys.readouterr().out
    assert "ADF" in out and "Ljung-Box" in out


def test_invalid_order_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["fit", "--order", "0,0,0"])
    assert info.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ebikecast", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "simulate" in proc.stdout
