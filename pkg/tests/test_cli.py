import csv
import json
from importlib.resources import files
from pathlib import Path

import pytest

from mlidrive.cli import EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE, EXIT_OK, main

FIXTURE = str(files("mlidrive") / "data" / "fleet_fixture.csv")
GOLDEN = json.loads((Path(__file__).parent / "golden" / "fleet_fixture_golden.json").read_text())


def urban_cycle(path):
    # two stop-and-go hills up to 50 km/h
    rows = ["t_s,v_kmh"]
    t = 0
    for _ in range(2):
        for v in list(range(0, 50, 5)) + [50] * 10 + list(range(50, -1, -5)):
            rows.append(f"{t},{v}")
            t += 1
    path.write_text("\n".join(rows) + "\n")
    return path


def config(tmp_path, kinds=("B6_SiC",), **extra):
    cyc = urban_cycle(tmp_path / "urban.csv")
    raw = {"cycle": cyc.name, "topologies": [{"kind": k, "area": "auto"} for k in kinds],
           "output_dir": str(tmp_path / "out")}
    raw.update(extra)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return p


def read_body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# command=")
    return list(csv.DictReader(lines[1:]))


def test_simulate_smoke(tmp_path, capsys):
    assert main(["simulate", "--config", str(config(tmp_path))]) == EXIT_OK
    res = json.loads((tmp_path / "out" / "B6_SiC_result.json").read_text())
    assert res["result"]["e_loss_per100_kwh"] > 0
    assert res["provenance"]["command"] == "simulate"
    rows = read_body(tmp_path / "out" / "B6_SiC_losses.csv")
    assert len(rows) == 2 * 31 - 1
    assert {r["mode"] for r in rows} == {"2L"}


def test_tnpc_uses_three_level_in_town(tmp_path):
    assert main(["simulate", "--config", str(config(tmp_path, ("B6_SiC", "TNPC_SiC")))]) == EXIT_OK
    res = json.loads((tmp_path / "out" / "TNPC_SiC_result.json").read_text())
    assert res["result"]["mode_share_3L"] > 0


def test_reruns_are_byte_identical(tmp_path):
    cfg = config(tmp_path, ("B6_SiC", "ANPC_SiC"))
    for out in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / out)]) == EXIT_OK
        assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / out)]) == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_compare_overrides(tmp_path):
    cfg = config(tmp_path, ("B6_SiC", "TNPC_SiC"))
    assert main(["compare", "--config", str(cfg), "--battery-price", "100",
                 "--ranges", "400"]) == EXIT_OK
    rows = read_body(tmp_path / "out" / "comparison.csv")
    assert [(r["topology"], float(r["range_km"])) for r in rows] == [("B6_SiC", 400.0),
                                                                     ("TNPC_SiC", 400.0)]
    tn = rows[1]
    assert float(tn["delta_cost_eur"]) == pytest.approx(100 * float(tn["delta_e_kwh"]))
    assert float(rows[0]["delta_cost_eur"]) == 0.0


def test_size_json(tmp_path):
    assert main(["size", "--config", str(config(tmp_path, ("B6_SiC", "TNPC_SiC")))]) == EXIT_OK
    d = json.loads((tmp_path / "out" / "sizing.json").read_text())
    assert [r["topology"] for r in d["results"]] == ["B6_SiC", "TNPC_SiC"]
    assert d["results"][1]["binding_constraint"] == "thermal"


@pytest.mark.parametrize("extra", [{"bogus": 1}, {"battery_price": -3}, {"baseline": "NPC"},
                                   {"topologies": []}])
def test_config_errors_exit_2(tmp_path, extra):
    assert main(["compare", "--config", str(config(tmp_path, **extra))]) == EXIT_CONFIG


def test_missing_config_exit_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG


def test_infeasible_exit_3(tmp_path, capsys):
    cfg = config(tmp_path, constraints={"t_j_max": 66.0})
    assert main(["size", "--config", str(cfg)]) == EXIT_INFEASIBLE
    assert "thermal" in capsys.readouterr().err


def test_bad_cycle_exit_4(tmp_path):
    cfg = config(tmp_path)
    (tmp_path / "urban.csv").write_text("t_s,v_kmh\n0,0\n1,10\n1,20\n")
    assert main(["simulate", "--config", str(cfg)]) == EXIT_DATA


def test_fleet_reports_match_golden(tmp_path):
    cfg = config(tmp_path)
    assert main(["fleet", "--config", str(cfg), "--dataset", FIXTURE]) == EXIT_OK
    out = tmp_path / "out"
    rows = read_body(out / "fleet_cohorts.csv")
    for g in GOLDEN["cohorts"]:
        for var, s in g["stats"].items():
            row = next(r for r in rows if int(r["start_year"]) == g["window"][0] and r["variable"] == var)
            assert float(row["mean"]) == pytest.approx(s["mean"], abs=1e-9)
            assert float(row["std"]) == pytest.approx(s["std"], abs=1e-9)
            assert int(row["count"]) == s["count"]
    corr = json.loads((out / "fleet_corr.json").read_text())
    assert corr["records"] == 40
    long = read_body(out / "fleet_corr_long.csv")
    k = len(corr["report"]["variables"])
    assert len(long) == k * k
    assert (out / "fleet_quartiles.csv").exists()


def test_fleet_single_year_quartiles(tmp_path):
    cfg = config(tmp_path)
    assert main(["fleet", "--config", str(cfg), "--dataset", FIXTURE, "--report", "quartiles",
                 "--year", "1999"]) == EXIT_DATA
    assert main(["fleet", "--config", str(cfg), "--dataset", FIXTURE, "--report", "bogus"]) == EXIT_CONFIG


def test_fleet_warns_when_nothing_survives(tmp_path, capsys):
    p = tmp_path / "tiny.csv"
    p.write_text("model_id,entry_year,range_km,battery_kwh,inverter_tech,mass_kg\n"
                 "a,2020,300,60,SiC,1800\nb,2021,350,70,SiC,1900\nc,2022,420,80,Si,2100\n")
    assert main(["fleet", "--config", str(config(tmp_path)), "--dataset", str(p),
                 "--report", "corr"]) == EXIT_OK
    assert "no variable pair survived" in capsys.readouterr().err


def test_fleet_missing_dataset(tmp_path):
    assert main(["fleet", "--config", str(config(tmp_path)), "--dataset",
                 str(tmp_path / "no.csv")]) == EXIT_DATA
