"""Generate the bundled synthetic 40-record fleet fixture (seeded, deterministic)."""

import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from mlidrive.fleet.records import COLUMNS  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src" / "mlidrive" / "data" / "fleet_fixture.csv"


def main(seed=20240501):
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(40):
        year = int(2011 + (k * 15) // 40)
        age = year - 2011
        batt = round(float(rng.normal(30 + 4.0 * age, 10)), 1)
        batt = max(batt, 16.0)
        cons = round(float(rng.normal(17.5, 2.0)), 2)
        rng_km = round(batt / cons * 100 * float(rng.uniform(0.9, 1.0)), 1)
        mass = round(float(1350 + 9.5 * batt + rng.normal(0, 90)), 0)
        power = round(float(max(60.0, rng.normal(90 + 14 * age, 45))), 0)
        accel = round(float(max(3.2, 13.5 - 0.022 * power + rng.normal(0, 0.8))), 1)
        cost = round(float(max(22000, 18000 + 420 * batt + 80 * power + rng.normal(0, 6000))), -2)
        row = {c: "" for c in COLUMNS}
        row.update(model_id=f"SYN-{k:03d}", entry_year=year, range_km=rng_km, battery_kwh=batt,
                   inverter_tech=("Si", "SiC", "mixed", "unknown")[int(rng.integers(0, 4)) if year >= 2019 else 0],
                   consumption_kwh_per100=cons, mass_kg=mass, accel_0_100_s=accel,
                   drivetrain=("FWD", "RWD", "AWD")[k % 3], motor_power_kw=power)
        if k % 4:
            row["cost_eur"] = cost
        if k % 5 == 0:
            row["mass_kg"] = ""
        if k % 2 == 0:
            row["motor_torque_nm"] = round(power * 2.1, 0)
            row["sys_voltage_v"] = 800.0 if year >= 2020 and k % 3 == 0 else 400.0
        rows.append(row)
    with open(OUT, "w", newline="", encoding="utf-8") as fh:
        wr = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        wr.writeheader()
        wr.writerows(rows)
    print(OUT)


if __name__ == "__main__":
    main()
