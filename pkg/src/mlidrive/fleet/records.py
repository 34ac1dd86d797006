"""Fleet record schema and CSV ingestion."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path

from ..errors import DataError

log = logging.getLogger(__name__)

MANDATORY = ("battery_kwh", "inverter_tech", "range_km")
REQUIRED = ("model_id", "entry_year")
DRIVETRAINS = ("FWD", "RWD", "AWD")
INVERTER_TECH = ("Si", "SiC", "mixed", "unknown")
YEAR_RANGE = (2005, 2035)


@dataclass(frozen=True)
class FleetRecord:
    model_id: str
    entry_year: int
    range_km: float
    battery_kwh: float
    inverter_tech: str
    consumption_kwh_per100: float | None = None
    mass_kg: float | None = None
    accel_0_100_s: float | None = None
    cost_eur: float | None = None
    drivetrain: str | None = None
    motor_power_kw: float | None = None
    motor_torque_nm: float | None = None
    dc_charge_kw: float | None = None
    ac_charge_kw: float | None = None
    sys_voltage_v: float | None = None
    length_m: float | None = None
    width_m: float | None = None
    height_m: float | None = None
    seats: float | None = None
    payload_kg: float | None = None
    boot_l: float | None = None
    tow_kg: float | None = None
    warranty_km: float | None = None
    one_stop_km: float | None = None

    def get(self, name: str):
        return getattr(self, name)


TEXT_FIELDS = ("model_id", "inverter_tech", "drivetrain")
NUMERIC_FIELDS = tuple(f.name for f in fields(FleetRecord)
                       if f.name not in TEXT_FIELDS and f.name != "entry_year")
COLUMNS = tuple(f.name for f in fields(FleetRecord))


@dataclass(frozen=True)
class Rejection:
    row: int
    reason: str


def _parse_row(row: dict, k: int):
    def blank(v):
        return v is None or str(v).strip() == ""

    for name in MANDATORY + REQUIRED:
        if blank(row.get(name)):
            return None, Rejection(k, f"mandatory field missing: {name}")
    vals = {}
    try:
        year = int(float(row["entry_year"]))
    except ValueError:
        return None, Rejection(k, f"malformed entry_year {row['entry_year']!r}")
    if not YEAR_RANGE[0] <= year <= YEAR_RANGE[1]:
        return None, Rejection(k, f"entry_year {year} outside {YEAR_RANGE[0]}-{YEAR_RANGE[1]}")
    vals["entry_year"] = year
    vals["model_id"] = row["model_id"].strip()
    tech = row["inverter_tech"].strip()
    if tech not in INVERTER_TECH:
        return None, Rejection(k, f"unknown inverter_tech {tech!r}")
    vals["inverter_tech"] = tech
    drive = row.get("drivetrain")
    if not blank(drive):
        if drive.strip() not in DRIVETRAINS:
            return None, Rejection(k, f"unknown drivetrain {drive!r}")
        vals["drivetrain"] = drive.strip()
    for name in NUMERIC_FIELDS:
        raw = row.get(name)
        if blank(raw):
            continue
        try:
            v = float(raw)
        except ValueError:
            return None, Rejection(k, f"malformed numeric cell {name}={raw!r}")
        if not math.isfinite(v) or v <= 0:
            return None, Rejection(k, f"{name} must be positive, got {raw!r}")
        vals[name] = v
    return FleetRecord(**vals), None


def ingest(path, rejections: list | None = None) -> list[FleetRecord]:
    """Parse a fleet CSV. Rows failing validation are dropped and logged.

    Rejections (row index counted from the first data row, and reason) are
    appended to ``rejections`` when a list is given.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read fleet file {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise DataError(f"{path}: missing header row")
        missing = [c for c in MANDATORY + REQUIRED if c not in header]
        if missing:
            raise DataError(f"{path}: header lacks mandatory columns {missing}")
        out = []
        for k, row in enumerate(reader):
            rec, rej = _parse_row(row, k)
            if rej is not None:
                log.info("row %d excluded: %s", rej.row, rej.reason)
                if rejections is not None:
                    rejections.append(rej)
                continue
            out.append(rec)
    return out


def write_records(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(COLUMNS)
        for r in records:
            wr.writerow(["" if r.get(c) is None else r.get(c) for c in COLUMNS])
