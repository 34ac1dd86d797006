"""Reference drivetrain: vehicle, machine, device assignment and calibration.

The calibration fixes three scalars so that the 2L-B6 SiC reference spends its
WLTC loss energy as 10 % inverter switching, 2 % inverter conduction, 55 %
fundamental and 33 % modulation-induced machine loss:

* ``switching_scale`` multiplies the switching energies of the SiC MOSFETs
  (the datasheet values are fast-gate-drive figures; traction drives switch
  slower). It is the root of ``E_sw / E_cond = 10 / 2``, re-sizing the bridge
  for every trial value.
* ``fundamental_scale`` and ``harmonic_coeff`` scale the raw machine maps so the
  two machine shares hit 55 % and 33 % exactly.

Run ``python -m mlidrive.reference`` to regenerate the bundled calibration.
"""

from __future__ import annotations

import argparse
import json
import math
from dataclasses import asdict, dataclass, replace
from importlib.resources import files
from pathlib import Path

from scipy.optimize import brentq

from .drive_cycle import VehicleParams, builtin_cycle
from .economics import simulate_topology
from .inverter.topology import TopologyConfig
from .motor import DQMachine, GridMap, MotorModel, generate_maps
from .semiconductors import SwitchDevice, load_device_library
from .sizing import (SizingConstraints, full_load_result, peak_operating_point, size_full_load,
                     size_partial_load, three_level_predicate)

TARGET_SHARES = {"inv_sw": 0.10, "inv_cond": 0.02, "mot_f": 0.55, "mot_h": 0.33}

REFERENCE_VEHICLE = {"mass": 2000.0, "drag_area_CdA": 0.60, "rolling_coeff_Crr": 0.009,
                     "wheel_radius": 0.34, "gear_ratio": 9.5, "driveline_eff": 0.97}

TOPOLOGY_DEVICES = {
    "B6_Si": {"T1": "IKQ120N120CS7", "T2": "IKQ120N120CS7"},
    "B6_SiC": {"T1": "SCT4018KR", "T2": "SCT4018KR"},
    "TNPC_SiC": {"T1": "SCT4018KR", "T2": "SCT4018KR", "T3": "SCT4013DR", "T4": "SCT4013DR"},
    "ANPC_SiC": {r: "SCT4013DR" for r in ("T1", "T2", "T3", "T4", "T5", "T6")},
}
TOPOLOGY_ORDER = ("B6_SiC", "B6_Si", "TNPC_SiC", "ANPC_SiC")


@dataclass(frozen=True)
class Calibration:
    switching_scale: float
    fundamental_scale: float
    harmonic_coeff: float

    @classmethod
    def load(cls, path=None) -> "Calibration":
        if path is None:
            text = (files("mlidrive") / "data" / "calibration.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        d = json.loads(text)
        return cls(d["switching_scale"], d["fundamental_scale"], d["harmonic_coeff"])


def reference_vehicle() -> VehicleParams:
    return VehicleParams(**REFERENCE_VEHICLE)


def reference_machine() -> DQMachine:
    return DQMachine()


def scale_switching(device: SwitchDevice, factor: float) -> SwitchDevice:
    return replace(device, e_on=device.e_on * factor, e_off=device.e_off * factor,
                   e_rr=device.e_rr * factor)


def device_library(switching_scale: float | None = None, path=None) -> dict:
    """Device records with the SiC switching energies calibrated."""
    lib = load_device_library(path)
    if switching_scale is None:
        switching_scale = Calibration.load().switching_scale
    return {k: scale_switching(d, switching_scale) if d.is_mosfet else d for k, d in lib.items()}


def nominal_topology(kind: str, library: dict, f_sw: float = 10e3, **kw) -> TopologyConfig:
    devices = {role: library[part] for role, part in TOPOLOGY_DEVICES[kind].items()}
    return TopologyConfig(kind, f_sw, devices, **kw)


def reference_motor(machine: DQMachine | None = None, **kw) -> MotorModel:
    """Machine with the bundled calibrated loss maps."""
    base = files("mlidrive") / "data"
    fund = GridMap.from_csv(base / "motor_fundamental_loss.csv")
    harm = GridMap.from_csv(base / "motor_harmonic_ref.csv")
    return MotorModel(fund, harm, machine=machine or reference_machine(), **kw)


def raw_motor(machine: DQMachine | None = None) -> MotorModel:
    machine = machine or reference_machine()
    fund, harm, _ = generate_maps(machine)
    return MotorModel(fund, harm, machine=machine)


def size_topologies(nominal, motor: MotorModel, constraints: SizingConstraints, reference=None):
    """Size every topology; a sized 2L-B6 SiC bridge is the area reference.

    ``reference`` is the nominal reference bridge; by default the first B6_SiC
    entry of ``nominal``. Returns ``{name: SizingResult}`` in input order.
    """
    nominal = list(nominal)
    peak = peak_operating_point(motor, constraints)
    ref_topo = reference or next((t for t in nominal if t.kind == "B6_SiC"), None)
    ref_area = full_load_result(ref_topo, peak, constraints).die_area_mm2 if ref_topo else None
    out = {}
    for topo in nominal:
        if topo.supports_3l:
            fl, _ = size_full_load(topo, peak, constraints)
            out[topo.name] = size_partial_load(topo, fl, constraints, motor, ref_area)
        else:
            out[topo.name] = full_load_result(topo, peak, constraints, ref_area)
    return out


def _b6_split(scale, motor, vehicle, cycle, constraints):
    lib = device_library(scale)
    b6 = nominal_topology("B6_SiC", lib, constraints.f_sw)
    sized = size_topologies([b6], motor, constraints)["B6_SiC"].sized
    res, _ = simulate_topology(sized, vehicle, cycle, motor, three_level_predicate(constraints),
                               constraints.u_dc)
    return res.breakdown_per100


def calibrate(machine: DQMachine | None = None, vehicle: VehicleParams | None = None,
              cycle=None, constraints: SizingConstraints | None = None, bracket=(1.0, 40.0)):
    """Solve the three calibration scalars; returns ``(Calibration, raw MotorModel)``."""
    motor = raw_motor(machine)
    vehicle = vehicle or reference_vehicle()
    cycle = cycle or builtin_cycle()
    constraints = constraints or SizingConstraints()
    ratio = TARGET_SHARES["inv_sw"] / TARGET_SHARES["inv_cond"]

    def f(log_s):
        b = _b6_split(math.exp(log_s), motor, vehicle, cycle, constraints)
        return math.log(b["inv_sw"] / b["inv_cond"] / ratio)

    log_s = brentq(f, math.log(bracket[0]), math.log(bracket[1]), xtol=1e-4)
    scale = math.exp(log_s)
    b = _b6_split(scale, motor, vehicle, cycle, constraints)
    total = (b["inv_sw"] + b["inv_cond"]) / (TARGET_SHARES["inv_sw"] + TARGET_SHARES["inv_cond"])
    cal = Calibration(scale, TARGET_SHARES["mot_f"] * total / b["mot_f"],
                      TARGET_SHARES["mot_h"] * total / b["mot_h"])
    return cal, motor


def write_bundle(out_dir, cal: Calibration, motor: MotorModel):
    out = Path(out_dir)
    motor.loss_map_fundamental.scaled(cal.fundamental_scale).to_csv(out / "motor_fundamental_loss.csv")
    motor.harmonic_ref.scaled(cal.harmonic_coeff).to_csv(out / "motor_harmonic_ref.csv")
    with open(out / "calibration.json", "w", encoding="utf-8") as fh:
        json.dump({**asdict(cal), "target_shares": TARGET_SHARES}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv=None):
    ap = argparse.ArgumentParser(description="Regenerate the bundled reference calibration.")
    ap.add_argument("--out", default=str(Path(__file__).parent / "data"))
    args = ap.parse_args(argv)
    cal, motor = calibrate()
    write_bundle(args.out, cal, motor)
    print(json.dumps(asdict(cal), indent=2))


if __name__ == "__main__":
    main()
