"""Run configuration: one structured JSON (or YAML) file per study.

Schema (all keys optional unless noted)::

    {
      "vehicle": {"mass": 2000, "drag_area_CdA": 0.6, ...},      # VehicleParams fields
      "cycle": "builtin:wltc_class3b" | "path/to/cycle.csv",
      "motor": {"fundamental_map": "builtin" | path, "harmonic_map": "builtin" | path,
                "op_solver_map": path, "machine": {...DQMachine fields},
                "kappa_3l": 0.3, "beta_fsw": 0.6},
      "devices": path to a device library JSON (bundled library by default),
      "switching_scale": float (bundled calibration by default),
      "topologies": [ {"kind": "B6_SiC", "name": "...", "f_sw": 10000,
                       "devices": {"T1": "SCT4018KR", ...},      # default: reference parts
                       "area": "auto" | {"T1": 1.5, ...} | 1.0,
                       "dc_link_capacitance": 5e-4, "mode_policy": "min_loss"} ],   # required
      "constraints": {...SizingConstraints fields},
      "battery_price": 70, "ranges": [300, 500, 700], "baseline": "B6_SiC",
      "output_dir": "out", "seed": 0,
      "fleet": {"dataset": path, "variables": [...], "alpha": 0.05, "z_cut": 3,
                "cohort_variables": [...], "quartile_variable": "motor_power_kw"}
    }

Relative paths resolve against the directory of the config file.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path

from .drive_cycle import DriveCycle, VehicleParams, builtin_cycle, load_cycle
from .economics import BATTERY_PRICE, RANGES_KM
from .errors import ConfigError, DataError
from .inverter.topology import TOPOLOGY_KINDS, TopologyConfig
from .motor import DQMachine, MotorModel, load_motor
from .reference import REFERENCE_VEHICLE, TOPOLOGY_DEVICES, Calibration, device_library
from .sizing import SizingConstraints

KNOWN_KEYS = {"vehicle", "cycle", "motor", "devices", "switching_scale", "topologies",
              "constraints", "battery_price", "ranges", "baseline", "output_dir", "seed", "fleet"}
TOPO_KEYS = {"kind", "name", "f_sw", "devices", "area", "dc_link_capacitance", "mode_policy",
             "r_th_case_coolant", "coolant_temp"}
MOTOR_KEYS = {"fundamental_map", "harmonic_map", "op_solver_map", "machine", "kappa_3l",
              "beta_fsw", "capacitive_share"}


@dataclass
class TopologySpec:
    nominal: TopologyConfig
    area: object = "auto"  # "auto" or {role: factor}

    @property
    def name(self) -> str:
        return self.nominal.name

    def explicit(self) -> TopologyConfig:
        return self.nominal.with_area_factors(self.area)


@dataclass
class RunConfig:
    vehicle: VehicleParams
    cycle: DriveCycle
    motor: MotorModel
    topologies: list
    constraints: SizingConstraints
    battery_price: float = BATTERY_PRICE
    ranges: tuple = RANGES_KM
    baseline: str = "B6_SiC"
    output_dir: Path = Path("out")
    seed: int = 0
    fleet: dict = field(default_factory=dict)
    library: dict = field(default_factory=dict, repr=False)
    raw: dict = field(default_factory=dict, repr=False)
    base_dir: Path = Path(".")

    @property
    def digest(self) -> str:
        return config_digest(self.raw)


def config_digest(raw: dict) -> str:
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def reference_config_path() -> Path:
    return Path(str(files("mlidrive") / "data" / "reference_config.json"))


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            import yaml
        except ImportError:
            raise ConfigError("YAML configs need the optional 'pyyaml' package") from None
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return raw


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    path = p if p.is_absolute() else base / p
    if not path.exists():
        raise ConfigError(f"referenced file does not exist: {p}")
    return path


def _build(cls, d, what):
    if not isinstance(d, dict):
        raise ConfigError(f"{what} must be a mapping")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _cycle(spec, base):
    if spec is None or spec == "builtin:wltc_class3b":
        return builtin_cycle()
    if isinstance(spec, str) and spec.startswith("builtin:"):
        try:
            return builtin_cycle(spec.split(":", 1)[1])
        except DataError as exc:
            raise ConfigError(str(exc)) from None
    return load_cycle(_resolve(base, spec))


def _motor(spec, base):
    spec = dict(spec or {})
    unknown = set(spec) - MOTOR_KEYS
    if unknown:
        raise ConfigError(f"motor: unknown keys {sorted(unknown)}")
    machine = _build(DQMachine, spec.pop("machine", {}), "motor.machine")

    def path(key):
        v = spec.pop(key, "builtin")
        return None if v in (None, "builtin") else _resolve(base, v)

    fund, harm, opm = path("fundamental_map"), path("harmonic_map"), path("op_solver_map")
    try:
        return load_motor(fund, harm, opm, machine=machine, **spec)
    except TypeError as exc:
        raise ConfigError(f"motor: {exc}") from None


def _topology(d, library, default_fsw, k):
    what = f"topologies[{k}]"
    if not isinstance(d, dict):
        raise ConfigError(f"{what} must be a mapping")
    unknown = set(d) - TOPO_KEYS
    if unknown:
        raise ConfigError(f"{what}: unknown keys {sorted(unknown)}")
    kind = d.get("kind")
    if kind not in TOPOLOGY_KINDS:
        raise ConfigError(f"{what}: kind must be one of {TOPOLOGY_KINDS}, got {kind!r}")
    parts = d.get("devices", TOPOLOGY_DEVICES[kind])
    if not isinstance(parts, dict):
        raise ConfigError(f"{what}.devices must map roles to part names")
    devices = {}
    for role, part in parts.items():
        if part not in library:
            raise ConfigError(f"{what}: unknown device {part!r} for role {role}")
        devices[role] = library[part]
    kw = {key: d[key] for key in ("dc_link_capacitance", "mode_policy", "r_th_case_coolant",
                                  "coolant_temp") if key in d}
    cfg = TopologyConfig(kind, float(d.get("f_sw", default_fsw)), devices,
                         name=d.get("name", ""), **kw)
    area = d.get("area", "auto")
    if isinstance(area, (int, float)) and not isinstance(area, bool):
        area = {r: float(area) for r in cfg.roles}
    if area != "auto":
        if not isinstance(area, dict) or set(area) - set(cfg.roles):
            raise ConfigError(f"{what}.area must be 'auto', a number or a role mapping")
        if any(not (isinstance(v, (int, float)) and v > 0) for v in area.values()):
            raise ConfigError(f"{what}.area factors must be positive numbers")
        area = {r: float(v) for r, v in area.items()}
    return TopologySpec(cfg, area)


def _ranges(v):
    if isinstance(v, str):
        try:
            v = [float(s) for s in v.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"ranges must be comma-separated numbers, got {v!r}") from None
    try:
        out = tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError("ranges must be a list of numbers") from None
    if not out or min(out) <= 0:
        raise ConfigError("ranges must be non-empty and positive")
    return out


def apply_overrides(raw: dict, overrides: dict) -> dict:
    out = copy.deepcopy(raw)
    for k, v in overrides.items():
        if v is not None:
            out[k] = v
    return out


def build_run_config(raw: dict, base_dir=".", need_topologies=True) -> RunConfig:
    """Validate a raw config mapping and load everything it references."""
    base = Path(base_dir)
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    vehicle = _build(VehicleParams, raw.get("vehicle", REFERENCE_VEHICLE), "vehicle")
    constraints = _build(SizingConstraints, raw.get("constraints", {}), "constraints")
    cycle = _cycle(raw.get("cycle"), base)
    motor = _motor(raw.get("motor"), base)
    dev_path = _resolve(base, raw["devices"]) if raw.get("devices") else None
    scale = raw.get("switching_scale")
    if scale is None:
        scale = Calibration.load().switching_scale
    if not (isinstance(scale, (int, float)) and scale > 0):
        raise ConfigError("switching_scale must be a positive number")
    library = device_library(float(scale), dev_path)
    topos = raw.get("topologies", [])
    if not isinstance(topos, list):
        raise ConfigError("topologies must be a list")
    specs = [_topology(d, library, constraints.f_sw, k) for k, d in enumerate(topos)]
    if need_topologies and not specs:
        raise ConfigError("topologies must be non-empty")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"topology names must be unique, got {names}")
    price = raw.get("battery_price", BATTERY_PRICE)
    if not (isinstance(price, (int, float)) and price > 0):
        raise ConfigError("battery_price must be a positive number")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    fleet = raw.get("fleet", {})
    if not isinstance(fleet, dict):
        raise ConfigError("fleet must be a mapping")
    return RunConfig(vehicle=vehicle, cycle=cycle, motor=motor, topologies=specs,
                     constraints=constraints, battery_price=float(price),
                     ranges=_ranges(raw.get("ranges", RANGES_KM)),
                     baseline=raw.get("baseline", names[0] if names and "B6_SiC" not in names
                                      else "B6_SiC"),
                     output_dir=Path(raw.get("output_dir", "out")), seed=seed, fleet=fleet,
                     library=library, raw=raw, base_dir=base)


def load_config(path=None, overrides: dict | None = None, need_topologies=True) -> RunConfig:
    """Read, override and validate a config file (the bundled reference study by default)."""
    path = Path(path) if path else reference_config_path()
    raw = apply_overrides(read_config_file(path), overrides or {})
    return build_run_config(raw, path.parent, need_topologies)
