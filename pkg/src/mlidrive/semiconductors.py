"""Datasheet-level switch and diode models with chip-area scaling.

A device record is a lumped equivalent die. Scaling its area by ``a`` models
``a`` dies in parallel: on-state resistance and junction-to-case thermal
resistance drop by ``a`` while the energy per switching event at a given
total current is unchanged (each die switches ``1/a`` of the current and the
energies are linear in current).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from importlib.resources import files

import numpy as np

from .errors import ConfigError, ThermalRunaway

KINDS = ("SiC-MOSFET", "Si-IGBT", "Si-diode", "SiC-body-diode")
T_REF = 25.0


@dataclass(frozen=True)
class SwitchDevice:
    """Electrical and thermal parameters of one (possibly paralleled) switch.

    MOSFETs use ``r_on``; IGBTs and diodes use the ``v0 + r_slope * I`` forward
    model. A MOSFET conducts reverse current through its channel when
    ``sync_rectification`` is set, otherwise through ``reverse`` (its body
    diode). IGBTs always need a ``reverse`` freewheeling diode.
    """

    name: str
    kind: str
    blocking_voltage: float
    e_on: float
    e_off: float
    e_rr: float
    i_ref: float
    u_ref: float
    r_on: float = 0.0
    v0: float = 0.0
    r_slope: float = 0.0
    temp_coeff_r: float = 0.0
    k_voltage: float = 1.3
    chip_area: float = 1.0
    die_area_mm2: float = 0.0
    r_th_jc: float = 0.5
    sync_rectification: bool = True
    reverse: "SwitchDevice | None" = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"{self.name}: unknown device kind {self.kind!r}")
        if self.kind == "SiC-MOSFET":
            if self.r_on <= 0:
                raise ConfigError(f"{self.name}: r_on must be positive")
        elif self.v0 < 0 or self.r_slope < 0:
            raise ConfigError(f"{self.name}: forward model needs v0 >= 0 and r_slope >= 0")
        if min(self.e_on, self.e_off, self.e_rr) < 0:
            raise ConfigError(f"{self.name}: switching energies must be non-negative")
        if self.chip_area <= 0 or self.i_ref <= 0 or self.u_ref <= 0:
            raise ConfigError(f"{self.name}: chip_area, i_ref and u_ref must be positive")
        if self.kind == "Si-IGBT" and self.reverse is None:
            raise ConfigError(f"{self.name}: an IGBT needs a freewheeling diode")

    @property
    def is_mosfet(self) -> bool:
        return self.kind == "SiC-MOSFET"

    @property
    def total_die_area(self) -> float:
        """Absolute die area in mm^2, including the freewheeling diode."""
        own = self.chip_area * self.die_area_mm2
        if self.reverse is not None and not self.is_mosfet:
            own += self.reverse.chip_area * self.reverse.die_area_mm2
        return own

    def reverse_conductor(self) -> "SwitchDevice":
        """Element carrying reverse current (channel, body diode or co-pack diode)."""
        if self.is_mosfet and (self.sync_rectification or self.reverse is None):
            return self
        return self.reverse

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.reverse is None:
            d.pop("reverse")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SwitchDevice":
        d = dict(d)
        rev = d.pop("reverse", None)
        if rev is not None:
            d["reverse"] = cls.from_dict(rev)
        return cls(**d)


@dataclass(frozen=True)
class ThermalPath:
    r_th_junction_case: float
    r_th_case_coolant: float
    coolant_temp: float = 65.0

    def __post_init__(self):
        if self.r_th_junction_case <= 0 or self.r_th_case_coolant <= 0:
            raise ConfigError("thermal resistances must be positive")

    @property
    def r_total(self) -> float:
        return self.r_th_junction_case + self.r_th_case_coolant


def scale_area(device: SwitchDevice, factor: float) -> SwitchDevice:
    """Return ``device`` with its chip area multiplied by ``factor``."""
    if not factor > 0:
        raise ValueError(f"area factor must be positive, got {factor}")
    rev = device.reverse
    if rev is not None and not device.is_mosfet:
        rev = scale_area(rev, factor)
    elif rev is not None:
        # body diode lives on the MOSFET die
        rev = replace(rev, r_on=rev.r_on / factor, r_slope=rev.r_slope / factor,
                      r_th_jc=rev.r_th_jc / factor, chip_area=rev.chip_area * factor)
    return replace(
        device,
        r_on=device.r_on / factor,
        r_slope=device.r_slope / factor,
        r_th_jc=device.r_th_jc / factor,
        chip_area=device.chip_area * factor,
        reverse=rev,
    )


def _r_at(device: SwitchDevice, junction_temp):
    return 1.0 + device.temp_coeff_r * (np.asarray(junction_temp, dtype=float) - T_REF)


def conduction_voltage(device: SwitchDevice, current, junction_temp=T_REF):
    """On-state voltage at a non-negative current."""
    i = np.asarray(current, dtype=float)
    if np.any(i < 0):
        raise ValueError("conduction current must be non-negative")
    scale = _r_at(device, junction_temp)
    if device.is_mosfet:
        v = device.r_on * scale * i
    else:
        v = device.v0 + device.r_slope * scale * i
    return float(v) if np.ndim(v) == 0 else v


def conduction_coeffs(device: SwitchDevice, junction_temp=T_REF):
    """``(v0, r)`` of the linear forward model at ``junction_temp``."""
    scale = _r_at(device, junction_temp)
    if device.is_mosfet:
        return 0.0 * scale, device.r_on * scale
    return device.v0 + 0.0 * scale, device.r_slope * scale


def switching_energy(device: SwitchDevice, event: str, current, voltage):
    """Energy of one ``on``/``off``/``rr`` event, linear in current."""
    i = np.asarray(current, dtype=float)
    u = np.asarray(voltage, dtype=float)
    if np.any(i < 0) or np.any(u < 0):
        raise ValueError("current and voltage must be non-negative")
    e_ref = {"on": device.e_on, "off": device.e_off, "rr": device.e_rr}[event]
    e = e_ref * (i / device.i_ref) * (u / device.u_ref) ** device.k_voltage
    return float(e) if np.ndim(e) == 0 else e


def junction_temp(path: ThermalPath, device_loss):
    """Steady-state junction temperature for a loss in W."""
    loss = np.asarray(device_loss, dtype=float)
    if np.any(loss < 0):
        raise ValueError("device loss must be non-negative")
    t = path.coolant_temp + loss * path.r_total
    return float(t) if np.ndim(t) == 0 else t


def solve_electrothermal(loss_fn, paths, t_start=None, tol=0.1, max_iter=50, damping=0.8,
                         t_runaway=1000.0):
    """Damped fixed point of ``T = T_coolant + R_th * loss_fn(T)``.

    ``loss_fn`` maps an array of junction temperatures (one per path) to an
    array of losses. Returns ``(temps, losses, iterations)``. Raises
    :class:`ThermalRunaway` if the iteration blows up or fails to settle.
    """
    coolant = np.array([p.coolant_temp for p in paths], dtype=float)
    r_tot = np.array([p.r_total for p in paths], dtype=float)
    t = coolant.copy() if t_start is None else np.array(t_start, dtype=float)
    for it in range(1, max_iter + 1):
        loss = np.asarray(loss_fn(t), dtype=float)
        target = coolant + r_tot * loss
        t_new = t + damping * (target - t)
        step = np.max(np.abs(t_new - t)) if t.size else 0.0
        t = t_new
        if not np.all(np.isfinite(t)) or np.any(t > t_runaway):
            raise ThermalRunaway(f"electro-thermal iteration diverged (T_j > {t_runaway:g} C)")
        if step < tol:
            loss = np.asarray(loss_fn(t), dtype=float)
            return t, loss, it
    raise ThermalRunaway(f"electro-thermal iteration did not settle within {max_iter} steps")


def load_device_library(path=None) -> dict[str, SwitchDevice]:
    """Device records keyed by part name (bundled library by default)."""
    if path is None:
        text = (files("mlidrive") / "data" / "devices.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    raw = json.loads(text)
    return {name: SwitchDevice.from_dict({"name": name, **entry})
            for name, entry in raw["devices"].items()}
