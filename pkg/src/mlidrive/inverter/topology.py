"""Topology definitions: roles, conduction paths, gate patterns, event incidence.

Levels are output potentials in units of ``U_dc/2``: +1 (P), 0 (neutral), -1 (N).
Current sign is positive when current flows out of the leg into the machine.
Every conducting element is addressed as ``(role, channel)`` where channel
``"T"`` is forward conduction of the switch and ``"D"`` reverse conduction
(MOSFET channel under synchronous rectification, body diode, or the
co-packed diode of an IGBT).

ANPC naming: T1 (P-X), T2 (X-out), T3 (out-Y), T4 (Y-N) form the series chain;
T5 (X-NP) and T6 (NP-Y) are the neutral clamps. TNPC: T1 upper, T2 lower,
T3/T4 the anti-series neutral clamp pair (T3 forward for positive current).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import ConfigError
from ..semiconductors import SwitchDevice, ThermalPath, scale_area

TOPOLOGY_KINDS = ("B6_Si", "B6_SiC", "TNPC_SiC", "ANPC_SiC")
MODE_POLICIES = ("always2L", "always3L_when_feasible", "min_loss")

ROLES = {
    "B6": ("T1", "T2"),
    "TNPC": ("T1", "T2", "T3", "T4"),
    "ANPC": ("T1", "T2", "T3", "T4", "T5", "T6"),
}
FULL_LOAD_ROLES = {"B6": ("T1", "T2"), "TNPC": ("T1", "T2"), "ANPC": ("T1", "T2", "T3", "T4")}
PARTIAL_LOAD_ROLES = {"B6": (), "TNPC": ("T3", "T4"), "ANPC": ("T5", "T6")}

POS, NEG = "pos", "neg"

# (level, current sign, reference half) -> conducting elements
_B6_PATHS = {
    (1, 1): (("T1", "T"),),
    (1, -1): (("T1", "D"),),
    (-1, 1): (("T2", "D"),),
    (-1, -1): (("T2", "T"),),
}
_TNPC_ZERO = {
    (0, 1): (("T3", "T"), ("T4", "D")),
    (0, -1): (("T4", "T"), ("T3", "D")),
}
_ANPC_PATHS = {
    (1, 1, POS): (("T1", "T"), ("T2", "T")),
    (1, -1, POS): (("T1", "D"), ("T2", "D")),
    (-1, 1, NEG): (("T3", "D"), ("T4", "D")),
    (-1, -1, NEG): (("T3", "T"), ("T4", "T")),
    (0, 1, POS): (("T6", "T"), ("T3", "D")),
    (0, -1, POS): (("T3", "T"), ("T6", "D")),
    (0, 1, NEG): (("T5", "D"), ("T2", "T")),
    (0, -1, NEG): (("T2", "D"), ("T5", "T")),
}


def conduction_path(family: str, level: int, sign: int, half: str):
    if family == "B6":
        return _B6_PATHS[(level, sign)]
    if family == "TNPC":
        return _B6_PATHS[(level, sign)] if level else _TNPC_ZERO[(level, sign)]
    if level == 1:
        return _ANPC_PATHS[(1, sign, POS)]
    if level == -1:
        return _ANPC_PATHS[(-1, sign, NEG)]
    return _ANPC_PATHS[(0, sign, half)]


# (mode, level, half) -> roles with gate on
_GATES = {
    "B6": {("2L", 1): {"T1"}, ("2L", -1): {"T2"}},
    "TNPC": {
        ("2L", 1): {"T1"}, ("2L", -1): {"T2"},
        ("3L", 1): {"T1", "T3"}, ("3L", 0): {"T3", "T4"}, ("3L", -1): {"T2", "T4"},
    },
    "ANPC": {
        ("2L", 1, POS): {"T1", "T2"}, ("2L", -1, POS): {"T3", "T4"},
        ("2L", 1, NEG): {"T1", "T2"}, ("2L", -1, NEG): {"T3", "T4"},
        ("3L", 1, POS): {"T1", "T2", "T6"}, ("3L", 0, POS): {"T1", "T3", "T6"},
        ("3L", 0, NEG): {"T2", "T4", "T5"}, ("3L", -1, NEG): {"T3", "T4", "T5"},
        # the outer level is never selected in the opposite half; kept for completeness
        ("3L", 1, NEG): {"T1", "T2", "T5"}, ("3L", -1, POS): {"T3", "T4", "T6"},
    },
}


def gate_pattern(family: str, mode: str, level: int, half: str) -> set:
    table = _GATES[family]
    if family == "ANPC":
        return table[(mode, level, half)]
    return table[(mode, level)]


def _cell(active, recover, frac):
    ev = [(r, "T", "on", frac) for r in active] + [(r, "T", "off", frac) for r in active]
    return tuple(ev + [(r, "D", "rr", frac) for r in recover])


# Events per carrier period for (mode, half, current sign):
# (role, channel, event, commutated voltage per device as a fraction of U_dc)
_B6_2L = {1: _cell(["T1"], ["T2"], 1.0), -1: _cell(["T2"], ["T1"], 1.0)}
INCIDENCE = {
    "B6": {("2L", h, s): _B6_2L[s] for h in (POS, NEG) for s in (1, -1)},
    "TNPC": {
        **{("2L", h, s): _B6_2L[s] for h in (POS, NEG) for s in (1, -1)},
        ("3L", POS, 1): _cell(["T1"], ["T4"], 0.5),
        ("3L", POS, -1): _cell(["T4"], ["T1"], 0.5),
        ("3L", NEG, -1): _cell(["T2"], ["T3"], 0.5),
        ("3L", NEG, 1): _cell(["T3"], ["T2"], 0.5),
    },
    "ANPC": {
        **{("2L", h, 1): _cell(["T1", "T2"], ["T3", "T4"], 0.5) for h in (POS, NEG)},
        **{("2L", h, -1): _cell(["T3", "T4"], ["T1", "T2"], 0.5) for h in (POS, NEG)},
        ("3L", POS, 1): _cell(["T2"], ["T3"], 0.5),
        ("3L", POS, -1): _cell(["T3"], ["T2"], 0.5),
        ("3L", NEG, 1): _cell(["T2"], ["T3"], 0.5),
        ("3L", NEG, -1): _cell(["T3"], ["T2"], 0.5),
    },
}


def family_of(kind: str) -> str:
    if kind not in TOPOLOGY_KINDS:
        raise ConfigError(f"unknown topology kind {kind!r}; expected one of {TOPOLOGY_KINDS}")
    return kind.split("_")[0]


def levels(mode: str):
    return (1, -1) if mode == "2L" else (1, 0, -1)


@dataclass(frozen=True)
class TopologyConfig:
    """One inverter design: topology, devices per role, DC link and cooling."""

    kind: str
    f_sw: float
    devices: dict = field(default_factory=dict)
    dc_link_capacitance: float = 500e-6
    mode_policy: str = "min_loss"
    r_th_case_coolant: float = 0.03
    coolant_temp: float = 65.0
    name: str = ""

    def __post_init__(self):
        fam = family_of(self.kind)
        if not self.f_sw > 0:
            raise ConfigError("f_sw must be positive")
        if self.mode_policy not in MODE_POLICIES:
            raise ConfigError(f"unknown mode policy {self.mode_policy!r}")
        missing = set(ROLES[fam]) - set(self.devices)
        extra = set(self.devices) - set(ROLES[fam])
        if missing or extra:
            raise ConfigError(f"{self.kind}: device roles must be exactly {ROLES[fam]} "
                              f"(missing {sorted(missing)}, unexpected {sorted(extra)})")
        for role, dev in self.devices.items():
            if not isinstance(dev, SwitchDevice):
                raise ConfigError(f"role {role}: expected a SwitchDevice")
        if self.dc_link_capacitance <= 0:
            raise ConfigError("dc_link_capacitance must be positive")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def family(self) -> str:
        return family_of(self.kind)

    @property
    def roles(self):
        return ROLES[self.family]

    @property
    def supports_3l(self) -> bool:
        return self.family != "B6"

    @property
    def full_load_roles(self):
        return FULL_LOAD_ROLES[self.family]

    @property
    def partial_load_roles(self):
        return PARTIAL_LOAD_ROLES[self.family]

    def thermal_path(self, role: str) -> ThermalPath:
        return ThermalPath(self.devices[role].r_th_jc, self.r_th_case_coolant, self.coolant_temp)

    def with_area_factors(self, factors: dict) -> "TopologyConfig":
        """Scale the devices of the given roles by the given area factors."""
        devices = dict(self.devices)
        for role, f in factors.items():
            devices[role] = scale_area(devices[role], f)
        return replace(self, devices=devices)

    def total_die_area(self) -> float:
        """Die area of all devices of the three phases, mm^2."""
        return 3.0 * sum(d.total_die_area for d in self.devices.values())

    def die_area(self, roles) -> float:
        return 3.0 * sum(self.devices[r].total_die_area for r in roles)
