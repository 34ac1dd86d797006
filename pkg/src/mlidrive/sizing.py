"""Minimal chip-area sizing of full-load and partial-load switches.

Feasibility is monotone in area: more die area lowers both conduction loss
and thermal resistance while switching energy per event stays fixed, so the
junction temperature falls. That makes bisection over the area factor valid.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .drive_cycle import M_MAX_LINEAR, OperatingPoint
from .errors import ConfigError, InfeasibleError
from .inverter.losses import electrothermal_losses
from .inverter.ripple import dc_link_ripple
from .inverter.topology import TopologyConfig

AREA_BOUNDS = (0.1, 10.0)
REL_TOL = 0.005


@dataclass(frozen=True)
class SizingConstraints:
    t_j_max: float = 175.0
    ripple_frac: float = 0.05
    torque_frac: float = 0.80
    speed_frac: float = 2.0 / 3.0
    f_sw: float = 10e3
    u_dc: float = 800.0

    def __post_init__(self):
        if min(self.t_j_max, self.ripple_frac, self.torque_frac, self.speed_frac,
               self.f_sw, self.u_dc) <= 0:
            raise ConfigError("sizing constraints must be positive")
        if self.ripple_frac > 1 or self.torque_frac > 1 or self.speed_frac > 1:
            raise ConfigError("constraint fractions must lie in (0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "SizingConstraints":
        return cls(**d)


@dataclass
class SizingResult:
    topology: str
    per_role_area: dict
    total_area_delta: float
    added_area_delta: float
    binding_constraint: str | None
    design_op: OperatingPoint
    margins: dict = field(default_factory=dict)
    die_area_mm2: float = 0.0
    sized: TopologyConfig | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "per_role_area": {k: self.per_role_area[k] for k in sorted(self.per_role_area)},
            "die_area_mm2": self.die_area_mm2,
            "total_area_delta": self.total_area_delta,
            "added_area_delta": self.added_area_delta,
            "binding_constraint": self.binding_constraint,
            "design_op": asdict(self.design_op),
            "margins": {k: self.margins[k] for k in sorted(self.margins)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def max_junction_temp(topo: TopologyConfig, op: OperatingPoint, mode: str) -> float:
    """Hottest junction at the electro-thermal fixed point (inf on runaway)."""
    try:
        bd = electrothermal_losses(topo, op, mode)
    except InfeasibleError:
        return math.inf
    return max(bd.junction_temps.values())


def _bisect(feasible, lo, hi, rel_tol):
    """Smallest feasible factor in ``[lo, hi]`` on a geometric scale."""
    if feasible(lo):
        return lo, False
    if not feasible(hi):
        return None, True
    while hi / lo - 1.0 > rel_tol:
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi, True


def brute_force_min_area(feasible, lo=AREA_BOUNDS[0], hi=AREA_BOUNDS[1], step=REL_TOL):
    """First feasible factor on the geometric grid ``lo * (1 + step)^k``."""
    n = int(math.ceil(math.log(hi / lo) / math.log1p(step)))
    for k in range(n + 1):
        a = min(lo * (1.0 + step) ** k, hi)
        if feasible(a):
            return a
    return None


def full_load_feasible(topo: TopologyConfig, peak_op: OperatingPoint, constraints: SizingConstraints):
    roles = topo.full_load_roles

    def ok(area):
        t = topo.with_area_factors({r: area for r in roles})
        return max_junction_temp(t, peak_op, "2L") <= constraints.t_j_max

    return ok


def size_full_load(topo: TopologyConfig, peak_op: OperatingPoint, constraints: SizingConstraints,
                   bounds=AREA_BOUNDS, rel_tol=REL_TOL):
    """Area factor of the full-load roles keeping T_j within limits at peak power in 2L.

    Returns ``(per_role_area, binding_constraint)``.
    """
    area, binding = _bisect(full_load_feasible(topo, peak_op, constraints), *bounds, rel_tol)
    if area is None:
        raise InfeasibleError(
            f"{topo.name}: junction temperature above {constraints.t_j_max:g} C at peak power "
            f"even at {bounds[1]:g}x area", constraint="thermal")
    return {r: area for r in topo.full_load_roles}, ("thermal" if binding else None)


def design_operating_point(motor, constraints: SizingConstraints) -> OperatingPoint:
    """Partial-load design point: fraction of the voltage-limited torque at a fraction of n_max."""
    speed = constraints.speed_frac * motor.machine.n_max
    torque = constraints.torque_frac * motor.mtpv_torque(speed, constraints.u_dc)
    m, pf, i = motor.solve_electrical_state(speed, torque, constraints.u_dc)
    return OperatingPoint(speed, torque, m, pf, i, speed * motor.pole_pairs / (2 * math.pi),
                          constraints.u_dc)


def peak_operating_point(motor, constraints: SizingConstraints) -> OperatingPoint:
    """Rated point: maximum shaft power within the current and voltage limits."""
    mach = motor.machine
    v_max = M_MAX_LINEAR * constraints.u_dc / 2
    speeds = np.linspace(0.0, mach.n_max, 81)
    power = [s * mach.max_torque(s, v_max) for s in speeds]
    k = int(np.argmax(power))
    lo, hi = speeds[max(k - 1, 0)], speeds[min(k + 1, speeds.size - 1)]
    res = minimize_scalar(lambda s: -s * mach.max_torque(s, v_max), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-6})
    speed = float(res.x) if -res.fun >= power[k] else float(speeds[k])
    torque = mach.max_torque(speed, v_max) * (1 - 1e-9)
    m, pf, i = motor.solve_electrical_state(speed, torque, constraints.u_dc)
    return OperatingPoint(speed, torque, m, pf, i, speed * motor.pole_pairs / (2 * math.pi),
                          constraints.u_dc)


def three_level_checks(topo: TopologyConfig, op: OperatingPoint, constraints: SizingConstraints):
    """Constraint values in 3L mode: ``(max T_j, delta_u, m)``."""
    t_j = max_junction_temp(topo, op, "3L")
    du, _ = dc_link_ripple(topo, op, "3L")
    return t_j, du, op.modulation_index


def three_level_predicate(constraints: SizingConstraints):
    """Predicate ``(topo, op) -> bool`` for 3L operation: thermal limit plus ripple limit."""

    def ok(topo, op):
        if not topo.supports_3l or op.modulation_index > M_MAX_LINEAR + 1e-9:
            return False
        du, _ = dc_link_ripple(topo, op, "3L")
        if du > constraints.ripple_frac * op.dc_voltage:
            return False
        return max_junction_temp(topo, op, "3L") <= constraints.t_j_max

    return ok


def partial_load_feasible(topo: TopologyConfig, design_op: OperatingPoint,
                          constraints: SizingConstraints):
    roles = topo.partial_load_roles

    def ok(area):
        t = topo.with_area_factors({r: area for r in roles})
        return max_junction_temp(t, design_op, "3L") <= constraints.t_j_max

    return ok


def size_partial_load(topo: TopologyConfig, full_load_areas: dict, constraints: SizingConstraints,
                      motor, reference_area_mm2: float | None = None, bounds=AREA_BOUNDS,
                      rel_tol=REL_TOL) -> SizingResult:
    """Minimal area of the 3L-only roles at the partial-load design point.

    ``topo`` carries nominal devices; ``full_load_areas`` are applied first.
    ``reference_area_mm2`` is the die area of the 2L-B6 reference used for
    the reported deltas.
    """
    if not topo.supports_3l:
        raise ConfigError(f"{topo.kind} has no partial-load devices")
    base = topo.with_area_factors(full_load_areas)
    op = design_operating_point(motor, constraints)
    if op.modulation_index > M_MAX_LINEAR + 1e-9:
        raise InfeasibleError("design point exceeds the linear modulation range", constraint="capability")
    du, _ = dc_link_ripple(base, op, "3L")
    if du > constraints.ripple_frac * op.dc_voltage:
        raise InfeasibleError(
            f"{topo.name}: DC-link ripple {du:.1f} V exceeds {constraints.ripple_frac:.0%} of "
            f"{op.dc_voltage:g} V at the design point", constraint="ripple")
    area, binding = _bisect(partial_load_feasible(base, op, constraints), *bounds, rel_tol)
    if area is None:
        raise InfeasibleError(
            f"{topo.name}: junction temperature above {constraints.t_j_max:g} C in 3L at the design "
            f"point even at {bounds[1]:g}x partial-load area", constraint="thermal")
    sized = base.with_area_factors({r: area for r in topo.partial_load_roles})
    per_role = dict(full_load_areas)
    per_role.update({r: area for r in topo.partial_load_roles})
    t_j, du, m = three_level_checks(sized, op, constraints)
    total = sized.total_die_area()
    added = sized.die_area(topo.partial_load_roles)
    ref = reference_area_mm2 if reference_area_mm2 else float("nan")
    return SizingResult(
        topology=topo.name,
        per_role_area=per_role,
        total_area_delta=total / ref - 1.0,
        added_area_delta=added / ref,
        binding_constraint="thermal" if binding else None,
        design_op=op,
        margins={"t_j_max_C": t_j, "t_j_margin_K": constraints.t_j_max - t_j,
                 "ripple_V": du, "ripple_margin_V": constraints.ripple_frac * op.dc_voltage - du,
                 "modulation_index": m, "modulation_margin": M_MAX_LINEAR - m},
        die_area_mm2=total,
        sized=sized,
    )


def full_load_result(topo: TopologyConfig, peak_op: OperatingPoint, constraints: SizingConstraints,
                     reference_area_mm2: float | None = None, **kw) -> SizingResult:
    """Size a bridge whose every role is a full-load role (2L-B6) and report it."""
    areas, binding = size_full_load(topo, peak_op, constraints, **kw)
    sized = topo.with_area_factors(areas)
    t_j = max_junction_temp(sized, peak_op, "2L")
    total = sized.total_die_area()
    ref = reference_area_mm2 if reference_area_mm2 else total
    return SizingResult(
        topology=topo.name, per_role_area=areas, total_area_delta=total / ref - 1.0,
        added_area_delta=0.0, binding_constraint=binding, design_op=peak_op,
        margins={"t_j_max_C": t_j, "t_j_margin_K": constraints.t_j_max - t_j},
        die_area_mm2=total, sized=sized)


def area_grid(lo=AREA_BOUNDS[0], hi=AREA_BOUNDS[1], step=REL_TOL):
    n = int(math.ceil(math.log(hi / lo) / math.log1p(step)))
    return np.minimum(lo * (1.0 + step) ** np.arange(n + 1), hi)
