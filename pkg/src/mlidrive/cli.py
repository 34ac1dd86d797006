"""Command-line frontend: ``mlidrive {simulate,size,compare,fleet}``.

Exit codes: 0 success, 1 other failure, 2 config error, 3 infeasibility,
4 data error. Every report carries a provenance record with the toolkit
version and the SHA-256 of the effective configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .config import RunConfig, config_digest, load_config
from .economics import COMPONENTS, comparison_rows, simulate_topology
from .errors import ConfigError, DataError, InfeasibleError, MlidriveError
from .fleet import cohorts, filter_pipeline, ingest, quartiles
from .fleet.pipeline import COHORT_WINDOWS
from .fleet.records import NUMERIC_FIELDS
from .reference import nominal_topology, size_topologies
from .sizing import three_level_predicate

log = logging.getLogger("mlidrive")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_DATA = 0, 1, 2, 3, 4
FLEET_VARIABLES = ("range_km", "consumption_kwh_per100", "battery_kwh", "mass_kg",
                   "accel_0_100_s", "cost_eur", "motor_power_kw")
FLEET_REPORTS = ("corr", "cohorts", "quartiles")


# ---------------------------------------------------------------- output helpers

def provenance(cfg: RunConfig, command: str) -> dict:
    raw = {k: v for k, v in cfg.raw.items() if k != "output_dir"}
    return {"tool": "mlidrive", "version": __version__, "command": command,
            "config_sha256": config_digest(raw), "seed": cfg.seed}


def _clean(obj):
    """JSON-safe copy: NaN and inf become null, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path: Path, payload: dict, prov: dict):
    text = json.dumps(_clean({"provenance": prov, **payload}), indent=2, sort_keys=True,
                      allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return v


def write_csv(path: Path, header, rows, prov: dict):
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={prov[k]}" for k in sorted(prov)) + "\n")
    wr = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    wr.writerow(header)
    for row in rows:
        wr.writerow([_cell(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def _outdir(cfg: RunConfig) -> Path:
    out = cfg.output_dir if cfg.output_dir.is_absolute() else Path.cwd() / cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- pipeline steps

def _reference_b6(cfg: RunConfig):
    own = next((s.nominal for s in cfg.topologies if s.nominal.kind == "B6_SiC"), None)
    return own or nominal_topology("B6_SiC", cfg.library, cfg.constraints.f_sw)


def sizing_results(cfg: RunConfig, specs=None):
    specs = cfg.topologies if specs is None else specs
    return size_topologies([s.nominal for s in specs], cfg.motor, cfg.constraints,
                           reference=_reference_b6(cfg))


def resolved_topologies(cfg: RunConfig):
    """Topologies ready for simulation: auto-sized or with their explicit area factors."""
    auto = [s for s in cfg.topologies if s.area == "auto"]
    sized = sizing_results(cfg, auto) if auto else {}
    return [sized[s.name].sized if s.area == "auto" else s.explicit() for s in cfg.topologies]


def _simulate_all(cfg: RunConfig):
    topos = resolved_topologies(cfg)
    pred = three_level_predicate(cfg.constraints)
    with ThreadPoolExecutor() as ex:
        runs = list(ex.map(lambda t: simulate_topology(t, cfg.vehicle, cfg.cycle, cfg.motor, pred,
                                                        cfg.constraints.u_dc), topos))
    return topos, runs


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg: RunConfig) -> list[Path]:
    prov = provenance(cfg, "simulate")
    out = _outdir(cfg)
    topos, runs = _simulate_all(cfg)
    written = []
    for topo, (res, trace) in zip(topos, runs):
        stem = _slug(topo.name)
        p = out / f"{stem}_result.json"
        write_json(p, {"result": res.to_dict(), "shares": res.shares(), "cycle": cfg.cycle.name,
                       "area_factors": {r: topo.devices[r].chip_area for r in sorted(topo.devices)}},
                   prov)
        rows = [(float(t), float(dt), m, *(float(trace.components[c][k]) for c in COMPONENTS))
                for k, (t, dt, m) in enumerate(zip(trace.time, trace.dt, trace.modes))]
        q = out / f"{stem}_losses.csv"
        write_csv(q, ["t_s", "dt_s", "mode", *(f"p_{c}_W" for c in COMPONENTS)], rows, prov)
        written += [p, q]
    return written


def cmd_size(cfg: RunConfig) -> list[Path]:
    prov = provenance(cfg, "size")
    res = sizing_results(cfg)
    p = _outdir(cfg) / "sizing.json"
    write_json(p, {"constraints": vars(cfg.constraints),
                   "results": [res[s.name].to_dict() for s in cfg.topologies]}, prov)
    return [p]


def cmd_compare(cfg: RunConfig) -> list[Path]:
    prov = provenance(cfg, "compare")
    names = [s.name for s in cfg.topologies]
    if cfg.baseline not in names:
        raise ConfigError(f"baseline {cfg.baseline!r} not among topologies {names}")
    _, runs = _simulate_all(cfg)
    results = {n: r for n, (r, _) in zip(names, runs)}
    rows = comparison_rows(results, cfg.baseline, cfg.ranges, cfg.battery_price)
    order = {n: k for k, n in enumerate(names)}
    rows.sort(key=lambda r: (order[r["topology"]], r["range_km"]))
    out = _outdir(cfg)
    keys = ["topology", "range_km", "delta_e_per100_kwh", "delta_e_kwh", "delta_cost_eur"]
    p = out / "comparison.csv"
    write_csv(p, keys, [[r[k] for k in keys] for r in rows], prov)
    q = out / "comparison.json"
    write_json(q, {"baseline": cfg.baseline, "battery_price_eur_per_kwh": cfg.battery_price,
                   "results": {n: results[n].to_dict() for n in names}, "rows": rows}, prov)
    return [p, q]


def cmd_fleet(cfg: RunConfig, dataset=None, reports=FLEET_REPORTS, year=None) -> list[Path]:
    prov = provenance(cfg, "fleet")
    fc = cfg.fleet
    path = dataset or fc.get("dataset")
    if not path:
        raise ConfigError("fleet needs a dataset (--dataset or fleet.dataset in the config)")
    path = Path(path)
    if dataset is None and not path.is_absolute():
        path = cfg.base_dir / path
    variables = list(fc.get("variables", FLEET_VARIABLES))
    cohort_vars = list(fc.get("cohort_variables", variables))
    qvar = fc.get("quartile_variable", "motor_power_kw")
    bad = [v for v in set(variables) | set(cohort_vars) | {qvar} if v not in NUMERIC_FIELDS]
    if bad:
        raise ConfigError(f"fleet: unknown numeric variables {sorted(bad)}")
    rejected = []
    records = ingest(path, rejected)
    out = _outdir(cfg)
    written = []
    if "corr" in reports:
        fr = filter_pipeline(records, variables, alpha=fc.get("alpha", 0.05),
                             z_cut=fc.get("z_cut", 3.0))
        rep = fr.report
        if all(not e["passed"] for e in rep.pair_log.values()):
            print("warning: no variable pair survived the filter chain", file=sys.stderr)
        p = out / "fleet_corr.json"
        write_json(p, {"dataset": path.name, "records": len(records),
                       "rejected": [{"row": r.row, "reason": r.reason} for r in rejected],
                       "report": rep.to_dict()}, prov)
        q = out / "fleet_corr_long.csv"
        write_csv(q, ["var_x", "var_y", "r", "n_used"], rep.long_rows(), prov)
        written += [p, q]
    if "cohorts" in reports:
        cs = cohorts(records, COHORT_WINDOWS, cohort_vars)
        rows = [(c.window[0], c.window[1], v, *c.stats[v], c.low_n[v])
                for c in cs for v in cohort_vars if v in c.stats]
        p = out / "fleet_cohorts.csv"
        write_csv(p, ["start_year", "end_year", "variable", "mean", "std", "count", "low_n"], rows,
                  prov)
        written.append(p)
    if "quartiles" in reports:
        years = [year] if year is not None else sorted({r.entry_year for r in records})
        rows = []
        for y in years:
            try:
                rows.append((y, qvar, *quartiles(records, qvar, y)))
            except ValueError:
                if year is not None:
                    raise DataError(f"fewer than 4 {qvar} values in {y}") from None
        p = out / "fleet_quartiles.csv"
        write_csv(p, ["year", "variable", "q1", "median", "q3", "whisker_max"], rows, prov)
        written.append(p)
    return written


# ---------------------------------------------------------------- argument parsing

def _price(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("battery price must be positive")
    return v


def _ranges(s):
    try:
        vals = [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected KM[,KM...], got {s!r}") from None
    if not vals or min(vals) <= 0:
        raise argparse.ArgumentTypeError("ranges must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config (JSON, or YAML with pyyaml); "
                                         "default: bundled reference study")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--battery-price", type=_price, help="EUR per kWh (overrides battery_price)")
    common.add_argument("--ranges", type=_ranges, help="driving ranges KM[,KM...] for cost tables")
    common.add_argument("--seed", type=int, help="seed recorded in provenance")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="mlidrive", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mlidrive {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="cycle losses per topology")
    sub.add_parser("size", parents=[common], help="minimal die areas per topology")
    sub.add_parser("compare", parents=[common], help="battery-cost comparison table")
    fl = sub.add_parser("fleet", parents=[common], help="fleet statistics reports")
    fl.add_argument("--dataset", help="fleet CSV (overrides fleet.dataset)")
    fl.add_argument("--report", default=",".join(FLEET_REPORTS),
                    help="comma-separated subset of corr,cohorts,quartiles")
    fl.add_argument("--year", type=int, help="single year for the quartile summary")
    return ap


COMMANDS = {"simulate": cmd_simulate, "size": cmd_size, "compare": cmd_compare}


def run(args) -> list[Path]:
    overrides = {"output_dir": args.out, "battery_price": args.battery_price,
                 "ranges": args.ranges, "seed": args.seed}
    cfg = load_config(args.config, overrides, need_topologies=args.command != "fleet")
    if args.command == "fleet":
        reports = tuple(r.strip() for r in args.report.split(",") if r.strip())
        bad = set(reports) - set(FLEET_REPORTS)
        if bad:
            raise ConfigError(f"unknown fleet reports {sorted(bad)}")
        return cmd_fleet(cfg, args.dataset, reports, args.year)
    return COMMANDS[args.command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        written = run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InfeasibleError as exc:
        print(f"infeasible ({exc.constraint or 'unspecified'}): {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except MlidriveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for p in written:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
