"""Outlier filtering, gated correlation matrix, cohort statistics and quartiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .records import NUMERIC_FIELDS, FleetRecord
from .stats import breusch_pagan, pearson, shapiro_wilk

COHORT_WINDOWS = ((2010, 2014), (2015, 2019), (2020, 2025))
LOW_N = 3


@dataclass
class CorrelationReport:
    variables: list
    r_matrix: np.ndarray
    n_used: np.ndarray
    filter_log: dict
    pair_log: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def num(v):
            return None if isinstance(v, float) and math.isnan(v) else v

        return {
            "variables": list(self.variables),
            "r_matrix": [[num(float(v)) for v in row] for row in self.r_matrix],
            "n_used": [[int(v) for v in row] for row in self.n_used],
            "filter_log": {k: {kk: num(vv) for kk, vv in v.items()} for k, v in self.filter_log.items()},
            "pair_log": {k: {kk: num(vv) if not isinstance(vv, bool) else vv for kk, vv in v.items()}
                         for k, v in self.pair_log.items()},
        }

    def long_rows(self):
        """``(var_x, var_y, r, n_used)`` rows for plotting."""
        out = []
        for i, a in enumerate(self.variables):
            for j, b in enumerate(self.variables):
                out.append((a, b, float(self.r_matrix[i, j]), int(self.n_used[i, j])))
        return out


@dataclass
class FilterResult:
    records: list
    report: CorrelationReport


def _check_vars(variables):
    bad = [v for v in variables if v not in NUMERIC_FIELDS]
    if bad:
        raise ValueError(f"not numeric fleet fields: {bad}")


def _values(records, var):
    idx = [k for k, r in enumerate(records) if r.get(var) is not None]
    return idx, np.array([records[k].get(var) for k in idx], dtype=float)


def zscore_outliers(values, z_cut=3.0, max_passes=None):
    """Indices removed by repeated |z| > z_cut passes (sample std), until none remain."""
    keep = np.arange(values.size)
    removed = []
    passes = 0
    while keep.size >= 3 and (max_passes is None or passes < max_passes):
        v = values[keep]
        sd = v.std(ddof=1)
        if sd == 0:
            break
        z = np.abs(v - v.mean()) / sd
        out = z > z_cut
        if not out.any():
            break
        removed.extend(int(k) for k in keep[out])
        keep = keep[~out]
        passes += 1
    return sorted(removed)


def remove_outliers(records, variables, z_cut=3.0, max_passes=None):
    """Blank out outlying cells per variable. Returns ``(records, {var: n_removed})``."""
    records = list(records)
    counts = {}
    for var in variables:
        idx, vals = _values(records, var)
        rm = zscore_outliers(vals, z_cut, max_passes)
        counts[var] = len(rm)
        for k in rm:
            records[idx[k]] = replace(records[idx[k]], **{var: None})
    return records, counts


def _pair(records, a, b):
    pts = [(r.get(a), r.get(b)) for r in records if r.get(a) is not None and r.get(b) is not None]
    if not pts:
        return np.empty(0), np.empty(0)
    arr = np.array(pts, dtype=float)
    return arr[:, 0], arr[:, 1]


def _safe(fn, *args):
    try:
        return fn(*args)[1]
    except ValueError:
        return math.nan


def correlation_matrix(records, variables):
    """Ungated pairwise complete-case Pearson matrix and pair counts."""
    k = len(variables)
    r = np.eye(k)
    n = np.zeros((k, k), dtype=int)
    for i, a in enumerate(variables):
        n[i, i] = len(_values(records, a)[0])
        for j in range(i + 1, k):
            x, y = _pair(records, a, variables[j])
            n[i, j] = n[j, i] = x.size
            r[i, j] = r[j, i] = pearson(x, y) if x.size >= 3 else math.nan
    return r, n


def filter_pipeline(records, variables, alpha=0.05, z_cut=3.0, max_passes=None) -> FilterResult:
    """Outlier removal, then Shapiro-Wilk and Breusch-Pagan gating per variable pair.

    A pair enters the matrix only if both variables look normal on the pair's
    complete cases and the residual variance of ``y ~ x`` is homogeneous (all
    p > alpha). The log also records whether each variable passes on its own,
    which is the drop-variable reading of the gate.
    """
    _check_vars(variables)
    recs, removed = remove_outliers(records, variables, z_cut, max_passes)
    flog = {}
    for var in variables:
        _, vals = _values(recs, var)
        p = _safe(shapiro_wilk, vals) if vals.size >= 3 else math.nan
        flog[var] = {"shapiro_p": p, "outliers_removed": removed[var], "n": int(vals.size),
                     "variable_gate_passed": bool(p > alpha)}
    k = len(variables)
    r = np.eye(k)
    n = np.zeros((k, k), dtype=int)
    plog = {}
    for i, a in enumerate(variables):
        n[i, i] = flog[a]["n"]
        for j in range(i + 1, k):
            b = variables[j]
            x, y = _pair(recs, a, b)
            n[i, j] = n[j, i] = x.size
            entry = {"n": int(x.size)}
            if x.size >= 4:
                entry["shapiro_p_x"] = _safe(shapiro_wilk, x)
                entry["shapiro_p_y"] = _safe(shapiro_wilk, y)
                entry["bp_p"] = _safe(breusch_pagan, x, y)
                entry["r_ungated"] = pearson(x, y)
            else:
                entry.update(shapiro_p_x=math.nan, shapiro_p_y=math.nan, bp_p=math.nan,
                             r_ungated=math.nan)
            passed = all(entry[key] > alpha for key in ("shapiro_p_x", "shapiro_p_y", "bp_p"))
            entry["passed"] = bool(passed)
            entry["variable_gate_passed"] = bool(flog[a]["variable_gate_passed"]
                                                 and flog[b]["variable_gate_passed"])
            plog[f"{a}|{b}"] = entry
            r[i, j] = r[j, i] = entry["r_ungated"] if passed else math.nan
    return FilterResult(recs, CorrelationReport(list(variables), r, n, flog, plog))


@dataclass
class CohortStats:
    window: tuple
    stats: dict  # variable -> (mean, std, count)
    low_n: dict

    def to_dict(self) -> dict:
        return {"window": list(self.window),
                "stats": {v: {"mean": m, "std": s, "count": c} for v, (m, s, c) in self.stats.items()},
                "low_n": dict(self.low_n)}


def cohorts(records, windows=COHORT_WINDOWS, variables=("range_km",)):
    """Per-window mean, sample std and count per variable (missing cells skipped)."""
    _check_vars(variables)
    out = []
    for lo, hi in windows:
        sub = [r for r in records if lo <= r.entry_year <= hi]
        stats, low = {}, {}
        for var in variables:
            vals = np.array([r.get(var) for r in sub if r.get(var) is not None], dtype=float)
            if vals.size == 0:
                continue
            sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            stats[var] = (float(vals.mean()), sd, int(vals.size))
            low[var] = bool(vals.size < LOW_N)
        out.append(CohortStats((lo, hi), stats, low))
    return out


def quartiles(records, variable, year=None):
    """``(q1, median, q3, whisker_max)`` with linear-interpolation quantiles.

    ``whisker_max`` is the largest value not above ``q3 + 1.5 * IQR``.
    """
    _check_vars([variable])
    vals = np.array([r.get(variable) for r in records
                     if r.get(variable) is not None and (year is None or r.entry_year == year)],
                    dtype=float)
    if vals.size < 4:
        raise ValueError(f"quartiles need at least 4 values, got {vals.size}")
    q1, med, q3 = (float(v) for v in np.percentile(vals, [25, 50, 75], method="linear"))
    fence = q3 + 1.5 * (q3 - q1)
    return q1, med, q3, float(vals[vals <= fence].max())


__all__ = ["CohortStats", "CorrelationReport", "FilterResult", "FleetRecord", "cohorts",
           "correlation_matrix", "filter_pipeline", "quartiles", "remove_outliers",
           "zscore_outliers"]
