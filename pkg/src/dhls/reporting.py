"""CSV / JSON serialization of solver reports, sweeps and critical tables."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .analysis import CriticalTable, SweepRecord, SweepTable, concentration_check, extrapolate_C
from .lattice import Mode

SWEEP_HEADER = ["N", "C_N", "max_f", "argmax_f", "max_g", "argmax_g", "iterations",
                "el_residual", "wall_ms"]


def fmt(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def _fmt_index(idx) -> str:
    return ";".join(str(int(i)) for i in idx)


def _parse_index(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(";"))


def sweep_csv(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for rec in records:
        w.writerow([rec.N, fmt(rec.C_N), fmt(rec.max_f), _fmt_index(rec.argmax_f), fmt(rec.max_g),
                    _fmt_index(rec.argmax_g), rec.iterations, fmt(rec.el_residual),
                    fmt(rec.wall_time * 1e3)])
    return buf.getvalue()


def read_sweep_csv(text: str) -> list[SweepRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != SWEEP_HEADER:
        raise ValueError("not a sweep CSV (header mismatch)")
    return [SweepRecord(int(r[0]), float(r[1]), float(r[2]), _parse_index(r[3]), float(r[4]),
                        _parse_index(r[5]), int(r[6]), float(r[7]), float(r[8]) / 1e3)
            for r in rows[1:]]


def _record_dict(rec: SweepRecord) -> dict:
    return {"N": rec.N, "C_N": rec.C_N, "max_f": rec.max_f, "argmax_f": list(rec.argmax_f),
            "max_g": rec.max_g, "argmax_g": list(rec.argmax_g), "iterations": rec.iterations,
            "el_residual": rec.el_residual, "wall_ms": rec.wall_time * 1e3,
            "converged": rec.converged}


def _record_from(d: dict) -> SweepRecord:
    return SweepRecord(d["N"], d["C_N"], d["max_f"], tuple(d["argmax_f"]), d["max_g"],
                       tuple(d["argmax_g"]), d["iterations"], d["el_residual"],
                       d["wall_ms"] / 1e3, d.get("converged", True))


def sweep_diagnostics(table: SweepTable) -> dict:
    """Monotonicity, concentration and extrapolation summaries, as far as they apply."""
    diag: dict = {
        "monotonicity_violations": table.monotonicity_violations,
        "concentration_floor_f": table.concentration_floor_f,
        "concentration_floor_g": table.concentration_floor_g,
        "recentered_distances_f": table.distances_f,
        "recentered_distances_g": table.distances_g,
        "convergence_window": 3,
        "convergence_rel_tol": 1e-3,
    }
    if len(table.records) >= 3 and table.params.mode is Mode.SUPERCRITICAL:
        conc = concentration_check(table)
        diag["concentration_pass"] = conc.passed
        diag["concentration_slope_f"] = conc.slope_f
        diag["concentration_slope_g"] = conc.slope_g
    if len(table.records) >= 3:
        try:
            diag["extrapolated_C"] = extrapolate_C(table)
        except ValueError as exc:
            diag["extrapolation_error"] = str(exc)
    return diag


def report_json(params: dict, config: dict, records: list[SweepRecord], diagnostics: dict,
                **extra) -> str:
    # json writes floats with repr(), which round-trips exactly
    obj = {"params": params, "config": config, "records": [_record_dict(r) for r in records],
           "diagnostics": _clean(diagnostics)}
    obj.update(extra)
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def read_report_json(text: str) -> tuple[dict, list[SweepRecord]]:
    obj = json.loads(text)
    for key in ("params", "config", "records", "diagnostics"):
        if key not in obj:
            raise ValueError(f"report is missing the {key!r} key")
    return obj, [_record_from(d) for d in obj["records"]]


def critical_csv(table: CriticalTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if table.dim == 1:
        w.writerow(["N", "lambda_N", "lambda_N_minus_2lnN"])
        extra = table.offsets
    else:
        w.writerow(["N", "lambda_N", "lambda_N_over_lnN"])
        extra = table.ratios
    for N, lam, e in zip(table.Ns, table.lambdas, extra):
        w.writerow([N, fmt(lam), fmt(e) if math.isfinite(e) else "nan"])
    return buf.getvalue()


def read_critical_csv(text: str, dim: int) -> CriticalTable:
    rows = list(csv.reader(io.StringIO(text)))
    expected = "lambda_N_minus_2lnN" if dim == 1 else "lambda_N_over_lnN"
    if rows[0] != ["N", "lambda_N", expected]:
        raise ValueError("not a critical-growth CSV for this dimension")
    return CriticalTable(dim, [int(r[0]) for r in rows[1:]], [float(r[1]) for r in rows[1:]])


def plot_script(data_csv: str | Path, title: str) -> str:
    """gnuplot commands plotting C_N and max_f against N from a sweep CSV."""
    return "\n".join([
        f"# {title}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 'N'",
        "set multiplot layout 2,1",
        "set ylabel 'C_N'",
        f"plot '{data_csv}' using 1:2 with linespoints title 'C_N'",
        "set ylabel 'max f'",
        f"plot '{data_csv}' using 1:3 with linespoints title 'max_f'",
        "unset multiplot",
        "",
    ])
