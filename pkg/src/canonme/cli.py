"""Command line interface.

    canonme canon    --config model.json [--time T]
    canonme series   --config model.json [--format csv|json] [--output PATH]
    canonme measures --config model.json [--output PATH]

Exit codes: 0 success, 2 invalid input, 3 numerical failure (singular
grid points or a failed solver; reports are still written).
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, policy
from .canonical import canonicalize
from .errors import NumericalError, SingularMapError, ValidationError
from .measures import canonical_series, measure_report
from .models import Grid, ModelSpec, build_model, matrix_to_json

log = logging.getLogger("canonme")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def fmt(x) -> str:
    """Shortest round-trip decimal."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _num(x):
    x = float(x)
    return None if not math.isfinite(x) else x


def _complex_list(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).ravel()]


def series_csv(series, report) -> str:
    K = series.n_branches
    buf = io.StringIO(newline="")
    header = ["t"] + [f"gamma_{k + 1}" for k in range(K)] + ["f_sum", "F_sum_running", "nm_index", "singular"]
    buf.write(",".join(header) + "\n")
    for i, t in enumerate(series.grid):
        row = [fmt(t)] + [fmt(g) for g in series.rates[i]]
        row += [fmt(report.f_sum_series[i]), fmt(report.F_sum_running[i]),
                str(int(report.nm_index_series[i])), "1" if series.singular_flags[i] else "0"]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def series_json(series, report) -> dict:
    return {
        "t": [float(t) for t in series.grid],
        "rates": [[_num(g) for g in row] for row in series.rates],
        "nm_index": [int(n) for n in report.nm_index_series],
        "singular": [bool(f) for f in series.singular_flags],
    }


def _selected_indices(series):
    ok = np.flatnonzero(~series.singular_flags)
    if not len(ok):
        return []
    return sorted({int(ok[0]), int(ok[len(ok) // 2]), int(ok[-1])})


def summary_json(spec, series, report) -> dict:
    eq = report.equivalents
    return {
        "kind": spec.kind,
        "dim": series.dim,
        "grid": {"t0": float(series.grid[0]), "t1": float(series.grid[-1]), "steps": len(series.grid)},
        "F_values": [float(x) for x in report.F_values],
        "F_sum": float(report.F_sum),
        "nm_index_max": int(report.nm_index_series.max()) if len(report.nm_index_series) else 0,
        "excluded_intervals": [[a, b] for a, b in report.excluded_intervals],
        "singular_times": [float(series.grid[i]) for i in np.flatnonzero(series.singular_flags)],
        "channels": [
            {"t": float(series.grid[i]),
             "rates": [float(g) for g in series.rates[i]],
             "coefficients": [_complex_list(v) for v in series.branch_vectors[i]]}
            for i in _selected_indices(series)
        ],
        "equivalents": None if eq is None else {
            "branch": eq["branch"] + 1,
            "entanglement": eq["entanglement"],
        },
    }


def canon_json(cf) -> dict:
    return {
        "time": float(cf.time),
        "dim": cf.dim,
        "H": matrix_to_json(cf.H),
        "channels": [
            {"rate": float(g), "operator": matrix_to_json(L), "coefficients": _complex_list(u)}
            for g, L, u in zip(cf.rates, cf.operators, cf.coeffs)
        ],
    }


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _grid(spec, args):
    g = spec.grid
    if g is None and args.t1 is None:
        raise ValidationError("no grid given in config or on the command line")
    t0 = args.t0 if args.t0 is not None else (g.t0 if g else 0.0)
    t1 = args.t1 if args.t1 is not None else g.t1
    steps = args.steps if args.steps is not None else (g.steps if g else 1001)
    return Grid(t0, t1, steps).points()


def _option(args, spec, name):
    val = getattr(args, name)
    if val is None:
        val = spec.options.get(name)
    return val


def cmd_canon(args, spec) -> int:
    cond_max = _option(args, spec, "cond_max")
    t = args.time
    if t is None:
        t = spec.options.get("canon_time")
    model = build_model(spec, _grid(spec, args) if spec.kind in (
        "memory_kernel_dephasing", "jc_amplitude_damping") else None, cond_max)
    if t is None:
        t = float(model.family.grid[0]) if model.family is not None else (spec.grid.t0 if spec.grid else 0.0)
    try:
        mat = model.provider(float(t))
    except SingularMapError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    cf = canonicalize(mat, time=float(t))
    _write(_dump(canon_json(cf)), args.output)
    return EXIT_OK


def _run_series(args, spec):
    cond_max = _option(args, spec, "cond_max")
    grid = None if spec.kind == "map_family_file" else _grid(spec, args)
    model = build_model(spec, grid, cond_max)
    if model.family is not None:
        grid = model.family.grid
    series = canonical_series(model.provider, grid)
    report = measure_report(series, _option(args, spec, "tol_neg"))
    return series, report


def _status(series) -> int:
    if series.singular_flags.any():
        log.warning("%d singular grid point(s) flagged", int(series.singular_flags.sum()))
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_series(args, spec) -> int:
    series, report = _run_series(args, spec)
    if args.format == "json":
        _write(_dump(series_json(series, report)), args.output)
    else:
        _write(series_csv(series, report), args.output)
    return _status(series)


def cmd_measures(args, spec) -> int:
    series, report = _run_series(args, spec)
    csv_text = series_csv(series, report)
    summary = _dump(summary_json(spec, series, report))
    if args.output is None:
        _write(summary if args.format == "json" else csv_text, None)
    else:
        out = Path(args.output)
        _write(csv_text, str(out.with_suffix(".csv")))
        _write(summary, str(out.with_suffix(".json")))
    return _status(series)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="canonme",
                                description="Canonical form of time-local master equations and non-Markovianity measures.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in [("canon", "canonical form at a single time (JSON)"),
                           ("series", "tracked canonical rates over the grid"),
                           ("measures", "rates plus non-Markovianity measures (CSV + JSON summary)")]:
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="JSON model/config file")
        sp.add_argument("--t0", type=float)
        sp.add_argument("--t1", type=float)
        sp.add_argument("--steps", type=int, help="number of grid points")
        sp.add_argument("--tol-neg", dest="tol_neg", type=float)
        sp.add_argument("--cond-max", dest="cond_max", type=float)
        sp.add_argument("--output", help="output file (stdout if omitted)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "canon":
            sp.add_argument("--time", type=float, help="evaluation time (default: first grid point)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    handlers = {"canon": cmd_canon, "series": cmd_series, "measures": cmd_measures}
    try:
        spec = ModelSpec.load(args.config)
        if args.tol_neg is not None and args.tol_neg <= 0:
            raise ValidationError("--tol-neg must be positive")
        with policy.using():
            return handlers[args.command](args, spec)
    except ValidationError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
