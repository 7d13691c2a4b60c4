"""``gpclab`` command line: run, analyze, table1, sweep, plot."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .errors import ConfigError, GpcError
from .experiments import (
    SWEEP_HEADER,
    SWEEP_PARAMS,
    TABLE1_EXPECTED,
    analyze,
    format_report,
    simulate,
    summarize,
    sweep_point,
    table1,
)
from .scenario import Scenario, load_scenario
from .simkit import TraceFormatError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_MISMATCH = 3

def _err(msg: str) -> None:
    print(f"gpclab: {msg}", file=sys.stderr)

def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc = sc.with_seed(args.seed)
    if args.dist is not None:
        sc = sc.with_dist(args.dist)
    return sc

def _out(args, sc: Scenario, key: str, suffix: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = sc.outputs.get(key) or f"{sc.name}{suffix}"
    return out / name

def cmd_run(args) -> int:
    sc = _load(args)
    rec = simulate(sc)
    path = _out(args, sc, "csv", ".csv")
    rec.write_csv(path)
    s = summarize(rec)
    print(f"trace: {path}")
    print(f"final e: {s['final_e']:.10g}")
    print(f"max |e| over k={s['tail_start_k']}..{s['steps']}: {s['max_abs_e_tail']:.10g}")
    if "plot" in sc.outputs and not rec.diverged:
        from .plotting import plot_trace

        svg = _out(args, sc, "plot", ".svg")
        plot_trace(path, svg, title=sc.name)
        print(f"plot: {svg}")
    if rec.diverged:
        _err(f"diverged: |y| exceeded the limit at k={rec.first_divergent_k}")
        return EXIT_DIVERGED
    return EXIT_OK

def cmd_analyze(args) -> int:
    sc = _load(args)
    text = format_report(analyze(sc))
    path = _out(args, sc, "report", ".txt")
    path.write_text(text)
    sys.stdout.write(text)
    print(f"report: {path}")
    return EXIT_OK

def cmd_table1(args) -> int:
    cells = table1(perturb=args.perturb)
    lams = list(TABLE1_EXPECTED)
    print("lambda   " + "".join(f"{lam:>16g}" for lam in lams))
    for row, label in (("e", "e(k)"), ("E", "E(k)")):
        vals = [c.value for c in cells if c.row == row]
        print(f"{label:<9}" + "".join(f"{v:>16.10f}" for v in vals))
    bad = [c for c in cells if not c.worst <= args.tolerance]
    for c in bad:
        _err(f"mismatch: {c.row}(k) at lambda={c.lam:g} deviates from "
             f"{c.expected:.10f} by {c.worst:.3e} over k=70..400 (tolerance {args.tolerance:g})")
    return EXIT_MISMATCH if bad else EXIT_OK

def parse_range(spec: str, param: str) -> list[float]:
    """``start:stop:step`` (stop inclusive) or a comma list."""
    try:
        if ":" in spec:
            parts = [float(p) for p in spec.split(":")]
            if len(parts) == 2:
                parts.append(1.0)
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step == 0 or not all(map(math.isfinite, parts)):
                raise ValueError
            count = math.floor((stop - start) / step + 1e-9) + 1
            values = [round(start + i * step, 12) for i in range(max(count, 0))]
        else:
            values = [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad range {spec!r}; use start:stop:step or a comma list") from None
    if not values:
        raise ConfigError(f"range {spec!r} is empty")
    if param == "N" and any(v != int(v) or v < 1 for v in values):
        raise ConfigError("N values must be positive integers")
    return values

def _point(job):
    sc, param, value = job
    return sweep_point(sc, param, value)

def cmd_sweep(args) -> int:
    sc = _load(args)
    values = parse_range(args.range, args.param)
    jobs = [(sc, args.param, v) for v in values]
    workers = args.jobs or min(len(jobs), os.cpu_count() or 1)
    if workers <= 1 or len(jobs) == 1:
        rows = [_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    path = _out(args, sc, "sweep", f"_sweep_{args.param}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow((args.param,) + SWEEP_HEADER[1:])
        for r in rows:
            w.writerow(r.as_csv(args.param))
    for r in rows:
        print(",".join(r.as_csv(args.param)))
    print(f"sweep: {path}")
    return EXIT_OK

def cmd_plot(args) -> int:
    from .plotting import plot_trace

    columns = tuple(c.strip() for c in args.columns.split(",") if c.strip())
    if not columns:
        raise ConfigError("no columns selected")
    out = Path(args.svg) if args.svg else Path(args.out) / (Path(args.csv).stem + ".svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        plot_trace(args.csv, out, columns)
    except (TraceFormatError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    print(f"plot: {out}")
    return EXIT_OK

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--dist", choices=("normal", "uniform"), default=None,
                        help="override the noise distribution")

    p = argparse.ArgumentParser(prog="gpclab", description="Predictive control toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="simulate a scenario, write a CSV trace")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("analyze", parents=[common], help="write a closed-loop analysis report")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("table1", parents=[common], help="check the lambda offset table")
    s.add_argument("--tolerance", type=float, default=1e-9)
    s.add_argument("--perturb", action="store_true", help="perturb the model (negative control)")
    s.set_defaults(func=cmd_table1)

    s = sub.add_parser("sweep", parents=[common], help="grid over lambda or N")
    s.add_argument("scenario")
    s.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    s.add_argument("--range", required=True, help="start:stop:step (inclusive) or a,b,c")
    s.add_argument("--jobs", type=int, default=0, help="worker processes (default: cpu count)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("plot", parents=[common], help="render trace columns to SVG")
    s.add_argument("csv")
    s.add_argument("svg", nargs="?", default=None)
    s.add_argument("--columns", default="y_ref,y")
    s.set_defaults(func=cmd_plot)
    return p

def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GpcError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
