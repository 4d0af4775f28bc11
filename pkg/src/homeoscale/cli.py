"""Command-line surface: single runs, parameter sweeps, leakage calibration.

Exit codes: 0 success, 2 validation/configuration error, 3 runtime abort.
Output files are written atomically (write-then-rename), so a failed run
leaves no partial trace behind.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys

from . import config as config_mod
from . import engine as engine_mod
from . import experiments as experiments_mod
from .device import LeakageCellParams, fit_leakage_calibration, llc_slope
from .errors import SimulationError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic_trace(trace: engine_mod.Trace, path: str):
    tmp = path + ".tmp"
    trace.to_csv(tmp)
    os.replace(tmp, path)


def _base_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HOMEOSCALE_SEED")
    return int(env) if env else 0


def _execute(config_text: str, overrides, seed: int, out_dir: str) -> dict:
    """Parse, run, and write one run's outputs; returns the metrics dict."""
    cfg = config_mod.parse_config_text(config_text)
    for key, value in overrides:
        config_mod.set_value(cfg, key, value)
    exp = config_mod.build_experiment(cfg)
    tol = config_mod.build_tolerances(cfg, exp)
    trace = engine_mod.run(exp, tol=tol, seed=seed)
    metrics = experiments_mod.extract_metrics(trace, exp)
    if exp.sw_pin_schedule:
        s_up, s_down = experiments_mod.measure_ramp_slopes(trace, exp)
        if s_up is not None:
            metrics.extras["slope_up_measured"] = s_up
        if s_down is not None:
            metrics.extras["slope_down_measured"] = s_down

    os.makedirs(out_dir, exist_ok=True)
    _atomic_trace(trace, os.path.join(out_dir, "trace.csv"))
    md = metrics.as_dict()
    _atomic_write(os.path.join(out_dir, "metrics.txt"),
                  "".join(f"{k}={v}\n" for k, v in md.items()))
    meta_lines = "".join(f"{k}={trace.meta[k]}\n" for k in sorted(trace.meta))
    _atomic_write(os.path.join(out_dir, "meta.txt"), meta_lines)
    return md


def cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        _execute(text, [], _base_seed(args), args.out)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SimulationError, OSError) as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _sweep_worker(job):
    text, key, value, seed, out_dir = job
    md = _execute(text, [(key, value)], seed, out_dir)
    return value, out_dir, md


def cmd_sweep(args) -> int:
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
        if not values:
            raise ValidationError("empty sweep value list")
        # fail fast on a bad key before dispatching workers
        probe = config_mod.parse_config_text(text)
        config_mod.set_value(probe, args.param, values[0])
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    base_seed = _base_seed(args)
    jobs = []
    for idx, value in enumerate(values):
        sub = os.path.join(args.out, f"{idx:03d}_{value:g}")
        run_seed = engine_mod.derive_seed(base_seed, idx)
        jobs.append((text, args.param, value, run_seed, sub))

    try:
        if args.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_sweep_worker, jobs))
        else:
            results = [_sweep_worker(j) for j in jobs]
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SimulationError, OSError) as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    keys: list = []
    for _, _, md in results:
        for k in md:
            if k not in keys:
                keys.append(k)
    lines = [",".join([args.param, "run_dir"] + keys)]
    for value, out_dir, md in results:
        lines.append(",".join([f"{value:.12g}", os.path.basename(out_dir)]
                              + [str(md.get(k, "")) for k in keys]))
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "summary.csv"), "\n".join(lines) + "\n")
    return EXIT_OK


def _read_anchor_file(path: str) -> list:
    with open(path) as fh:
        text = fh.read()
    if "[" in text and "]" in text:
        cfg = config_mod.parse_config_text(text)
        anchors = cfg.get("leakage", {}).get("anchors")
        if anchors is None:
            raise ValidationError("no leakage.anchors section in anchor file")
        return anchors
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    return config_mod.parse_anchor_triples(";".join(ln for ln in lines if ln))


def cmd_calibrate(args) -> int:
    try:
        anchors = _read_anchor_file(args.anchors)
        calib = fit_leakage_calibration(anchors)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    cell = LeakageCellParams()
    for v_g, s_up, s_down in calib.anchors:
        r_up = llc_slope(v_g, "up", calib, cell) - s_up
        r_down = llc_slope(v_g, "down", calib, cell) - s_down
        print(f"anchor v_g={v_g:g} V: residual up={r_up:.3g} down={r_down:.3g} V/s")
    body = "; ".join(f"{v:.17g} {su:.17g} {sd:.17g}" for v, su, sd in calib.anchors)
    _atomic_write(args.out, f"[leakage]\nanchors = {body}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homeoscale",
        description="Behavioral simulator of a synaptic-scaling homeostatic "
                    "gain-control loop.",
        epilog=config_mod.render_schema_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured experiment")
    p_run.add_argument("config", help="INI config file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="base seed (default: $HOMEOSCALE_SEED or 0)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run one config across parameter values")
    p_sweep.add_argument("config", help="INI config file")
    p_sweep.add_argument("--param", required=True, help="dotted key, e.g. agc.v_g")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    p_sweep.add_argument("--seed", type=int, default=None,
                         help="base seed (default: $HOMEOSCALE_SEED or 0)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cal = sub.add_parser("calibrate", help="fit a leakage calibration from anchors")
    p_cal.add_argument("anchors", help="anchor file: 'v_g slope_up slope_down' lines "
                                       "or an INI with leakage.anchors")
    p_cal.add_argument("--out", required=True, help="calibration INI to write")
    p_cal.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
