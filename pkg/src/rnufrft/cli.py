"""Command-line front end: simulate, integrate, clean, calibrate, bench, oracle-check."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .echo import load_echo, save_echo, simulate_scenario
from .integrate import (
    METHODS,
    build_angle_grid,
    build_search_grid,
    clean_iterate,
    run_method,
    write_results_csv,
    write_surface_csv,
)
from .scene import Scenario, SeedSpec, load_scenario, make_schedule, scenario_to_dict, write_default_config

DESK_PULSES = 256
DEFAULT_SNR_GRID = tuple(range(-44, -25, 2))


@dataclass
class RunManifest:
    command: str
    config: str | None
    parameters: dict
    seed: int
    out_dir: str
    version: str = __version__
    git: str = "unknown"
    timings: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add_output(self, path):
        path = Path(path)
        self.outputs[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def write(self):
        path = Path(self.out_dir) / f"manifest_{self.command}.json"
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _git_stamp():
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


class Stage:
    def __init__(self, manifest, name):
        self.m, self.name = manifest, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.m.timings[self.name] = time.perf_counter() - self.t0


# --- argument handling ---------------------------------------------------------------


def _scenario(args, header=None) -> Scenario:
    sc = load_scenario(args.config) if args.config else Scenario()
    hdr = (header or {}).get("overrides", {})
    seed = args.seed if args.seed is not None else hdr.get("seed")
    pulses = args.pulses if args.pulses is not None else hdr.get("pulses")
    jitter = args.jitter if args.jitter is not None else hdr.get("jitter")
    if seed is not None:
        sc = replace(sc, seed=SeedSpec(int(seed)))
    if pulses is not None:
        sc = sc.with_pulses(int(pulses))
    if jitter is not None:
        sc = replace(sc, jitter=float(jitter))
    if getattr(args, "no_noise", False) or hdr.get("no_noise"):
        sc = replace(sc, noise=False)
    return sc


def _bench_scenario(args) -> Scenario:
    from .bench import desk_scenario

    sc = _scenario(args)
    if args.pulses is None:
        sc = desk_scenario(sc, sc.radar.num_pulses if args.full_scale else DESK_PULSES)
    else:
        sc = desk_scenario(sc, sc.radar.num_pulses)
    return sc


def _manifest(args, sc) -> RunManifest:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return RunManifest(args.command, args.config, scenario_to_dict(sc), sc.seed.master_seed, str(out), git=_git_stamp())


def _methods(text):
    if text.lower() == "all":
        return list(METHODS)
    names = [m.strip().upper() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method {bad[0].lower()!r}; choose from mtd, rft, rfrft, rnufrft, all")
    return names


def _snr_grid(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from None


def _load_inputs(args):
    """Echo from --echo (with its recorded overrides) or simulated in memory."""
    if args.echo:
        echo, header = load_echo(args.echo)
        sc = _scenario(args, header)
        sched = make_schedule(sc.radar, sc.jitter, sc.seed)
        if echo.num_pulses != sc.radar.num_pulses:
            raise SystemExit(f"error: echo has {echo.num_pulses} rows but the scenario has {sc.radar.num_pulses} pulses")
        if header.get("schedule_sha256") and header["schedule_sha256"] != sched.digest():
            raise SystemExit("error: echo was simulated with a different pulse schedule (check --seed/--jitter/--pulses)")
        return sc, echo, sched
    sc = _scenario(args)
    echo, sched = simulate_scenario(sc)
    return sc, echo, sched


# --- commands ---------------------------------------------------------------------------


def cmd_simulate(args):
    if args.write_config:
        print(f"wrote {write_default_config(args.write_config)}")
        return 0
    sc = _scenario(args)
    man = _manifest(args, sc)
    with Stage(man, "simulate"):
        echo, sched = simulate_scenario(sc, raw=args.raw_path)
    overrides = {"seed": sc.seed.master_seed, "pulses": sc.radar.num_pulses, "jitter": sc.jitter, "no_noise": not sc.noise}
    out = Path(args.out)
    data_path, hdr_path = save_echo(
        echo, out / "echo.bin", {"overrides": overrides, "synthesis": "raw" if args.raw_path else "analytic"}
    )
    sched_path = out / "schedule.csv"
    with open(sched_path, "w") as fh:
        fh.write("pulse,slow_time_s,jitter\n")
        for n, (t, r) in enumerate(zip(sched.slow_times, sched.offsets[np.arange(sched.num_pulses) % sched.period])):
            fh.write(f"{n},{t!r},{r!r}\n")
    for p in (data_path, hdr_path, sched_path):
        man.add_output(p)
    if args.figures:
        from .plotting import plot_echo

        man.add_output(plot_echo(echo, out / "echo.png"))
    print(f"wrote {data_path} ({echo.num_pulses} x {echo.num_gates})")
    man.write()
    return 0


def cmd_integrate(args):
    sc, echo, sched = _load_inputs(args)
    man = _manifest(args, sc)
    p = sc.radar
    grid = build_search_grid(p, sc.search_span(), sc.velocity_limit(), sc.a_max)
    angles = build_angle_grid(p, sc.a_max)
    man.notes.append(f"grid {grid.shape}, {len(angles)} angles")
    results = []
    for m in args.method:
        with Stage(man, m):
            results.append(run_method(m, echo, sched, grid, angles, p, r_span=sc.search_span()))
    out = Path(args.out)
    write_results_csv(results, out / "results.csv")
    man.add_output(out / "results.csv")
    for res in results:
        path = out / f"surface_{res.method.lower()}.csv"
        write_surface_csv(res, path)
        man.add_output(path)
    if args.figures:
        from .plotting import plot_comparison, plot_surface

        for res in results:
            man.add_output(plot_surface(res, out / f"surface_{res.method.lower()}.png"))
        man.add_output(plot_comparison(results, out / "comparison.png"))
    for res in results:
        extra = f" order={res.order:.4f} u={res.u:.5f}" if res.alpha is not None else ""
        print(
            f"{res.method:8s} peak={res.amplitude:.6g} R={res.range_est:.2f} m "
            f"v={res.velocity_est:.3f} m/s a={res.acceleration_est:.3f} m/s^2{extra}"
        )
    man.write()
    return 0


def cmd_clean(args):
    sc, echo, sched = _load_inputs(args)
    man = _manifest(args, sc)
    p = sc.radar
    grid = build_search_grid(p, sc.search_span(), sc.velocity_limit(), sc.a_max)
    angles = build_angle_grid(p, sc.a_max)
    with Stage(man, "clean"):
        results = clean_iterate(echo, sched, grid, angles, p, args.max_targets, args.stop_threshold)
    out = Path(args.out)
    write_results_csv(results, out / "clean.csv")
    man.add_output(out / "clean.csv")
    for i, res in enumerate(results, 1):
        print(
            f"target {i}: peak={res.amplitude:.6g} R={res.range_est:.2f} m "
            f"v={res.velocity_est:.3f} m/s a={res.acceleration_est:.3f} m/s^2"
        )
    man.write()
    return 0


def _trials(args, desk, full):
    if args.trials is not None:
        return args.trials
    return full if args.full_scale else desk


def cmd_calibrate(args):
    from .bench import calibrate_all, false_alarm_rate, write_calibration_csv

    sc = _bench_scenario(args)
    man = _manifest(args, sc)
    n = _trials(args, 5000, 5000)
    with Stage(man, "calibrate"):
        cals = calibrate_all(sc, args.method, args.pfa, n, args.threads)
    held = None
    if args.heldout:
        with Stage(man, "heldout"):
            held = false_alarm_rate(sc, cals, args.heldout, args.threads)
    path = Path(args.out) / "cfar.csv"
    write_calibration_csv(cals, path, held)
    man.add_output(path)
    for c in cals.values():
        man.notes.extend(c.warnings)
        line = f"{c.method:8s} threshold={c.threshold:.6g} trials={c.trials}"
        if held:
            line += f" heldout_pfa={held[c.method][0]:.4f}"
        print(line)
    man.write()
    return 0


def cmd_bench(args):
    from .bench import calibrate_all, pd_curve, timing_report, write_calibration_csv, write_curve_csv, write_timing_csv

    sc = _bench_scenario(args)
    man = _manifest(args, sc)
    out = Path(args.out)
    with Stage(man, "calibrate"):
        cals = calibrate_all(sc, args.method, args.pfa, args.cal_trials, args.threads)
    write_calibration_csv(cals, out / "cfar.csv")
    man.add_output(out / "cfar.csv")
    with Stage(man, "pd_curve"):
        curve = pd_curve(sc, args.method, args.snr_grid, _trials(args, 200, 1000), cals, args.threads)
    write_curve_csv(curve, out / "pd_curve.csv")
    man.add_output(out / "pd_curve.csv")
    with Stage(man, "timing"):
        rows = timing_report(sc, args.method)
    write_timing_csv(rows, out / "timing.csv")
    man.add_output(out / "timing.csv")
    if args.figures:
        from .plotting import plot_pd

        man.add_output(plot_pd(curve, out / "pd_curve.png"))
    for r in rows:
        print(f"{r.method:8s} median={r.median_seconds:.4g} s ratio={r.ratio_to_mtd:.1f}")
    for v in curve.ordering_violations():
        print(f"ordering violation at {v[0]:g} dB: {v[1]} below {v[2]}")
    man.write()
    return 0


def cmd_oracle_check(args):
    from .checks import run_all

    sign = -1 if args.inject_sign_flip else 1
    results = run_all(quick=args.quick, _offset_sign=sign)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    if failed:
        worst = max(failed, key=lambda r: r.worst / r.tolerance)
        print(f"oracle check failed: {worst.name} {worst.detail}", file=sys.stderr)
        return 1
    return 0


# --- parser --------------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario INI file (defaults: built-in radar, first reference target)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--pulses", type=int, help="number of pulses N")
    common.add_argument("--jitter", type=float, help="jitter amplitude in units of T, in [0, 0.5)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes for Monte-Carlo runs")
    common.add_argument("--full-scale", action="store_true", help="bench at the config pulse count and 1000 trials/point")
    common.add_argument("--figures", action="store_true", help="also render PNG figures")

    ap = argparse.ArgumentParser(prog="rnufrft", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="write a range-compressed echo")
    s.add_argument("--no-noise", action="store_true")
    s.add_argument("--raw-path", action="store_true", help="synthesize raw LFM returns and matched-filter them")
    s.add_argument("--write-config", metavar="PATH", help="write an editable two-target config and exit")
    s.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("integrate", cmd_integrate, "run integration methods on an echo"),
        ("clean", cmd_clean, "multi-target detection by CLEAN"),
    ):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--echo", help="echo.bin from simulate (default: simulate in memory)")
        s.add_argument("--no-noise", action="store_true")
        if name == "integrate":
            s.add_argument("--method", type=_methods, default=["RNUFRFT"], help="mtd|rft|rfrft|rnufrft|all")
        else:
            s.add_argument("--max-targets", type=int, default=2)
            s.add_argument("--stop-threshold", type=float, default=0.2)
        s.set_defaults(func=func)

    for name, func in (("calibrate", cmd_calibrate), ("bench", cmd_bench)):
        s = sub.add_parser(name, parents=[common], help=f"{name} (desk scale N={DESK_PULSES} unless --full-scale)")
        s.add_argument("--method", type=_methods, default=list(METHODS))
        s.add_argument("--pfa", type=float, default=1e-2)
        s.add_argument("--trials", type=int, help="trials (calibration for calibrate, per SNR point for bench)")
        if name == "calibrate":
            s.add_argument("--heldout", type=int, default=0, help="held-out noise trials for an empirical P_fa check")
        else:
            s.add_argument("--cal-trials", type=int, default=5000)
            s.add_argument("--snr-grid", type=_snr_grid, default=list(DEFAULT_SNR_GRID), help="comma-separated input SNRs in dB")
        s.set_defaults(func=func)

    s = sub.add_parser("oracle-check", help="fast transforms against brute-force sums")
    s.add_argument("--quick", action="store_true")
    s.add_argument("--inject-sign-flip", action="store_true", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_oracle_check)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        ap.exit(2, f"{ap.prog}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
