"""CFAR calibration, Monte-Carlo detection curves and method timing.

Noise level is fixed (unit-amplitude target at 0 dB input SNR); the SNR sweep
scales the target instead, so one calibration per method serves every point.
Trial noise comes from the "bench" stream keyed by a phase offset plus the
trial index, which keeps calibration, held-out and detection trials disjoint
and independent of execution order.
"""

from __future__ import annotations

import csv
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import binomtest

from .echo import EchoMatrix, NoiseSpec, complex_noise, noise_variance, synth_compressed
from .integrate import (
    METHODS,
    AngleGrid,
    SearchGrid,
    build_angle_grid,
    build_search_grid,
    coarse_steps,
    run_method,
)
from .scene import RadarParams, RpriSchedule, Scenario, TargetTruth, make_schedule, truth_range_at

CALIBRATION_BASE = 0
HELDOUT_BASE = 10_000_000
DETECTION_BASE = 20_000_000
SNR_STRIDE = 100_000


@dataclass(eq=False)
class BenchContext:
    """Everything fixed across trials of one scenario."""

    scenario: Scenario
    params: RadarParams
    sched: RpriSchedule
    grid: SearchGrid
    angles: AngleGrid
    signal: EchoMatrix  # unit-backscatter target(s), noise-free
    noise_var: float

    @classmethod
    def build(cls, scenario: Scenario) -> "BenchContext":
        p = scenario.radar
        sched = make_schedule(p, scenario.jitter, scenario.seed)
        grid = build_search_grid(p, scenario.search_span(), scenario.velocity_limit(), scenario.a_max)
        angles = build_angle_grid(p, scenario.a_max)
        unit = [replace(t, backscatter=1.0) for t in scenario.targets[:1]]
        signal = synth_compressed(p, sched, unit, scenario.echo_window())
        var = noise_variance(NoiseSpec(0.0), p)
        return cls(scenario, p, sched, grid, angles, signal, var)

    def trial_echo(self, snr_db, index) -> EchoMatrix:
        rng = self.scenario.seed.rng("bench", index)
        noise = complex_noise(rng, self.signal.data.shape, self.noise_var)
        if snr_db is None or np.isneginf(snr_db):
            return self.signal.replace_data(noise, self.noise_var)
        amp = 10 ** (snr_db / 20)
        return self.signal.replace_data(amp * self.signal.data + noise, self.noise_var)

    def search(self, method, echo):
        return run_method(method, echo, self.sched, self.grid, self.angles, self.params, keep_surface=False)


def _normalise_methods(methods):
    out = []
    for m in methods:
        m = m.upper()
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        out.append(m)
    return out


def _run_chunk(args):
    scenario, methods, snr_db, indices = args
    ctx = _context(scenario)
    out = np.empty((len(indices), len(methods)))
    hits = np.zeros((len(indices), len(methods)), dtype=bool)
    truth = scenario.targets[0] if scenario.targets else None
    for i, idx in enumerate(indices):
        echo = ctx.trial_echo(snr_db, idx)
        for j, m in enumerate(methods):
            res = ctx.search(m, echo)
            out[i, j] = res.amplitude
            if truth is not None:
                hits[i, j] = declared_near(res, truth, ctx.params)
    return out, hits


_CONTEXTS: dict = {}


def _context(scenario) -> BenchContext:
    key = repr(scenario)
    if key not in _CONTEXTS:
        _CONTEXTS.clear()
        _CONTEXTS[key] = BenchContext.build(scenario)
    return _CONTEXTS[key]


def run_trials(scenario, methods, snr_db, indices, threads=1, chunk=50):
    """Global statistic and location check per (trial, method), order-independent."""
    indices = np.asarray(indices)
    jobs = [(scenario, tuple(methods), snr_db, indices[i : i + chunk]) for i in range(0, len(indices), chunk)]
    if threads <= 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    stats = np.concatenate([p[0] for p in parts])
    hits = np.concatenate([p[1] for p in parts])
    return stats, hits


def declared_near(res, truth: TargetTruth, params: RadarParams) -> bool:
    """Peak within one coarse cell of the truth.

    Range is checked against the span the truth occupies over the CPI (MTD
    has no notion of initial range), velocity against the coarse step.
    """
    dv, _ = coarse_steps(params)
    path = truth_range_at(truth, np.linspace(0, params.total_time, 33))
    dr = params.range_step
    in_range = path.min() - dr <= res.range_est <= path.max() + dr
    return bool(in_range and abs(res.velocity_est - truth.velocity) <= dv)


# --- CFAR ------------------------------------------------------------------------


@dataclass
class CfarCalibration:
    method: str
    p_fa: float
    threshold: float
    trials: int
    noise_variance: float
    warnings: list = field(default_factory=list)
    samples: np.ndarray | None = field(default=None, repr=False)


def _quantile(stats, p_fa):
    return float(np.quantile(stats, 1 - p_fa))


def calibrate_all(scenario, methods, p_fa=1e-2, n_trials=5000, threads=1) -> dict:
    """Noise-only global statistics for each method, thresholded at the (1 - P_fa) quantile."""
    if not 0 < p_fa < 1:
        raise ValueError("p_fa must lie in (0, 1)")
    methods = _normalise_methods(methods)
    notes = []
    if n_trials < 10 / p_fa:
        msg = f"{n_trials} trials is below 10/P_fa = {10 / p_fa:.0f}; quantile is unstable"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    stats, _ = run_trials(scenario, methods, None, CALIBRATION_BASE + np.arange(n_trials), threads)
    var = _context(scenario).noise_var
    return {
        m: CfarCalibration(m, p_fa, _quantile(stats[:, j], p_fa), n_trials, var, list(notes), stats[:, j])
        for j, m in enumerate(methods)
    }


def calibrate_cfar(method, scenario, p_fa=1e-2, n_trials=5000, threads=1) -> CfarCalibration:
    return calibrate_all(scenario, [method], p_fa, n_trials, threads)[method.upper()]


def false_alarm_rate(scenario, calibrations: dict, n_trials=2000, threads=1) -> dict:
    """Empirical P_fa on held-out noise-only trials, with Wilson intervals."""
    methods = list(calibrations)
    stats, _ = run_trials(scenario, methods, None, HELDOUT_BASE + np.arange(n_trials), threads)
    out = {}
    for j, m in enumerate(methods):
        k = int(np.sum(stats[:, j] > calibrations[m].threshold))
        out[m] = (k / n_trials, *wilson(k, n_trials))
    return out


def wilson(k, n, confidence=0.95):
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


# --- detection curves -------------------------------------------------------------


@dataclass
class DetectionCurve:
    snr_db: np.ndarray
    methods: list
    pd: np.ndarray  # (method, snr)
    ci_low: np.ndarray
    ci_high: np.ndarray
    trials: int

    def separated(self, a, b, i) -> bool:
        """True when method a's interval lies entirely above or below b's at point i."""
        ia, ib = self.methods.index(a), self.methods.index(b)
        return bool(self.ci_low[ia, i] > self.ci_high[ib, i] or self.ci_high[ia, i] < self.ci_low[ib, i])

    def ordering_violations(self, order=("RNUFRFT", "RFRFT", "RFT", "MTD")):
        """(snr, better, worse) wherever 'better' is significantly below 'worse'."""
        bad = []
        order = [m for m in order if m in self.methods]
        for i, s in enumerate(self.snr_db):
            for hi_idx, a in enumerate(order):
                for b in order[hi_idx + 1 :]:
                    ia, ib = self.methods.index(a), self.methods.index(b)
                    if self.ci_high[ia, i] < self.ci_low[ib, i]:
                        bad.append((float(s), a, b))
        return bad

    def monotonicity_violations(self):
        """(method, snr_lo, snr_hi) where P_d drops beyond interval slack."""
        bad = []
        for j, m in enumerate(self.methods):
            for i in range(len(self.snr_db) - 1):
                for k in range(i + 1, len(self.snr_db)):
                    if self.ci_high[j, k] < self.ci_low[j, i]:
                        bad.append((m, float(self.snr_db[i]), float(self.snr_db[k])))
        return bad

    def rows(self):
        for j, m in enumerate(self.methods):
            for i, s in enumerate(self.snr_db):
                yield {
                    "method": m,
                    "snr_db": float(s),
                    "pd": float(self.pd[j, i]),
                    "ci_low": float(self.ci_low[j, i]),
                    "ci_high": float(self.ci_high[j, i]),
                    "trials": self.trials,
                }


def pd_curve(scenario, methods, snr_grid, n_trials, calibrations: dict, threads=1, require_location=True) -> DetectionCurve:
    """Fraction of trials declared detected per (method, SNR).

    A detection needs the global statistic above the method's threshold and,
    with ``require_location``, the peak within one coarse cell of the truth.
    """
    methods = _normalise_methods(methods)
    missing = [m for m in methods if m not in calibrations]
    if missing:
        raise ValueError(f"no CFAR calibration for {', '.join(missing)}")
    snr_grid = np.asarray(snr_grid, dtype=float)
    pd = np.zeros((len(methods), len(snr_grid)))
    lo, hi = np.zeros_like(pd), np.zeros_like(pd)
    thr = np.array([calibrations[m].threshold for m in methods])
    for i, snr in enumerate(snr_grid):
        idx = DETECTION_BASE + SNR_STRIDE * i + np.arange(n_trials)
        stats, near = run_trials(scenario, methods, snr, idx, threads)
        det = stats > thr[None, :]
        if require_location:
            det &= near
        for j in range(len(methods)):
            k = int(det[:, j].sum())
            pd[j, i] = k / n_trials
            lo[j, i], hi[j, i] = wilson(k, n_trials)
    return DetectionCurve(snr_grid, methods, pd, lo, hi, n_trials)


# --- timing ----------------------------------------------------------------------


@dataclass
class TimingRow:
    method: str
    median_seconds: float
    ratio_to_mtd: float


def timing_report(scenario, methods=METHODS, repeats=5, snr_db=0.0) -> list[TimingRow]:
    """Median-of-``repeats`` wall time per method on one noisy echo, after a warm-up call."""
    methods = _normalise_methods(methods)
    ctx = BenchContext.build(scenario)
    echo = ctx.trial_echo(snr_db, DETECTION_BASE - 1)
    med = {}
    for m in methods:
        ctx.search(m, echo)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            ctx.search(m, echo)
            times.append(time.perf_counter() - t0)
        med[m] = float(np.median(times))
    ref = med.get("MTD", min(med.values()))
    return [TimingRow(m, med[m], med[m] / ref) for m in methods]


# --- CSV ------------------------------------------------------------------------------


def write_curve_csv(curve: DetectionCurve, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["method", "snr_db", "pd", "ci_low", "ci_high", "trials"], lineterminator="\n")
        w.writeheader()
        for row in curve.rows():
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def write_timing_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "median_seconds", "ratio_to_mtd"])
        for r in rows:
            w.writerow([r.method, repr(r.median_seconds), repr(r.ratio_to_mtd)])


def write_calibration_csv(cals: dict, path, heldout: dict | None = None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["method", "p_fa", "threshold", "trials", "noise_variance"]
        if heldout:
            head += ["heldout_pfa", "heldout_ci_low", "heldout_ci_high"]
        w.writerow(head)
        for m, c in cals.items():
            row = [m, repr(c.p_fa), repr(c.threshold), c.trials, repr(c.noise_variance)]
            if heldout:
                row += [repr(v) for v in heldout[m]]
            w.writerow(row)


def desk_scenario(scenario: Scenario | None = None, pulses: int = 256, half_span: float = 15.0) -> Scenario:
    """Single-target bench scene at reduced pulse count, searched within +-half_span of the target."""
    sc = scenario or Scenario()
    targets = sc.targets[:1]
    r_span = sc.r_span
    if r_span is None and targets:
        r0 = targets[0].initial_range
        r_span = (r0 - half_span, r0 + half_span)
    return replace(sc, radar=sc.radar.with_pulses(pulses), targets=targets, snr_db=sc.snr_db[:1], r_span=r_span)
