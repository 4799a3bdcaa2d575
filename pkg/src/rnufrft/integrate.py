"""Trajectory search and the four coherent integrators.

Every Radon-type method extracts one sample per pulse along
r(t) = r - v t - a t^2 / 2 on a coarse (r, v, a) grid that only has to align
the envelope, then transforms the extracted sequence:

* RFT: Fourier transform over velocity after removing the grid acceleration,
* RFRFT: FRFT over the angle grid, uniform slow time nT,
* Radon-NUFRFT: NUFRFT over the angle grid at the jittered pulse times.

Fine velocity and acceleration come from the transform coordinates.  MTD is a
per-gate Doppler filter bank with no migration correction.

Statistics are reported as coherent-sum magnitudes: a perfectly compensated
N-pulse sequence of amplitude A gives N A for every method.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy.optimize import minimize

from .echo import EchoMatrix, synth_compressed
from .frft import ChirpZPlan, amplitude
from .nufrft import NufrftEngine, NufrftPlan
from .scene import RadarParams, RpriSchedule, TargetTruth, truth_range_at

METHODS = ("MTD", "RFT", "RFRFT", "RNUFRFT")
# fine-grid oversampling in Doppler / fractional frequency; 2 bounds straddle loss near 0.9 dB
OVERSAMPLE = 2


# --- grids and unit conversion ---------------------------------------------


def _symmetric(limit, step):
    """Uniform grid over [-limit, limit] including both ends, step <= ``step``."""
    if limit <= 0 or 2 * limit < step:
        return np.array([0.0])
    n = int(np.ceil(2 * limit / step - 1e-9))
    return np.linspace(-limit, limit, n + 1)


@dataclass(frozen=True, eq=False)
class SearchGrid:
    ranges: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray

    def __post_init__(self):
        for name in ("ranges", "velocities", "accelerations"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.size == 0:
                raise ValueError(f"{name} grid is empty")
            object.__setattr__(self, name, arr)

    @property
    def shape(self):
        return len(self.ranges), len(self.velocities), len(self.accelerations)

    @property
    def steps(self):
        return tuple(float(np.diff(g)[0]) if len(g) > 1 else 0.0 for g in (self.ranges, self.velocities, self.accelerations))


def coarse_steps(params: RadarParams) -> tuple[float, float]:
    """Velocity/acceleration steps that walk the envelope by about one resolution cell."""
    rho, T = params.range_resolution, params.total_time
    return rho / T, 4 * rho / T**2


def fine_steps(params: RadarParams) -> tuple[float, float]:
    """Doppler-limited velocity and acceleration resolution over the CPI."""
    lam, T = params.wavelength, params.total_time
    return lam / (2 * T), lam / (2 * T**2)


def build_search_grid(params: RadarParams, r_span, v_max, a_max) -> SearchGrid:
    """Range grid on the gate lattice inside ``r_span``; coarse v and a grids."""
    step = params.range_step
    lo, hi = r_span
    k = np.arange(int(np.ceil(lo / step - 1e-9)), int(np.floor(hi / step + 1e-9)) + 1)
    dv, da = coarse_steps(params)
    return SearchGrid(k * step, _symmetric(v_max, dv), _symmetric(a_max, da))


@dataclass(frozen=True, eq=False)
class AngleGrid:
    accelerations: np.ndarray
    alphas: np.ndarray

    @property
    def orders(self):
        return 2 * self.alphas / np.pi

    def __len__(self):
        return len(self.alphas)


def build_angle_grid(params: RadarParams, a_max, accelerations=None) -> AngleGrid:
    """Angles matched to the fine acceleration grid k * lambda / (2 T_total^2), |a| <= a_max."""
    if accelerations is None:
        da = fine_steps(params)[1]
        k = int(np.floor(a_max / da + 1e-9))
        accelerations = np.arange(-k, k + 1) * da
    accelerations = np.atleast_1d(np.asarray(accelerations, dtype=float))
    alphas = np.array([motion_to_fractional(0.0, a, params)[0] for a in accelerations])
    return AngleGrid(accelerations, alphas)


def motion_to_fractional(v, a, params: RadarParams):
    """(alpha, u) whose kernel matches velocity v and acceleration a.

    cot alpha = -2 a S^2 / lambda,  u = 2 v S sin(alpha) / lambda.
    """
    S, lam = params.scale, params.wavelength
    alpha = np.pi / 2 + np.arctan(2 * a * S**2 / lam)
    return alpha, 2 * v * S * np.sin(alpha) / lam


def estimate_from_peak(alpha, u, scale, wavelength):
    """Velocity and acceleration from a fractional peak:

    a = -lambda cot(alpha) / (2 S^2),  v = lambda u csc(alpha) / (2 S).
    """
    k = alpha / np.pi
    if abs(k - round(k)) < 1e-9:
        raise ValueError("estimates undefined at alpha = k pi")
    a = -wavelength / np.tan(alpha) / (2 * scale**2)
    v = wavelength * u / np.sin(alpha) / (2 * scale)
    return float(v), float(a)


def u_axis(params: RadarParams, n=None, oversample=OVERSAMPLE):
    """Fractional-frequency grid (l - L N/2) / (L N dt), dt = T / S, L = oversample."""
    n = (params.num_pulses if n is None else n) * oversample
    dt = params.avg_pri / params.scale
    return (np.arange(n) - n // 2) / (n * dt)


def doppler_velocities(params: RadarParams, n=None, oversample=OVERSAMPLE):
    """Velocities of the centred L*N-point Doppler bins at the mean PRI."""
    n = (params.num_pulses if n is None else n) * oversample
    return params.wavelength * (np.arange(n) - n // 2) / (2 * n * params.avg_pri)


# --- extraction --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    samples: np.ndarray
    gates: np.ndarray
    times: np.ndarray
    interpolation: str = "nearest"


def _slow_times(sched: RpriSchedule, jittered: bool):
    return np.asarray(sched.slow_times if jittered else sched.uniform_times)


def extract_trajectory(echo: EchoMatrix, sched: RpriSchedule, r, v, a, jittered: bool = True, interpolation: str = "nearest") -> Trajectory:
    """Echo samples along r - v t_n - a t_n^2 / 2, one per pulse.

    ``jittered`` selects the true pulse times; the uniform-time methods pass
    False and sample at nT.  ``interpolation='sinc'`` uses band-limited
    interpolation across gates instead of the nearest gate.
    """
    t = _slow_times(sched, jittered)
    rng = r - v * t - 0.5 * a * t**2
    pos = (rng - echo.gate_origin) / echo.range_step
    gates = np.rint(pos).astype(np.int64)
    _check_gates(gates, echo.num_gates)
    rows = np.arange(len(t))
    if interpolation == "nearest":
        samples = echo.data[rows, gates]
    elif interpolation == "sinc":
        half = 8
        offs = np.arange(-half, half + 1)
        idx = gates[:, None] + offs[None, :]
        _check_gates(np.clip(idx, -1, echo.num_gates)[:, [0, -1]].ravel(), echo.num_gates)
        w = np.sinc(pos[:, None] - idx)
        samples = np.sum(echo.data[rows[:, None], idx] * w, axis=1)
    else:
        raise ValueError(f"unknown interpolation {interpolation!r}")
    return Trajectory(samples, gates, t, interpolation)


def _check_gates(gates, n_gates):
    bad = np.flatnonzero((gates < 0) | (gates >= n_gates))
    if bad.size:
        n = int(bad[0]) % max(1, gates.shape[-1] if gates.ndim else 1)
        raise ValueError(f"trajectory leaves the echo window at pulse {n}")


def extract_all(echo: EchoMatrix, grid: SearchGrid, times) -> np.ndarray:
    """Trajectories for every grid cell, shape (Nr, Nv, Na, N)."""
    t = np.asarray(times)
    out = np.empty(grid.shape + (len(t),), dtype=complex)
    rows = np.arange(len(t))
    for j, v in enumerate(grid.velocities):
        for k, a in enumerate(grid.accelerations):
            rng = grid.ranges[:, None] - v * t[None, :] - 0.5 * a * t[None, :] ** 2
            gates = np.rint((rng - echo.gate_origin) / echo.range_step).astype(np.int64)
            bad = np.argwhere((gates < 0) | (gates >= echo.num_gates))
            if bad.size:
                raise ValueError(
                    f"trajectory (r={grid.ranges[bad[0, 0]]:.1f}, v={v:g}, a={a:g}) "
                    f"leaves the echo window at pulse {bad[0, 1]}"
                )
            out[:, j, k, :] = echo.data[rows[None, :], gates]
    return out


# --- results -------------------------------------------------------------------


@dataclass(eq=False)
class SearchResult:
    method: str
    amplitude: float
    r: float
    v: float
    a: float
    range_est: float
    velocity_est: float
    acceleration_est: float
    alpha: float | None = None
    u: float | None = None
    index: tuple = ()
    surface: dict = field(default_factory=dict, repr=False)

    @property
    def order(self):
        return None if self.alpha is None else 2 * self.alpha / np.pi

    def row(self) -> dict:
        return {
            "method": self.method,
            "amplitude": self.amplitude,
            "r": self.r,
            "v": self.v,
            "a": self.a,
            "order": "" if self.alpha is None else self.order,
            "u": "" if self.u is None else self.u,
            "range_est": self.range_est,
            "velocity_est": self.velocity_est,
            "acceleration_est": self.acceleration_est,
        }


RESULT_FIELDS = list(SearchResult("", 0, 0, 0, 0, 0, 0, 0).row())


def write_results_csv(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
        w.writeheader()
        for res in results:
            w.writerow({k: _fmt(v) for k, v in res.row().items()})


def write_surface_csv(result: SearchResult, path):
    """Dump the statistic over the result's 2-D surface as long-format rows."""
    surf = result.surface
    if not surf:
        raise ValueError("result carries no surface")
    xs, ys, z = surf["x"], surf["y"], surf["values"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([surf["xlabel"], surf["ylabel"], "magnitude"])
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                w.writerow([_fmt(x), _fmt(y), _fmt(z[i, j])])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# --- methods -------------------------------------------------------------------


def mtd(echo: EchoMatrix, params: RadarParams, r_span=None, oversample=OVERSAMPLE) -> SearchResult:
    """Per-gate Doppler filter bank over slow time, assuming t_n = nT."""
    gates = np.arange(echo.num_gates)
    if r_span is not None:
        rax = echo.range_axis
        gates = gates[(rax >= r_span[0]) & (rax <= r_span[1])]
    spec = sfft.fftshift(sfft.fft(echo.data[:, gates], n=oversample * echo.num_pulses, axis=0), axes=0)
    mag = np.abs(spec).T  # (gate, doppler)
    i, j = np.unravel_index(int(np.argmax(mag)), mag.shape)
    vel = doppler_velocities(params, echo.num_pulses, oversample)
    r = float(echo.range_axis[gates[i]])
    return SearchResult(
        "MTD", float(mag[i, j]), r, float(vel[j]), 0.0, r, float(vel[j]), 0.0,
        index=(int(gates[i]), int(j)),
        surface={"x": echo.range_axis[gates], "y": vel, "values": mag, "xlabel": "range_m", "ylabel": "velocity_mps"},
    )


def rft(
    echo: EchoMatrix, sched: RpriSchedule, grid: SearchGrid, params: RadarParams, keep_surface: bool = True, oversample=OVERSAMPLE
) -> SearchResult:
    """Radon-Fourier transform on uniform slow time.

    Each cell's trajectory is compensated for the cell acceleration and
    Fourier transformed over velocity; the velocity axis is the N-bin
    Doppler grid.
    """
    t = sched.uniform_times
    traj = extract_all(echo, grid, t)
    lam = params.wavelength
    comp = np.exp(-2j * np.pi * np.multiply.outer(grid.accelerations, t**2) / lam)
    spec = sfft.fftshift(sfft.fft(traj * comp[None, None], n=oversample * len(t), axis=-1), axes=-1)
    mag = np.abs(spec)
    idx = np.unravel_index(int(np.argmax(mag)), mag.shape)
    vel = doppler_velocities(params, len(t), oversample)
    i, j, k, l = idx
    res = SearchResult(
        "RFT", float(mag[idx]), float(grid.ranges[i]), float(grid.velocities[j]), float(grid.accelerations[k]),
        float(grid.ranges[i]), float(vel[l]), float(grid.accelerations[k]), index=tuple(map(int, idx)),
    )
    if keep_surface:
        res.surface = {
            "x": grid.ranges, "y": vel, "values": mag[:, j, k, :],
            "xlabel": "range_m", "ylabel": "velocity_mps", "cells": mag.max(axis=-1),
        }
    return res


@lru_cache(maxsize=512)
def _uniform_plan(alpha, n, dt, oversample):
    m = n * oversample
    u = (np.arange(m) - m // 2) / (m * dt)
    return ChirpZPlan(alpha, n, 0.0, dt, m, u[0], u[1] - u[0], weight=1.0)


@lru_cache(maxsize=512)
def _nufrft_engine(alpha, n, T, scale, offsets, oversample):
    m = n * oversample
    u = (np.arange(m) - m // 2) / (m * T / scale)
    plan = NufrftPlan(len(offsets), T, np.array(offsets), alpha, scale, u_axis=u)
    eng = NufrftEngine(plan, n)
    eng.post = eng.post / plan.step  # weight 1: plain coherent sum
    return eng


def _fractional_search(name, traj, grid, angles, params, transform, keep_surface, oversample):
    n = traj.shape[-1]
    cells = traj.reshape(-1, n)
    per_angle = np.empty((cells.shape[0], len(angles)))
    arg_u = np.empty((cells.shape[0], len(angles)), dtype=np.int64)
    for q, alpha in enumerate(angles.alphas):
        mag = np.abs(transform(alpha, cells)) / abs(amplitude(alpha))
        arg_u[:, q] = np.argmax(mag, axis=1)
        per_angle[:, q] = mag[np.arange(len(mag)), arg_u[:, q]]
    # first maximum in (r, v, a, alpha, u) order
    c, q = np.unravel_index(int(np.argmax(per_angle)), per_angle.shape)
    l = int(arg_u[c, q])
    amp = float(per_angle[c, q])
    i, j, k = np.unravel_index(c, grid.shape)
    uax = u_axis(params, n, oversample)
    alpha = float(angles.alphas[q])
    v_est, a_est = estimate_from_peak(alpha, uax[l], params.scale, params.wavelength)
    res = SearchResult(
        name, amp, float(grid.ranges[i]), float(grid.velocities[j]), float(grid.accelerations[k]),
        float(grid.ranges[i]), v_est, a_est, alpha=alpha, u=float(uax[l]), index=(int(i), int(j), int(k), int(q), int(l)),
    )
    if keep_surface:
        peak_cell = cells[c : c + 1]
        surf = np.array([np.abs(transform(al, peak_cell)[0]) / abs(amplitude(al)) for al in angles.alphas])
        res.surface = {
            "x": angles.orders, "y": uax, "values": surf, "xlabel": "order", "ylabel": "u",
            "cells": per_angle.reshape(grid.shape + (len(angles),)),
        }
    return res


def rfrft(
    echo: EchoMatrix,
    sched: RpriSchedule,
    grid: SearchGrid,
    angles: AngleGrid,
    params: RadarParams,
    keep_surface: bool = True,
    oversample=OVERSAMPLE,
) -> SearchResult:
    """Radon-FRFT: uniform-time FRFT of each trajectory over the angle grid."""
    traj = extract_all(echo, grid, sched.uniform_times)
    dt = params.avg_pri / params.scale

    def transform(alpha, x):
        return _uniform_plan(float(alpha), x.shape[-1], dt, oversample)(x)

    return _fractional_search("RFRFT", traj, grid, angles, params, transform, keep_surface, oversample)


def radon_nufrft(
    echo: EchoMatrix,
    sched: RpriSchedule,
    grid: SearchGrid,
    angles: AngleGrid,
    params: RadarParams,
    keep_surface: bool = True,
    oversample=OVERSAMPLE,
) -> SearchResult:
    """Radon-NUFRFT: trajectories at the jittered times, NUFRFT over the angle grid."""
    traj = extract_all(echo, grid, sched.slow_times)
    offsets = tuple(float(r) for r in sched.offsets)

    def transform(alpha, x):
        return _nufrft_engine(float(alpha), x.shape[-1], params.avg_pri, params.scale, offsets, oversample)(x)

    return _fractional_search("RNUFRFT", traj, grid, angles, params, transform, keep_surface, oversample)


def run_method(method, echo, sched, grid, angles, params, r_span=None, keep_surface=True, oversample=OVERSAMPLE) -> SearchResult:
    method = method.upper()
    if method == "MTD":
        span = r_span if r_span is not None else (grid.ranges[0], grid.ranges[-1])
        return mtd(echo, params, span, oversample)
    if method == "RFT":
        return rft(echo, sched, grid, params, keep_surface, oversample)
    if method == "RFRFT":
        return rfrft(echo, sched, grid, angles, params, keep_surface, oversample)
    if method in ("RNUFRFT", "RADON-NUFRFT"):
        return radon_nufrft(echo, sched, grid, angles, params, keep_surface, oversample)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


# --- CLEAN ---------------------------------------------------------------------


def _target_model(params, sched, echo, truth, band):
    """Unit-amplitude compressed echo of ``truth`` on gates [lo, hi)."""
    lo, hi = band
    gates = echo.gate_origin + echo.range_step * np.arange(lo, hi)
    R = truth_range_at(truth, sched.slow_times)[:, None]
    env = np.sinc(params.bandwidth * 2 * (gates[None, :] - R) / 2.99792458e8)
    return params.compression_gain * env * np.exp(-4j * np.pi * R / params.wavelength)


def refine_target(echo: EchoMatrix, sched: RpriSchedule, params: RadarParams, result: SearchResult):
    """Least-squares (R, v, a, complex amplitude) polish around a search peak.

    Returns the refined TargetTruth (backscatter = |amplitude|), the complex
    amplitude and the gate band used.
    """
    x0 = np.array([result.range_est, result.velocity_est, result.acceleration_est])
    t = sched.slow_times
    path = truth_range_at(TargetTruth(*x0), t)
    pad = int(np.ceil(6 * params.range_resolution / echo.range_step))
    lo = max(0, int(echo.gate_of(path.min())) - pad)
    hi = min(echo.num_gates, int(echo.gate_of(path.max())) + pad + 1)
    data = echo.data[:, lo:hi]
    scale = np.array([echo.range_step, fine_steps(params)[0], fine_steps(params)[1]])

    def cost(z):
        m = _target_model(params, sched, echo, TargetTruth(*(x0 + z * scale)), (lo, hi))
        return -abs(np.vdot(m, data)) ** 2 / np.vdot(m, m).real

    opt = minimize(cost, np.zeros(3), method="Nelder-Mead", options={"xatol": 1e-3, "fatol": 1e-9, "maxiter": 400})
    est = x0 + opt.x * scale
    truth = TargetTruth(*est)
    m = _target_model(params, sched, echo, truth, (lo, hi))
    amp = np.vdot(m, data) / np.vdot(m, m).real
    return TargetTruth(est[0], est[1], est[2], float(abs(amp))), amp, (lo, hi)


def clean_iterate(
    echo: EchoMatrix,
    sched: RpriSchedule,
    grid: SearchGrid,
    angles: AngleGrid,
    params: RadarParams,
    max_targets: int = 2,
    stop_threshold: float = 0.2,
    floor: float = 0.0,
    refine: bool = True,
) -> list[SearchResult]:
    """Detect, synthesize and subtract targets one at a time with Radon-NUFRFT.

    Stops after ``max_targets`` detections, when a peak falls below
    ``stop_threshold`` times the first peak, or when it does not exceed the
    absolute ``floor``.
    """
    if max_targets < 1:
        raise ValueError("max_targets must be at least 1")
    results = []
    current = echo
    for _ in range(max_targets):
        res = radon_nufrft(current, sched, grid, angles, params, keep_surface=False)
        if res.amplitude <= floor:
            break
        if results and res.amplitude < stop_threshold * results[0].amplitude:
            break
        if refine:
            truth, amp, (lo, hi) = refine_target(current, sched, params, res)
            res.surface["refined"] = truth
            data = current.data.copy()
            data[:, lo:hi] -= amp * _target_model(params, sched, current, truth, (lo, hi))
        else:
            truth = TargetTruth(res.range_est, res.velocity_est, res.acceleration_est)
            model = synth_compressed(params, sched, [truth], (current.range_axis[0], current.range_axis[-1]), margin=-np.inf)
            amp = np.vdot(model.data, current.data) / np.vdot(model.data, model.data).real
            data = current.data - amp * model.data
        results.append(res)
        current = current.replace_data(data)
    return results
