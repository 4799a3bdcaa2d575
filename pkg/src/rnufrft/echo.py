"""Range-compressed echo synthesis and noise injection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .scene import SPEED_OF_LIGHT, RadarParams, RpriSchedule, SeedSpec, TargetTruth, truth_range_at


@dataclass(frozen=True, eq=False)
class EchoMatrix:
    data: np.ndarray
    gate_origin: float
    range_step: float
    compression_gain: float
    schedule_digest: str = ""
    noise_variance: float = 0.0

    @property
    def range_axis(self) -> np.ndarray:
        return self.gate_origin + self.range_step * np.arange(self.data.shape[1])

    @property
    def num_pulses(self) -> int:
        return self.data.shape[0]

    @property
    def num_gates(self) -> int:
        return self.data.shape[1]

    def gate_of(self, r):
        """Nearest gate index for range(s) r."""
        return np.rint((np.asarray(r) - self.gate_origin) / self.range_step).astype(np.int64)

    def replace_data(self, data, noise_variance=None) -> "EchoMatrix":
        nv = self.noise_variance if noise_variance is None else noise_variance
        return EchoMatrix(data, self.gate_origin, self.range_step, self.compression_gain, self.schedule_digest, nv)

    def __add__(self, other: "EchoMatrix") -> "EchoMatrix":
        if self.data.shape != other.data.shape or self.gate_origin != other.gate_origin:
            raise ValueError("echo matrices must share shape and gate origin")
        return self.replace_data(self.data + other.data, self.noise_variance + other.noise_variance)


@dataclass(frozen=True)
class NoiseSpec:
    """Input SNR per sample before pulse compression, in dB; +inf disables noise."""

    input_snr: float
    reference_amplitude: float = 1.0


def gate_lattice(params: RadarParams, window) -> tuple[float, int]:
    """Origin and count of gates covering ``window``, aligned to multiples of c/(2 fs)."""
    lo, hi = window
    step = params.range_step
    first = int(np.floor(lo / step))
    last = int(np.ceil(hi / step))
    return first * step, last - first + 1


def _check_window(params, sched, targets, origin, n_gates, margin):
    hi = origin + (n_gates - 1) * params.range_step
    for i, tgt in enumerate(targets):
        r = truth_range_at(tgt, sched.slow_times)
        bad = np.flatnonzero((r < origin + margin) | (r > hi - margin))
        if bad.size:
            raise ValueError(
                f"target {i} leaves the echo window (with {margin:.1f} m margin) at pulse {bad[0]}"
            )


def synth_compressed(
    params: RadarParams,
    sched: RpriSchedule,
    targets,
    window,
    margin: float | None = None,
) -> EchoMatrix:
    """Analytic range-compressed echo sigma G sinc[pi B (tau - 2R/c)] exp(-j 4 pi R / lambda).

    One row per pulse, range frozen at the pulse's slow time.
    """
    origin, n_gates = gate_lattice(params, window)
    if margin is None:
        margin = SPEED_OF_LIGHT * params.pulse_width / 2
    _check_window(params, sched, targets, origin, n_gates, margin)
    gates = origin + params.range_step * np.arange(n_gates)
    G = params.compression_gain
    data = np.zeros((sched.num_pulses, n_gates), dtype=complex)
    for tgt in targets:
        R = truth_range_at(tgt, sched.slow_times)[:, None]
        # np.sinc(x) = sin(pi x)/(pi x); tau - 2R/c = 2 (r - R)/c
        env = np.sinc(params.bandwidth * 2 * (gates[None, :] - R) / SPEED_OF_LIGHT)
        data += tgt.backscatter * G * env * np.exp(-4j * np.pi * R / params.wavelength)
    return EchoMatrix(data, origin, params.range_step, G, sched.digest())


def reference_chirp(params: RadarParams) -> np.ndarray:
    """Baseband LFM rect(tau/Tp) exp(j pi gamma tau^2) sampled at fs."""
    half = int(np.floor(params.pulse_width * params.sampling_freq / 2))
    tau = np.arange(-half, half + 1) / params.sampling_freq
    return np.exp(1j * np.pi * params.chirp_rate * tau**2)


def synth_raw_then_compress(
    params: RadarParams,
    sched: RpriSchedule,
    targets,
    window,
    margin: float | None = None,
) -> EchoMatrix:
    """Simulate delayed LFM returns and matched-filter them.

    The reference is scaled by B/fs so the compressed peak equals B Tp, the
    gain used by :func:`synth_compressed`.
    """
    origin, n_gates = gate_lattice(params, window)
    if margin is None:
        margin = SPEED_OF_LIGHT * params.pulse_width / 2
    _check_window(params, sched, targets, origin, n_gates, margin)
    ref = reference_chirp(params)
    half = len(ref) // 2
    # raw fast-time samples extend half a pulse beyond the gate window on each side
    n_raw = n_gates + 2 * half
    r_raw = origin + params.range_step * (np.arange(n_raw) - half)
    tau = 2 * r_raw / SPEED_OF_LIGHT
    raw = np.zeros((sched.num_pulses, n_raw), dtype=complex)
    for tgt in targets:
        R = truth_range_at(tgt, sched.slow_times)[:, None]
        d = tau[None, :] - 2 * R / SPEED_OF_LIGHT
        inside = np.abs(d) <= params.pulse_width / 2
        raw += tgt.backscatter * inside * np.exp(
            1j * np.pi * params.chirp_rate * d**2 - 4j * np.pi * R / params.wavelength
        )
    if not targets:
        data = np.zeros((sched.num_pulses, n_gates), dtype=complex)
    else:
        mf = np.conj(ref[::-1])[None, :] * (params.bandwidth / params.sampling_freq)
        data = fftconvolve(raw, mf, mode="valid", axes=1)
    return EchoMatrix(data, origin, params.range_step, params.compression_gain, sched.digest())


def noise_variance(spec: NoiseSpec, params: RadarParams) -> float:
    """Per-sample variance of white noise in the compressed domain.

    A target of amplitude ``reference_amplitude`` has input SNR ``input_snr``;
    compression adds B Tp to the peak SNR.
    """
    if np.isinf(spec.input_snr) and spec.input_snr > 0:
        return 0.0
    snr = 10 ** (spec.input_snr / 10)
    G = params.compression_gain
    return spec.reference_amplitude**2 * G / snr


def complex_noise(rng: np.random.Generator, shape, variance) -> np.ndarray:
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def add_noise(echo: EchoMatrix, spec: NoiseSpec, params: RadarParams, seed: SeedSpec, trial: int = 0) -> EchoMatrix:
    """Add circular complex white Gaussian noise to a noise-free echo."""
    var = noise_variance(spec, params)
    if var == 0:
        return echo
    noise = complex_noise(seed.rng("noise", trial), echo.data.shape, var)
    return echo.replace_data(echo.data + noise, var)


# --- binary export ---------------------------------------------------------


def save_echo(echo: EchoMatrix, path, extra: dict | None = None) -> tuple[Path, Path]:
    """Write little-endian float64 (re, im) pairs row-major plus a JSON header."""
    path = Path(path)
    data = np.ascontiguousarray(echo.data, dtype="<c16")
    path.write_bytes(data.tobytes())
    header = {
        "format": "complex128-le-rowmajor",
        "rows": echo.num_pulses,
        "cols": echo.num_gates,
        "gate_origin": echo.gate_origin,
        "range_step": echo.range_step,
        "range_axis_first": float(echo.range_axis[0]),
        "range_axis_last": float(echo.range_axis[-1]),
        "compression_gain": echo.compression_gain,
        "noise_variance": echo.noise_variance,
        "schedule_sha256": echo.schedule_digest,
    }
    if extra:
        header.update(extra)
    hdr = path.with_suffix(path.suffix + ".json")
    hdr.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return path, hdr


def load_echo(path) -> tuple[EchoMatrix, dict]:
    path = Path(path)
    hdr = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    raw = np.frombuffer(path.read_bytes(), dtype="<c16")
    if raw.size != hdr["rows"] * hdr["cols"]:
        raise ValueError(f"{path}: expected {hdr['rows']}x{hdr['cols']} samples, found {raw.size}")
    data = raw.reshape(hdr["rows"], hdr["cols"]).astype(complex)
    echo = EchoMatrix(
        data,
        hdr["gate_origin"],
        hdr["range_step"],
        hdr["compression_gain"],
        hdr.get("schedule_sha256", ""),
        hdr.get("noise_variance", 0.0),
    )
    return echo, hdr


def simulate_scenario(scenario, raw: bool = False, trial: int = 0) -> tuple[EchoMatrix, RpriSchedule]:
    """Schedule and (optionally noisy) compressed echo for a scenario.

    Target amplitudes follow the per-target SNRs relative to the first
    target; the noise level is set by the first target's input SNR.
    """
    from .scene import make_schedule

    p = scenario.radar
    sched = make_schedule(p, scenario.jitter, scenario.seed)
    targets = scenario.scaled_targets()
    synth = synth_raw_then_compress if raw else synth_compressed
    echo = synth(p, sched, targets, scenario.echo_window())
    if scenario.noise and targets:
        spec = NoiseSpec(scenario.reference_snr_db, targets[0].backscatter)
        echo = add_noise(echo, spec, p, scenario.seed, trial)
    return echo, sched
