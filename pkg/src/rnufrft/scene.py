"""Radar constants, the jittered pulse schedule, target truth and seeding.

Every other module consumes the objects defined here.  All quantities are SI.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8

# Stream labels keep jitter and per-trial noise independent of draw order.
STREAMS = {"jitter": 1, "noise": 2, "bench": 3}


@dataclass(frozen=True)
class RadarParams:
    carrier_freq: float = 2.5e9
    bandwidth: float = 20e6
    pulse_width: float = 10e-6
    avg_pri: float = 500e-6
    num_pulses: int = 1024
    jitter_period: int = 8
    sampling_freq: float = 50e6

    def __post_init__(self):
        if not 1 <= self.jitter_period < self.num_pulses:
            raise ValueError(
                f"jitter_period must satisfy 1 <= M < N, got M={self.jitter_period}, "
                f"N={self.num_pulses}"
            )
        if self.sampling_freq < 2 * self.bandwidth:
            raise ValueError("sampling_freq must be at least twice the bandwidth")
        for name in ("carrier_freq", "bandwidth", "pulse_width", "avg_pri"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def chirp_rate(self) -> float:
        return self.bandwidth / self.pulse_width

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def total_time(self) -> float:
        return self.num_pulses * self.avg_pri

    @property
    def avg_prf(self) -> float:
        return 1.0 / self.avg_pri

    @property
    def compression_gain(self) -> float:
        return self.bandwidth * self.pulse_width

    @property
    def range_resolution(self) -> float:
        return SPEED_OF_LIGHT / (2 * self.bandwidth)

    @property
    def range_step(self) -> float:
        return SPEED_OF_LIGHT / (2 * self.sampling_freq)

    @property
    def scale(self) -> float:
        """Dimensional normalization S = sqrt(T_total / mean PRF), in seconds."""
        return float(np.sqrt(self.total_time / self.avg_prf))

    def with_pulses(self, n: int) -> "RadarParams":
        return replace(self, num_pulses=int(n))


@dataclass(frozen=True)
class TargetTruth:
    initial_range: float
    velocity: float = 0.0
    acceleration: float = 0.0
    backscatter: float = 1.0

    def check(self, params: RadarParams):
        t = np.array([0.0, params.total_time])
        # the range extremum may sit inside the CPI when v and a disagree in sign
        if self.acceleration != 0:
            t_ext = -self.velocity / self.acceleration
            if 0 < t_ext < params.total_time:
                t = np.append(t, t_ext)
        if np.any(truth_range_at(self, t) <= 0):
            raise ValueError("target range must stay positive over the CPI")


def truth_range_at(truth: TargetTruth, t):
    """Slant range R0 - v0 t - a0 t^2 / 2."""
    t = np.asarray(t, dtype=float)
    return truth.initial_range - truth.velocity * t - 0.5 * truth.acceleration * t**2


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int = 20160901

    def rng(self, stream: str, index: int = 0) -> np.random.Generator:
        """Independent generator keyed by (master_seed, stream, index)."""
        key = [int(self.master_seed) & 0xFFFFFFFFFFFFFFFF, STREAMS[stream], int(index)]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass(frozen=True, eq=False)
class RpriSchedule:
    jitter_values: np.ndarray
    jitter_amplitude: float
    slow_times: np.ndarray
    avg_pri: float

    @property
    def offsets(self) -> np.ndarray:
        # t_m = m T + r_m T, so r_m coincides with P(m)
        return self.jitter_values

    @property
    def period(self) -> int:
        return len(self.jitter_values)

    @property
    def num_pulses(self) -> int:
        return len(self.slow_times)

    @property
    def uniform_times(self) -> np.ndarray:
        return np.arange(self.num_pulses) * self.avg_pri

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.slow_times, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.jitter_values, dtype="<f8").tobytes())
        return h.hexdigest()


def make_schedule(params: RadarParams, jitter: float = 0.1, seed: SeedSpec | None = None) -> RpriSchedule:
    """Draw M i.i.d. jitter values from U(-jitter, jitter) and build t_n = [n + P(n mod M)] T.

    ``jitter`` must lie in [0, 0.5); larger values could reorder pulses.
    """
    if not 0 <= jitter < 0.5:
        raise ValueError(f"jitter amplitude must lie in [0, 0.5), got {jitter}")
    seed = seed or SeedSpec()
    m = params.jitter_period
    if jitter == 0:
        p = np.zeros(m)
    else:
        p = seed.rng("jitter").uniform(-jitter, jitter, size=m)
    n = np.arange(params.num_pulses)
    t = (n + p[n % m]) * params.avg_pri
    p.setflags(write=False)
    t.setflags(write=False)
    return RpriSchedule(p, float(jitter), t, params.avg_pri)


# --- scenario config -------------------------------------------------------

REFERENCE_TARGETS = (
    TargetTruth(50e3, 51.0, 9.0),
    TargetTruth(50.15e3, 45.0, 12.0),
)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to simulate and search one scene."""

    radar: RadarParams = field(default_factory=RadarParams)
    targets: tuple = (REFERENCE_TARGETS[0],)
    snr_db: tuple = (-23.0,)
    jitter: float = 0.1
    seed: SeedSpec = field(default_factory=SeedSpec)
    window: tuple | None = None
    r_span: tuple | None = None
    v_max: float | None = None
    a_max: float = 20.0
    noise: bool = True

    def with_pulses(self, n: int) -> "Scenario":
        return replace(self, radar=self.radar.with_pulses(n))

    @property
    def reference_snr_db(self) -> float:
        return float(self.snr_db[0]) if self.snr_db else 0.0

    def scaled_targets(self) -> list[TargetTruth]:
        """Targets with backscatter set relative to the first target's SNR."""
        ref = self.reference_snr_db
        return [
            replace(t, backscatter=t.backscatter * 10 ** ((s - ref) / 20))
            for t, s in zip(self.targets, self.snr_db)
        ]

    def search_span(self) -> tuple[float, float]:
        if self.r_span is not None:
            return tuple(map(float, self.r_span))
        r0 = [t.initial_range for t in self.targets] or [50e3]
        return min(r0) - 30.0, max(r0) + 30.0

    def velocity_limit(self) -> float:
        # unambiguous velocity of the mean PRF
        return self.v_max if self.v_max is not None else self.radar.wavelength / (4 * self.radar.avg_pri)

    def echo_window(self) -> tuple[float, float]:
        if self.window is not None:
            return tuple(map(float, self.window))
        lo, hi = self.search_span()
        t = self.radar.total_time
        walk = self.velocity_limit() * t + 0.5 * self.a_max * t**2
        margin = SPEED_OF_LIGHT * self.radar.pulse_width / 2 + 4 * self.radar.range_resolution
        return lo - walk - margin, hi + walk + margin


_RADAR_KEYS = {f.name: f.type for f in fields(RadarParams)}


def _num(text: str):
    return float(text.replace("_", ""))


def load_scenario(path) -> Scenario:
    """Read an INI-style scenario file with [radar], [target.N], [jitter], [grid], [seed] sections."""
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    return scenario_from_parser(cp)


def scenario_from_parser(cp: configparser.ConfigParser) -> Scenario:
    base = Scenario()
    radar = {}
    if cp.has_section("radar"):
        for key, val in cp.items("radar"):
            if key not in _RADAR_KEYS:
                raise ValueError(f"unknown field radar.{key}")
            try:
                radar[key] = int(_num(val)) if key in ("num_pulses", "jitter_period") else _num(val)
            except ValueError:
                raise ValueError(f"malformed value for radar.{key}: {val!r}") from None
    targets, snrs = [], []
    for sec in sorted((s for s in cp.sections() if s.startswith("target")), key=_section_order):
        items = dict(cp.items(sec))
        try:
            targets.append(
                TargetTruth(
                    _num(items.pop("initial_range")),
                    _num(items.pop("velocity", "0")),
                    _num(items.pop("acceleration", "0")),
                    _num(items.pop("backscatter", "1")),
                )
            )
            snrs.append(_num(items.pop("snr_db", "-23")))
        except KeyError as exc:
            raise ValueError(f"{sec}.{exc.args[0]} is required") from None
        except ValueError as exc:
            raise ValueError(f"malformed value in [{sec}]: {exc}") from None
        if items:
            raise ValueError(f"unknown field {sec}.{next(iter(items))}")
    kw = {}
    if radar:
        kw["radar"] = RadarParams(**{**_asdict(base.radar), **radar})
    if targets:
        kw["targets"], kw["snr_db"] = tuple(targets), tuple(snrs)
    elif cp.sections() and any(s.startswith("target") for s in cp.sections()):
        kw["targets"], kw["snr_db"] = (), ()
    if cp.has_section("jitter"):
        kw["jitter"] = _get(cp, "jitter", "amplitude", base.jitter)
    if cp.has_section("seed"):
        kw["seed"] = SeedSpec(int(_get(cp, "seed", "master_seed", base.seed.master_seed)))
    if cp.has_section("noise"):
        kw["noise"] = cp.getboolean("noise", "enabled", fallback=True)
    if cp.has_section("grid"):
        g = dict(cp.items("grid"))
        if "r_min" in g or "r_max" in g:
            kw["r_span"] = (_num(g.pop("r_min")), _num(g.pop("r_max")))
        if "window_min" in g or "window_max" in g:
            kw["window"] = (_num(g.pop("window_min")), _num(g.pop("window_max")))
        if "v_max" in g:
            kw["v_max"] = _num(g.pop("v_max"))
        if "a_max" in g:
            kw["a_max"] = _num(g.pop("a_max"))
        if g:
            raise ValueError(f"unknown field grid.{next(iter(g))}")
    return replace(base, **kw)


def _get(cp, sec, key, default):
    if not cp.has_option(sec, key):
        return default
    try:
        return _num(cp.get(sec, key))
    except ValueError:
        raise ValueError(f"malformed value for {sec}.{key}: {cp.get(sec, key)!r}") from None


def _section_order(name):
    tail = name.partition(".")[2]
    return (int(tail) if tail.isdigit() else 0, name)


def _asdict(obj):
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def scenario_to_dict(sc: Scenario) -> dict:
    """Resolved parameter dump used in run manifests."""
    return {
        "radar": _asdict(sc.radar),
        "derived": {
            "wavelength": sc.radar.wavelength,
            "chirp_rate": sc.radar.chirp_rate,
            "total_time": sc.radar.total_time,
            "avg_prf": sc.radar.avg_prf,
            "scale": sc.radar.scale,
        },
        "targets": [dict(_asdict(t), snr_db=s) for t, s in zip(sc.targets, sc.snr_db)],
        "jitter": sc.jitter,
        "seed": sc.seed.master_seed,
        "window": list(sc.echo_window()),
        "r_span": list(sc.search_span()),
        "v_max": sc.velocity_limit(),
        "a_max": sc.a_max,
        "noise": sc.noise,
    }


def write_default_config(path) -> Path:
    """Write a config populated with the default radar and both reference targets."""
    sc = Scenario(targets=REFERENCE_TARGETS, snr_db=(-20.0, -25.0))
    cp = configparser.ConfigParser()
    cp["radar"] = {k: repr(v) for k, v in _asdict(sc.radar).items()}
    for i, (t, s) in enumerate(zip(sc.targets, sc.snr_db), 1):
        cp[f"target.{i}"] = {
            "initial_range": repr(t.initial_range),
            "velocity": repr(t.velocity),
            "acceleration": repr(t.acceleration),
            "snr_db": repr(s),
        }
    cp["jitter"] = {"amplitude": repr(sc.jitter)}
    cp["seed"] = {"master_seed": str(sc.seed.master_seed)}
    cp["grid"] = {"a_max": repr(sc.a_max)}
    path = Path(path)
    with open(path, "w") as fh:
        cp.write(fh)
    return path
