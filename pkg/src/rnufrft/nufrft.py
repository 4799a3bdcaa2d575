"""FRFT of periodically non-uniformly sampled signals.

Samples sit at t = k M T + m T + r_m T.  The sequence splits into M uniformly
sampled subsequences of period M T; each is transformed on its own grid with
:class:`~rnufrft.frft.ChirpZPlan` and moved to its true start time with the
shift property

    K(u, t + s) = K(u - s cos a, t) exp(j pi (s^2 sin a cos a - 2 u s sin a)).

The sum over subsequences reproduces the kernel sum at the jittered times
exactly, which :func:`nufrft_direct_oracle` checks by brute force.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .frft import (
    ChirpZPlan,
    FractionalAngle,
    FractionalSpectrum,
    amplitude,
    as_angle,
    kernel_sum,
)


@dataclass(frozen=True, eq=False)
class NufrftPlan:
    M: int
    T: float
    offsets: np.ndarray
    angle: FractionalAngle
    scale: float
    replica_count: int | None = None
    u_axis: np.ndarray | None = None

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        if offsets.shape != (self.M,):
            raise ValueError(f"need {self.M} offsets, got shape {offsets.shape}")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "angle", as_angle(self.angle))
        if self.replica_count is not None and not 1 <= self.replica_count <= self.M:
            raise ValueError("replica_count must lie in [1, M]")

    @property
    def step(self) -> float:
        """Mean sample spacing in normalized time."""
        return self.T / self.scale

    @property
    def period(self) -> float:
        """Subsequence period M T in normalized time."""
        return self.M * self.step

    def times(self, n: int) -> np.ndarray:
        idx = np.arange(n)
        return (idx + self.offsets[idx % self.M]) * self.step

    def default_u_axis(self, n: int) -> np.ndarray:
        du = 1.0 / (n * self.step)
        return (np.arange(n) - n // 2) * du

    def with_angle(self, angle) -> "NufrftPlan":
        return NufrftPlan(self.M, self.T, self.offsets, angle, self.scale, self.replica_count, self.u_axis)


class NufrftEngine:
    """Precomputed subsequence transforms for one plan and sample count.

    ``_offset_sign`` exists only so the oracle suite can inject a sign error.
    """

    def __init__(self, plan: NufrftPlan, n: int, _offset_sign: int = 1):
        if plan.angle.special is not None:
            raise ValueError("NUFRFT engine needs an angle away from multiples of pi")
        self.plan = plan
        self.n = int(n)
        M = plan.M
        self.n_padded = -(-self.n // M) * M
        K = self.n_padded // M
        u = plan.u_axis if plan.u_axis is not None else plan.default_u_axis(self.n)
        u = np.asarray(u, dtype=float)
        if len(u) > 1 and not np.allclose(np.diff(u), u[1] - u[0], rtol=1e-9, atol=0):
            raise ValueError("u axis must be uniform")
        du = u[1] - u[0] if len(u) > 1 else 1.0
        self.u_axis = u
        a = plan.angle.alpha
        sin, cos = np.sin(a), np.cos(a)
        D = plan.period
        shifts = (np.arange(M) + _offset_sign * plan.offsets) * plan.step
        pre, post = [], []
        kernel_hat = None
        for s in shifts:
            p = ChirpZPlan(a, K, 0.0, D, len(u), u[0] - s * cos, du, weight=1.0)
            pre.append(p.pre)
            shift_phase = np.exp(1j * np.pi * (s**2 * sin * cos - 2 * u * s * sin))
            post.append(p.post * shift_phase)
            kernel_hat = p.kernel_hat
            self.size = p.size
        self.pre = np.array(pre)
        self.post = np.array(post) * plan.step
        self.kernel_hat = kernel_hat

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        if x.shape[-1] != self.n:
            raise ValueError(f"plan built for {self.n} samples, got {x.shape[-1]}")
        if self.n_padded != self.n:
            pad = [(0, 0)] * (x.ndim - 1) + [(0, self.n_padded - self.n)]
            x = np.pad(x, pad)
        M = self.plan.M
        # (..., K, M) -> (..., M, K): row m holds samples m, m + M, m + 2M, ...
        sub = np.swapaxes(x.reshape(x.shape[:-1] + (-1, M)), -1, -2)
        y = sfft.fft(sub * self.pre, n=self.size, axis=-1)
        y = sfft.ifft(y * self.kernel_hat, axis=-1)[..., : len(self.u_axis)]
        return np.einsum("...ml,ml->...l", y, self.post)


def nufrft(samples, plan: NufrftPlan, _offset_sign: int = 1) -> FractionalSpectrum:
    """Fractional spectrum of samples taken on the plan's periodic non-uniform grid."""
    samples = np.asarray(samples, dtype=complex)
    if samples.ndim != 1:
        raise ValueError("nufrft takes a 1-D sample sequence")
    if len(samples) < plan.M:
        raise ValueError(f"need at least M={plan.M} samples, got {len(samples)}")
    eng = NufrftEngine(plan, len(samples), _offset_sign)
    return FractionalSpectrum(eng(samples), eng.u_axis, plan.angle, plan.scale)


def nufrft_direct_oracle(samples, times, angle, u_grid, scale=1.0, weight=None) -> FractionalSpectrum:
    """Brute-force sum_n K(u, t_n / S) x_n.

    ``times`` are physical seconds; ``weight`` defaults to the mean normalized
    spacing so the result is comparable with :func:`nufrft`.
    """
    samples = np.asarray(samples, dtype=complex)
    xi = np.asarray(times, dtype=float) / scale
    if weight is None:
        weight = (xi[-1] - xi[0]) / (len(xi) - 1) if len(xi) > 1 else 1.0
    angle = as_angle(angle)
    vals = kernel_sum(samples, xi, np.asarray(u_grid, dtype=float), angle, weight)
    return FractionalSpectrum(vals, np.asarray(u_grid, dtype=float), angle, scale)


@dataclass(frozen=True, eq=False)
class ReplicaSpectrum:
    amplitudes: np.ndarray
    indices: np.ndarray
    positions: np.ndarray
    spacing: float
    base_weights: np.ndarray

    def peak_values(self, n_samples, step, D=1.0):
        """Predicted complex transform value at each replica centre."""
        return self.base_weights * D * n_samples * step * self.amplitudes


def replica_amplitudes(plan: NufrftPlan, f0: float, indices=None) -> ReplicaSpectrum:
    """Complex amplitudes of the replicas a matched chirp produces.

    A chirp matched to the plan's angle lands at u = (f0 + k / (M T)) sin a
    (normalized units) with relative amplitude

        A(k) = (1/M) sum_m exp(-j 2 pi k r_m / M) exp(-j 2 pi m k / M).

    The jitter phase is the replica's residual frequency -k/(M T) times the
    offset r_m T; chirp-rate terms cancel exactly at the matched angle.
    """
    M = plan.M
    if indices is None:
        count = plan.replica_count or M
        indices = np.arange(count)
    k = np.asarray(indices)
    m = np.arange(M)
    ph = np.exp(-2j * np.pi * np.outer(k, m + plan.offsets) / M)
    A = ph.mean(axis=1)
    a = plan.angle.alpha
    spacing = np.sin(a) / plan.period
    positions = (f0 + k / plan.period) * np.sin(a)
    base = amplitude(a) * np.exp(1j * np.pi * positions**2 / np.tan(a))
    return ReplicaSpectrum(A, k, positions, float(spacing), base)
