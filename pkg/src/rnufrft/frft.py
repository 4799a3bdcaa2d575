"""Discrete fractional Fourier transform of uniformly sampled signals.

Coordinates are dimensionless.  Internally the transform is written with the
"pi" kernel

    K(u, t) = sqrt(1 - j cot a) exp(j pi (t^2 cot a - 2 u t csc a + u^2 cot a))

which is the radian kernel of :func:`frft_kernel` evaluated at sqrt(2 pi)
scaled arguments, times sqrt(2 pi).  A chirp exp(j 2 pi (f0 t + m0 t^2 / 2))
is matched when cot a = -m0 and then peaks at u = f0 sin a.

The discrete transform is the Riemann sum ``dt * sum_k K(u, t_k) x_k``
evaluated on a uniform u grid with a chirp-z (Bluestein) factorisation, so the
fast path agrees with direct summation to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

# sqrt(2 pi): radian coordinate = RADIAN * normalized coordinate
RADIAN = float(np.sqrt(2 * np.pi))
SPECIAL_ANGLE_TOL = 1e-6


@dataclass(frozen=True)
class FractionalAngle:
    order: float

    @property
    def alpha(self) -> float:
        return self.order * np.pi / 2

    @classmethod
    def from_alpha(cls, alpha: float) -> "FractionalAngle":
        return cls(2 * float(alpha) / np.pi)

    @property
    def special(self) -> int | None:
        """0 for identity, 1 for reflection, None for the general kernel."""
        k = self.alpha / np.pi
        if abs(k - round(k)) < SPECIAL_ANGLE_TOL / np.pi:
            return int(round(k)) % 2
        return None


def as_angle(angle) -> FractionalAngle:
    if isinstance(angle, FractionalAngle):
        return angle
    return FractionalAngle.from_alpha(angle)


@dataclass(frozen=True, eq=False)
class FractionalSpectrum:
    values: np.ndarray
    u_axis: np.ndarray
    angle: FractionalAngle
    scale: float = 1.0

    def peak(self):
        i = int(np.argmax(np.abs(self.values)))
        return self.u_axis[i], self.values[i]


def amplitude(alpha: float) -> complex:
    """sqrt(1 - j cot a), the normalisation of the pi kernel."""
    return np.sqrt(1 - 1j / np.tan(alpha))


def frft_kernel(u, t, angle):
    """A_a exp(j t^2 cot a / 2 - j u t csc a + j u^2 cot a / 2), A_a = sqrt((1 - j cot a) / 2 pi).

    Radian coordinates.  Undefined at a = k pi.
    """
    a = as_angle(angle).alpha
    if as_angle(angle).special is not None:
        raise ValueError("kernel is a delta at multiples of pi")
    cot, csc = 1 / np.tan(a), 1 / np.sin(a)
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)
    amp = np.sqrt((1 - 1j * cot) / (2 * np.pi))
    return amp * np.exp(1j * (0.5 * t**2 * cot - u * t * csc + 0.5 * u**2 * cot))


def kernel_sum(x, t, u, angle, weight=1.0):
    """Brute-force weight * sum_k K(u, t_k) x_k in normalized coordinates.

    O(len(t) * len(u)); the reference every fast path is tested against.
    """
    x = np.asarray(x, dtype=complex)
    k = frft_kernel(RADIAN * np.asarray(u)[:, None], RADIAN * np.asarray(t)[None, :], angle)
    return weight * RADIAN * (k @ x)


class ChirpZPlan:
    """Precomputed chirp-z evaluation of the pi-kernel sum between two uniform grids.

    Input samples sit at t_k = t0 + k dt (k < n_in); output at u_l = u0 + l du
    (l < n_out).  Calling the plan on an array transforms its last axis.
    """

    def __init__(self, alpha, n_in, t0, dt, n_out, u0, du, weight=None):
        if as_angle(alpha).special is not None:
            raise ValueError("chirp-z plan needs an angle away from multiples of pi")
        alpha = as_angle(alpha).alpha
        cot, csc = 1 / np.tan(alpha), 1 / np.sin(alpha)
        self.n_in, self.n_out = int(n_in), int(n_out)
        self.alpha = alpha
        k = np.arange(self.n_in)
        ell = np.arange(self.n_out)
        t = t0 + k * dt
        u = u0 + ell * du
        beta = du * dt * csc
        self.size = sfft.next_fast_len(self.n_in + self.n_out - 1)
        # pre-chirp: signal chirp, linear term from the u-grid offset, half of the lk split
        self.pre = np.exp(1j * np.pi * (t**2 * cot - 2 * csc * u0 * dt * k - beta * k**2))
        m = np.arange(-(self.n_in - 1), self.n_out)
        w = np.zeros(self.size, dtype=complex)
        w[m % self.size] = np.exp(1j * np.pi * beta * m.astype(float) ** 2)
        self.kernel_hat = sfft.fft(w)
        weight = dt if weight is None else weight
        self.post = (
            weight
            * amplitude(alpha)
            * np.exp(1j * np.pi * (u**2 * cot - 2 * csc * (u0 * t0 + t0 * du * ell) - beta * ell**2))
        )
        self.u_axis = u

    def __call__(self, x):
        x = np.asarray(x)
        if x.shape[-1] != self.n_in:
            raise ValueError(f"expected {self.n_in} samples, got {x.shape[-1]}")
        y = sfft.fft(x * self.pre, n=self.size, axis=-1)
        y = sfft.ifft(y * self.kernel_hat, axis=-1)[..., : self.n_out]
        return y * self.post


def chirp_z_frft(x, alpha, t0, dt, u0, du, n_out=None, weight=None):
    """One-shot evaluation of dt * sum_k K(u_l, t0 + k dt) x_k."""
    x = np.asarray(x)
    n_out = x.shape[-1] if n_out is None else n_out
    return ChirpZPlan(alpha, x.shape[-1], t0, dt, n_out, u0, du, weight)(x)


def centered_grid(n, oversample=1):
    """Sample grid (k - n/2)/sqrt(n) and the matching u grid."""
    dt = 1 / np.sqrt(n)
    t = (np.arange(n) - n / 2) * dt
    m = n * oversample
    du = dt / oversample
    u = (np.arange(m) - m / 2) * du
    return t, u


def frft_uniform(x, angle, oversample: int = 1) -> FractionalSpectrum:
    """FRFT of samples on the centered grid (k - L/2)/sqrt(L).

    At a = pi/2 this is the unitary centered DFT; multiples of pi dispatch to
    the identity and the reflection.
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if n < 2:
        raise ValueError("need at least two samples")
    angle = as_angle(angle)
    t, u = centered_grid(n, oversample)
    special = angle.special
    if special is not None:
        if oversample != 1:
            raise ValueError("oversampling is undefined at multiples of pi")
        vals = x.copy() if special == 0 else np.roll(x[..., ::-1], 1, axis=-1)
        return FractionalSpectrum(vals, u, angle)
    vals = chirp_z_frft(x, angle.alpha, t[0], t[1] - t[0], u[0], u[1] - u[0], len(u))
    return FractionalSpectrum(vals, u, angle)


def centered_dft(x):
    """Unitary DFT with both axes centered at index n/2."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    return sfft.fftshift(sfft.fft(sfft.ifftshift(x, axes=-1), axis=-1), axes=-1) / np.sqrt(n)


@dataclass(frozen=True)
class ChirpPeak:
    u: float
    weight: complex

    def discrete_peak(self, n_samples, dt):
        """Peak value of the Riemann-sum transform when u lies on the grid."""
        return self.weight * n_samples * dt


def chirp_frft_closed_form(D, f0, m0, angle, tol=1e-9) -> ChirpPeak:
    """Location and weight of the delta produced by a matched chirp.

    The chirp D exp(j 2 pi (f0 t + m0 t^2 / 2)) transforms to
    weight * delta(f0 - u csc a) with weight = D sqrt(1 - j cot a) exp(j pi u^2 cot a).
    """
    a = as_angle(angle).alpha
    if as_angle(angle).special is not None:
        raise ValueError("closed form needs a away from multiples of pi")
    cot = 1 / np.tan(a)
    if abs(cot + m0) > tol * max(1.0, abs(m0)):
        raise ValueError(f"angle not matched to chirp rate: cot a + m0 = {cot + m0:.3g}")
    u = f0 * np.sin(a)
    return ChirpPeak(float(u), complex(D * amplitude(a) * np.exp(1j * np.pi * u**2 * cot)))


def matched_angle(m0) -> FractionalAngle:
    """Angle in (0, pi) whose kernel cancels chirp rate m0."""
    return FractionalAngle.from_alpha(np.pi / 2 + np.arctan(m0))
