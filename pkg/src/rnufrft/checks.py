"""Oracle equivalence suite: fast transforms against brute-force kernel sums."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frft import ChirpZPlan, centered_grid, frft_uniform, kernel_sum
from .nufrft import NufrftPlan, nufrft, nufrft_direct_oracle, replica_amplitudes


@dataclass
class CheckResult:
    name: str
    worst: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.worst < self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: worst {self.worst:.3e} (tol {self.tolerance:.0e}) {self.detail}".rstrip()


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def check_frft(n_inputs=100, sizes=(64, 128, 256), seed=0, tol=1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for i in range(n_inputs):
        n = sizes[i % len(sizes)]
        alpha = rng.uniform(0.3, np.pi - 0.3)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        t, u = centered_grid(n)
        fast = frft_uniform(x, alpha).values
        ref = kernel_sum(x, t, u, alpha, t[1] - t[0])
        err = _rel(fast, ref)
        if err > worst:
            worst, where = err, f"at L={n}, alpha={alpha:.4f}"
    return CheckResult("frft-vs-kernel-sum", worst, tol, where)


def _jitter_plan(rng, M, eps, alpha, T=1.0, scale=None):
    offsets = rng.uniform(-eps, eps, M) if eps > 0 else np.zeros(M)
    return NufrftPlan(M, T, offsets, alpha, scale if scale is not None else np.sqrt(64.0))


def check_nufrft(
    periods=(2, 4, 8, 16), sizes=(64, 250, 1024), jitters=(0.05, 0.3), seed=1, tol=1e-6, _offset_sign=1
) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for M in periods:
        for n in sizes:
            for eps in jitters:
                alpha = rng.uniform(0.3, np.pi - 0.3)
                plan = _jitter_plan(rng, M, eps, alpha, scale=np.sqrt(n))
                x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                fast = nufrft(x, plan, _offset_sign)
                times = plan.times(n) * plan.scale
                ref = nufrft_direct_oracle(x, times, alpha, fast.u_axis, plan.scale, plan.step)
                err = _rel(fast.values, ref.values)
                if err > worst:
                    worst, where = err, f"at M={M}, N={n}, eps={eps}, alpha={alpha:.4f}"
    return CheckResult("nufrft-vs-oracle", worst, tol, where)


def check_zero_jitter(periods=(2, 8), sizes=(64, 256), seed=2, tol=1e-9) -> CheckResult:
    """Zero offsets reduce the NUFRFT to the uniform-grid transform."""
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for M in periods:
        for n in sizes:
            alpha = rng.uniform(0.3, np.pi - 0.3)
            plan = NufrftPlan(M, 1.0, np.zeros(M), alpha, np.sqrt(n))
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            fast = nufrft(x, plan)
            u = fast.u_axis
            uni = ChirpZPlan(alpha, n, 0.0, plan.step, n, u[0], u[1] - u[0], weight=plan.step)(x)
            err = _rel(fast.values, uni)
            if err > worst:
                worst, where = err, f"at M={M}, N={n}"
    return CheckResult("nufrft-zero-jitter-vs-frft", worst, tol, where)


def check_replicas(M=8, n=512, eps=0.3, f0=1.3, m0=-0.7, seed=3, tol=1e-3) -> CheckResult:
    """Replica positions and relative amplitudes of a matched chirp."""
    rng = np.random.default_rng(seed)
    alpha = np.pi / 2 + np.arctan(m0)
    plan = _jitter_plan(rng, M, eps, alpha, scale=np.sqrt(n))
    xi = plan.times(n)
    x = np.exp(2j * np.pi * (f0 * xi + 0.5 * m0 * xi**2))
    rep = replica_amplitudes(plan, f0)
    direct = nufrft_direct_oracle(x, xi * plan.scale, alpha, rep.positions, plan.scale, plan.step).values
    rel = np.abs(direct) / abs(direct[0])
    amp_err = float(np.max(np.abs(rel - np.abs(rep.amplitudes) / abs(rep.amplitudes[0]))))
    # peak positions: local maximum of a fine scan around each predicted replica,
    # in units of the replica spacing (neighbouring sidelobes pull peaks slightly)
    pos_err = 0.0
    du = 1e-3 / (n * plan.step)
    for k, u0 in enumerate(rep.positions):
        if abs(rep.amplitudes[k]) < 1e-2:
            continue
        scan = u0 + du * np.arange(-200, 201)
        vals = np.abs(nufrft_direct_oracle(x, xi * plan.scale, alpha, scan, plan.scale, plan.step).values)
        pos_err = max(pos_err, abs(scan[int(np.argmax(vals))] - u0) / rep.spacing)
    worst = max(amp_err, pos_err)
    return CheckResult("replica-law", worst, tol, f"(amplitude {amp_err:.1e}, position {pos_err:.1e} spacings)")


def run_all(quick: bool = False, _offset_sign: int = 1) -> list[CheckResult]:
    n = 30 if quick else 100
    return [
        check_frft(n_inputs=n),
        check_nufrft(_offset_sign=_offset_sign),
        check_zero_jitter(),
        check_replicas(),
    ]
