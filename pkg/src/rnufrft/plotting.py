"""Static figures for the report path.  Uses the Agg backend; writes PNG files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_echo(echo, path, title="Range-compressed echo"):
    fig, ax = plt.subplots(figsize=(6, 4))
    r = echo.range_axis
    mag = 20 * np.log10(np.abs(echo.data) + 1e-12)
    im = ax.imshow(
        mag, aspect="auto", origin="lower", extent=(r[0] / 1e3, r[-1] / 1e3, 0, echo.num_pulses), cmap="viridis",
        vmin=mag.max() - 60,
    )
    ax.set_xlabel("range (km)")
    ax.set_ylabel("pulse")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="dB")
    return _save(fig, path)


def plot_surface(result, path):
    """Magnitude over the result's 2-D surface: (order, u) or (range, velocity)."""
    s = result.surface
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.pcolormesh(s["x"], s["y"], np.asarray(s["values"]).T, shading="nearest", cmap="viridis")
    ax.set_xlabel(s["xlabel"])
    ax.set_ylabel(s["ylabel"])
    ax.set_title(f"{result.method} peak {result.amplitude:.4g}")
    fig.colorbar(im, ax=ax, label="magnitude")
    return _save(fig, path)


def plot_comparison(results, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    names = [r.method for r in results]
    ax.bar(names, [r.amplitude for r in results], color="tab:blue")
    ax.set_ylabel("peak magnitude")
    ax.set_title("Integration output")
    return _save(fig, path)


def plot_pd(curve, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for j, m in enumerate(curve.methods):
        ax.plot(curve.snr_db, curve.pd[j], marker="o", label=m)
        ax.fill_between(curve.snr_db, curve.ci_low[j], curve.ci_high[j], alpha=0.15)
    ax.set_xlabel("input SNR (dB)")
    ax.set_ylabel("detection probability")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    return _save(fig, path)
