"""Figure rendering for scan reports.

Every plot is written straight to file (Agg backend, no display) next to the
delimited data it illustrates.  PNG metadata is stripped of timestamps so
repeated runs stay byte-comparable.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import FringeFit, PeakFit, _fringe_model, _gaussian_peak_model
from .detectors import CoincidenceHistogram
from .timebin import FringeDataset

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": "crowsim", "Date": None}}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_histogram_fit(
    hist: CoincidenceHistogram,
    fit: PeakFit | None,
    path,
    window: tuple[float, float] | None = None,
    title: str = "",
) -> None:
    """Counts versus relative delay with the fitted Gaussian overlaid."""
    centers_ps = hist.bin_centers * 1e12
    fig, ax = plt.subplots(figsize=(7, 4))
    if window is not None:
        mask = (hist.bin_centers >= window[0]) & (hist.bin_centers <= window[1])
    else:
        mask = np.ones(centers_ps.size, dtype=bool)
    ax.plot(centers_ps[mask], hist.counts[mask], ".", ms=3, label="counts")
    if fit is not None:
        t = np.linspace(hist.bin_centers[mask].min(), hist.bin_centers[mask].max(), 400)
        params = [fit.background, fit.amplitude, fit.center, fit.e_halfwidth]
        ax.plot(t * 1e12, _gaussian_peak_model(t, params), "-", label="Gaussian fit")
    ax.set_xlabel("relative delay (ps)")
    ax.set_ylabel("coincidence counts")
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_main_peaks(
    arms: dict[str, tuple[CoincidenceHistogram, PeakFit]],
    path,
    half_span: float = 250e-12,
    title: str = "",
) -> None:
    """Overlay the main peaks of several arms (slow-light vs reference)."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, (hist, fit) in arms.items():
        mask = np.abs(hist.bin_centers - fit.center) <= half_span
        ax.plot(hist.bin_centers[mask] * 1e12, hist.counts[mask], ".", ms=3, label=label)
        t = np.linspace(fit.center - half_span, fit.center + half_span, 400)
        params = [fit.background, fit.amplitude, fit.center, fit.e_halfwidth]
        ax.plot(t * 1e12, _gaussian_peak_model(t, params), "-", lw=1)
    ax.set_xlabel("relative delay (ps)")
    ax.set_ylabel("coincidence counts")
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_delay_curve(rows: list[dict], path) -> None:
    """Buffer delay versus chip temperature with fit errors."""
    temps = [r["temp_C"] for r in rows]
    delays = [r["delay_ps"] for r in rows]
    errs = [r["delay_err_ps"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(temps, delays, yerr=errs, fmt="o-", capsize=3)
    ax.set_xlabel("chip temperature (°C)")
    ax.set_ylabel("buffer delay (ps)")
    _save(fig, path)


def plot_fringes(scans: list[tuple[FringeDataset, FringeFit]], path) -> None:
    """Coincidence fringes for one or more idler settings with fitted curves."""
    fig, ax = plt.subplots(figsize=(7, 4))
    markers = ["s", "o", "^", "v"]
    for i, (data, fit) in enumerate(scans):
        x = np.asarray(data.setting_temps_c)
        err = np.sqrt(np.maximum(data.coincidences, 1))
        label = f"idler {data.idler_temperature_c:g} °C (V = {fit.visibility:.2f})"
        ax.errorbar(
            x, data.coincidences, yerr=err,
            fmt=markers[i % len(markers)], ms=4, ls="none", label=label,
        )
        t = np.linspace(x.min(), x.max(), 400)
        params = [fit.mean_level, fit.visibility,
                  2 * np.pi / fit.period_in_setting_units, fit.phase_offset]
        ax.plot(t, _fringe_model(t, params), "-", lw=1)
    ax.set_xlabel("signal interferometer temperature (°C)")
    ax.set_ylabel("coincidences")
    ax.legend()
    _save(fig, path)
