"""Frequency-domain propagation of single-photon wavepacket envelopes.

The envelope is sampled on a uniform time grid and transformed with the
e^{+i omega t} analysis convention: the spectrum of a pulse delayed by tau is
the original spectrum times exp(+i omega tau).  Transfer functions built by
:mod:`crowsim.crow` follow the same convention (positive group delay =
positive spectral phase slope).

Width convention: all "1/e half width" figures refer to the *intensity*
profile |E|^2, so a width-w Gaussian envelope is E ~ exp(-t^2 / (2 w^2)) and
the RMS duration of the intensity profile is w / sqrt(2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    GridMismatchError,
    GridTooCoarseError,
    GridTooSmallError,
    MultiPeakWarning,
    ZeroEnergyError,
)
from .units import wavelength_nm_to_angular

DEFAULT_GRID = (-4096e-12, 0.5e-12, 16384)  # t0 (s), dt (s), samples


@dataclass
class PulseEnvelope:
    """Complex temporal envelope on a uniform grid starting at ``t0``.

    ``carrier_wavelength`` (nm) is metadata used only to place the envelope
    spectrum on the absolute optical frequency axis.
    """

    t0: float
    dt: float
    samples: np.ndarray
    carrier_wavelength: float | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        self.samples = np.asarray(self.samples, dtype=complex)
        n = self.samples.size
        if n == 0 or n & (n - 1) != 0:
            raise ValueError("sample count must be a power of two")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def energy(self) -> float:
        """Time-domain energy, integral of |E|^2 dt."""
        return float(np.sum(self.intensity) * self.dt)

    def centroid(self) -> float:
        """Energy-weighted mean arrival time."""
        e = self.energy()
        if e <= 0.0:
            raise ZeroEnergyError("pulse has zero energy")
        return float(np.sum(self.times * self.intensity) * self.dt / e)


def frequency_grid(pulse: PulseEnvelope) -> np.ndarray:
    """Absolute angular frequencies (rad/s) conjugate to the pulse time grid.

    FFT ordering (DC first).  With no carrier set, frequencies are baseband.
    """
    omega = 2.0 * np.pi * np.fft.fftfreq(pulse.samples.size, pulse.dt)
    if pulse.carrier_wavelength is not None:
        omega = omega + wavelength_nm_to_angular(pulse.carrier_wavelength)
    return omega


def spectrum(pulse: PulseEnvelope) -> np.ndarray:
    """Envelope spectrum (FFT order) under the e^{+i omega t} convention.

    Scaled so that sum(|A|^2) / (n dt) equals the time-domain energy
    (phases are relative to the grid origin).
    """
    n = pulse.samples.size
    return np.fft.ifft(pulse.samples) * (n * pulse.dt)


def gaussian_pulse(
    center_time: float,
    e_halfwidth: float,
    carrier_wavelength: float | None = None,
    grid: tuple[float, float, int] = DEFAULT_GRID,
    normalize: bool = True,
) -> PulseEnvelope:
    """Gaussian envelope whose intensity 1/e half width is ``e_halfwidth``.

    Raises:
        GridTooCoarseError: width not resolvable (requires > 3 samples).
        GridTooSmallError: more than 1e-6 of the energy falls off the grid.
    """
    t0, dt, n = grid
    if e_halfwidth <= 3.0 * dt:
        raise GridTooCoarseError(
            f"e_halfwidth {e_halfwidth} must exceed 3*dt = {3 * dt}"
        )
    t_end = t0 + dt * (n - 1)
    # Intensity ~ exp(-(t-c)^2 / w^2); tail fraction beyond each edge by erfc.
    clipped = 0.5 * (
        math.erfc((t_end - center_time) / e_halfwidth)
        + math.erfc((center_time - t0) / e_halfwidth)
    )
    if clipped > 1e-6:
        raise GridTooSmallError(
            f"grid clips {clipped:.2e} of the pulse energy (limit 1e-6)"
        )
    t = t0 + dt * np.arange(n)
    samples = np.exp(-((t - center_time) ** 2) / (2.0 * e_halfwidth**2)).astype(complex)
    pulse = PulseEnvelope(t0=t0, dt=dt, samples=samples, carrier_wavelength=carrier_wavelength)
    if normalize:
        pulse.samples /= math.sqrt(pulse.energy())
    return pulse


def propagate(pulse: PulseEnvelope, transfer: np.ndarray) -> PulseEnvelope:
    """Apply a transfer function sampled on the pulse's frequency grid.

    ``transfer`` must be sampled at :func:`frequency_grid` points (FFT order).
    """
    transfer = np.asarray(transfer)
    if transfer.shape != pulse.samples.shape:
        raise GridMismatchError(
            f"transfer function has {transfer.size} samples, "
            f"pulse grid has {pulse.samples.size}"
        )
    out = np.fft.fft(np.fft.ifft(pulse.samples) * transfer)
    return PulseEnvelope(
        t0=pulse.t0, dt=pulse.dt, samples=out,
        carrier_wavelength=pulse.carrier_wavelength,
    )


def measure_delay(pulse_in: PulseEnvelope, pulse_out: PulseEnvelope) -> float:
    """Difference of energy-weighted centroids (seconds)."""
    return pulse_out.centroid() - pulse_in.centroid()


def measure_e_halfwidth(pulse: PulseEnvelope) -> float:
    """Intensity 1/e half width, averaged over the two sides of the peak.

    Crossings are located by linear interpolation.  For envelopes that cross
    the 1/e level more than twice, a :class:`MultiPeakWarning` is issued and
    the width of the widest contiguous above-threshold region is reported.
    A flat-topped pulse yields its full plateau half-width since the plateau
    sits entirely above the threshold.
    """
    intensity = pulse.intensity
    peak = float(intensity.max())
    if peak <= 0.0:
        raise ZeroEnergyError("pulse has zero energy")
    level = peak / math.e
    above = intensity >= level

    # Contiguous regions above the threshold.
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    starts = [0] if above[0] else []
    starts += [int(i) + 1 for i in edges if not above[i] and above[i + 1]]
    ends = [int(i) for i in edges if above[i] and not above[i + 1]]
    if above[-1]:
        ends.append(intensity.size - 1)
    regions = list(zip(starts, ends))
    if len(regions) > 1:
        warnings.warn(
            "envelope is not unimodal; reporting the widest contiguous region",
            MultiPeakWarning,
            stacklevel=2,
        )
    lo, hi = max(regions, key=lambda r: r[1] - r[0])

    def interp_crossing(i_in, i_out):
        """Fractional index where intensity crosses the level, or None at grid edge."""
        if i_out < 0 or i_out >= intensity.size:
            return None
        y_in, y_out = intensity[i_in], intensity[i_out]
        if y_in == y_out:
            return float(i_in)
        frac = (y_in - level) / (y_in - y_out)
        return i_in + frac * (i_out - i_in)

    i_peak = lo + int(np.argmax(intensity[lo : hi + 1]))
    left = interp_crossing(lo, lo - 1)
    right = interp_crossing(hi, hi + 1)
    halves = []
    if left is not None:
        halves.append((i_peak - left) * pulse.dt)
    if right is not None:
        halves.append((right - i_peak) * pulse.dt)
    if not halves:
        raise ZeroEnergyError("envelope never falls below the 1/e level on the grid")
    return float(np.mean(halves))


def export_csv(pulse: PulseEnvelope, path, header_lines: list[str] | None = None) -> None:
    """Write the envelope as CSV with columns time_ps, re, im, intensity."""
    with open(path, "w") as f:
        for line in header_lines or []:
            f.write(f"# {line}\n")
        f.write("time_ps,re,im,intensity\n")
        for t, s, i in zip(pulse.times, pulse.samples, pulse.intensity):
            f.write(f"{float(t) * 1e12!r},{float(s.real)!r},{float(s.imag)!r},{float(i)!r}\n")
