"""Superconducting single-photon detector and coincidence-counting model.

Detection is Bernoulli thinning at the quantum efficiency; detected events
get Gaussian timing jitter whose intensity-profile 1/e half width is the
quoted jitter figure (Gaussian sigma = jitter / sqrt(2), the convention under
which jitter adds in quadrature with photon widths in histogram peaks).
Dark counts fire independently at ``dark_rate`` uniformly in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import UnsortedInputError


@dataclass(frozen=True)
class DetectorParams:
    efficiency: float = 0.14           # detection probability per photon
    dark_rate: float = 10.0            # counts per second
    jitter_e_halfwidth: float = 30e-12  # intensity 1/e half width, seconds

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must be within [0, 1]")
        if self.dark_rate < 0:
            raise ValueError("dark_rate must be non-negative")
        if self.jitter_e_halfwidth < 0:
            raise ValueError("jitter_e_halfwidth must be non-negative")

    @property
    def jitter_sigma(self) -> float:
        """Gaussian standard deviation of the timing error."""
        return self.jitter_e_halfwidth / math.sqrt(2.0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorParams":
        return cls(**data)


def detect(
    arrival_time: float | None,
    params: DetectorParams,
    slot_duration: float,
    rng: np.random.Generator,
) -> float | None:
    """Detection time of a photon (or dark count) within one time slot.

    The photon, if present, is detected with probability ``efficiency`` at
    its arrival time plus jitter.  Independently a dark count may fire at a
    uniform time within the slot.  If both occur the earlier one is returned
    (no dead time is modeled).
    """
    events = []
    if arrival_time is not None and rng.random() < params.efficiency:
        events.append(arrival_time + rng.normal(0.0, params.jitter_sigma))
    if params.dark_rate > 0.0 and rng.random() < params.dark_rate * slot_duration:
        base = arrival_time if arrival_time is not None else 0.0
        events.append(base + rng.uniform(0.0, slot_duration))
    return min(events) if events else None


def detect_times(
    arrival_times: np.ndarray,
    params: DetectorParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized thinning + jitter for a batch of photon arrival times.

    Same law as :func:`detect` for the photon part; dark counts are handled
    separately by :func:`dark_times` in bulk simulations.
    """
    arrivals = np.asarray(arrival_times, dtype=float)
    kept = arrivals[rng.random(arrivals.size) < params.efficiency]
    if params.jitter_sigma > 0.0 and kept.size:
        kept = kept + rng.normal(0.0, params.jitter_sigma, size=kept.size)
    return kept


def dark_times(
    params: DetectorParams,
    span: float,
    rng: np.random.Generator,
    t_start: float = 0.0,
) -> np.ndarray:
    """Dark-count times over an observation span (Poisson process)."""
    if params.dark_rate <= 0.0 or span <= 0.0:
        return np.empty(0)
    n = rng.poisson(params.dark_rate * span)
    return t_start + rng.uniform(0.0, span, size=n)


@dataclass
class CoincidenceHistogram:
    """Binned start-stop relative delays plus the number of start signals.

    Bin i covers [origin + i*bin_width, origin + (i+1)*bin_width).
    """

    bin_width: float
    origin: float
    counts: np.ndarray
    total_starts: int

    def __post_init__(self):
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        if self.total_starts < 0:
            raise ValueError("total_starts must be non-negative")

    @property
    def bin_centers(self) -> np.ndarray:
        return self.origin + self.bin_width * (np.arange(self.counts.size) + 0.5)

    def add(self, other: "CoincidenceHistogram") -> "CoincidenceHistogram":
        """Bin-wise merge of two compatible histograms."""
        if (
            other.counts.size != self.counts.size
            or other.bin_width != self.bin_width
            or other.origin != self.origin
        ):
            raise ValueError("histograms have incompatible binning")
        return CoincidenceHistogram(
            bin_width=self.bin_width,
            origin=self.origin,
            counts=self.counts + other.counts,
            total_starts=self.total_starts + other.total_starts,
        )

    def to_csv(self, path, header_lines: list[str] | None = None) -> None:
        with open(path, "w") as f:
            for line in header_lines or []:
                f.write(f"# {line}\n")
            f.write(f"# total_starts={self.total_starts}\n")
            f.write(f"# bin_width_ps={self.bin_width * 1e12!r}\n")
            f.write("bin_center_ps,counts\n")
            for center, count in zip(self.bin_centers, self.counts):
                f.write(f"{float(center) * 1e12!r},{int(count)}\n")

    @classmethod
    def from_csv(cls, path) -> "CoincidenceHistogram":
        total_starts = 0
        bin_width_ps = None
        centers, counts = [], []
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if body.startswith("total_starts="):
                        total_starts = int(body.split("=", 1)[1])
                    elif body.startswith("bin_width_ps="):
                        bin_width_ps = float(body.split("=", 1)[1])
                    continue
                if line.startswith("bin_center_ps"):
                    continue
                c, n = line.split(",")
                centers.append(float(c))
                counts.append(int(n))
        if bin_width_ps is None:
            if len(centers) < 2:
                raise ValueError("histogram CSV lacks bin width information")
            bin_width_ps = centers[1] - centers[0]
        bin_width = bin_width_ps * 1e-12
        origin = centers[0] * 1e-12 - 0.5 * bin_width
        return cls(
            bin_width=bin_width,
            origin=origin,
            counts=np.asarray(counts, dtype=np.int64),
            total_starts=total_starts,
        )


def accumulate(
    start_times: np.ndarray,
    stop_times: np.ndarray,
    window: float,
    bin_width: float,
) -> CoincidenceHistogram:
    """Start-stop coincidence histogram of (stop - start) delays.

    Every stop within +-window of a start contributes one count;
    ``total_starts`` counts every start signal regardless of stops.
    Input arrays must be sorted ascending.
    """
    starts = np.asarray(start_times, dtype=float)
    stops = np.asarray(stop_times, dtype=float)
    for name, arr in (("start", starts), ("stop", stops)):
        if arr.size > 1 and np.any(np.diff(arr) < 0.0):
            raise UnsortedInputError(f"{name} times must be sorted ascending")

    n_bins = int(round(2.0 * window / bin_width))
    origin = -window
    counts = np.zeros(n_bins, dtype=np.int64)
    if starts.size and stops.size:
        lo = np.searchsorted(stops, starts - window, side="left")
        hi = np.searchsorted(stops, starts + window, side="right")
        n_per_start = hi - lo
        total = int(n_per_start.sum())
        if total:
            # Expand each start's [lo, hi) stop range without a Python loop.
            offsets = np.arange(total) - np.repeat(
                np.cumsum(n_per_start) - n_per_start, n_per_start
            )
            take = np.repeat(lo, n_per_start) + offsets
            delays = stops[take] - np.repeat(starts, n_per_start)
            bins = np.floor((delays - origin) / bin_width).astype(np.int64)
            valid = (bins >= 0) & (bins < n_bins)
            np.add.at(counts, bins[valid], 1)
    return CoincidenceHistogram(
        bin_width=bin_width, origin=origin, counts=counts, total_starts=int(starts.size)
    )
