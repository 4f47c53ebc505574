"""End-to-end Monte Carlo of the buffering experiment.

Pump pulses at the source repetition rate produce correlated pairs plus
noise; the signal photon traverses the chip (slow-light or reference arm,
adding a group delay and an arrival-time spread), both photons hit jittery
lossy detectors, and a time-interval analyser histograms start-stop delays.

The idler channel provides the START and the chip (signal) channel the STOP,
so the buffered arm's main peak appears at a positive relative delay and the
fitted peak separation equals the extra slow-light delay.

Determinism and parallelism: pulses are partitioned into fixed-size chunks,
each drawing from an independent child seed of the run seed.  Chunks are
simulated as disjoint segments of the experiment and merged in index order,
so the result is byte-identical for any worker count.  Starts too close to a
segment edge to see a full coincidence window are discarded (a few per
million) so every counted start has unbiased side-peak coverage.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .detectors import CoincidenceHistogram, DetectorParams, accumulate
from .source import SourceParams, _sample_pair_counts

DEFAULT_BIN_WIDTH = 5e-12     # s
DEFAULT_WINDOW = 60e-9        # s, covers +-3 repetition periods at 53.65 MHz
DEFAULT_CHUNK_PULSES = 1 << 20


@dataclass(frozen=True)
class ArmTiming:
    """Arrival-time model of one histogram run.

    ``signal_delay`` is the absolute chip traversal time; the widths are
    intensity 1/e half widths of the photon wavepackets (the corresponding
    Gaussian sigma is width / sqrt(2)).
    """

    signal_delay: float            # s
    signal_e_halfwidth: float      # s
    idler_e_halfwidth: float       # s

    @property
    def signal_sigma(self) -> float:
        return self.signal_e_halfwidth / math.sqrt(2.0)

    @property
    def idler_sigma(self) -> float:
        return self.idler_e_halfwidth / math.sqrt(2.0)


def expected_start_probability(source: SourceParams, idler: DetectorParams) -> float:
    """Per-pulse probability of an idler (start-channel) detection.

    Exact for the thermal pair law; used only to size the pulse count for a
    requested number of start signals.
    """
    mu, nu = source.mean_pair, source.mean_noise_idler
    eta = idler.efficiency
    if source.pair_statistics == "thermal":
        p_none = math.exp(-eta * nu) / (1.0 + eta * mu)
    else:
        p_none = math.exp(-eta * (nu + mu))
    p_dark = source.repetition_period * idler.dark_rate
    return 1.0 - p_none * (1.0 - min(p_dark, 1.0))


def pulses_for_starts(starts: int, source: SourceParams, idler: DetectorParams) -> int:
    p = expected_start_probability(source, idler)
    if p <= 0.0:
        raise ValueError("start probability is zero; no detections possible")
    return max(1, math.ceil(starts / p))


def _photon_times(
    pulse_indices: np.ndarray,
    rep_period: float,
    offset: float,
    sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    times = pulse_indices * rep_period + offset
    if sigma > 0.0 and times.size:
        times = times + rng.normal(0.0, sigma, size=times.size)
    return times


def _simulate_chunk(
    n_pulses: int,
    source: SourceParams,
    timing: ArmTiming,
    signal_detector: DetectorParams,
    idler_detector: DetectorParams,
    window: float,
    bin_width: float,
    seed: np.random.SeedSequence,
) -> CoincidenceHistogram:
    """One independent experiment segment of ``n_pulses`` pump pulses."""
    rng = np.random.default_rng(seed)
    rep = source.repetition_period

    pairs = _sample_pair_counts(source, n_pulses, rng)

    # Detected counts per pulse: Bernoulli thinning of pair photons keeps the
    # signal/idler correlation through the shared pair number (thinned only
    # where pairs exist); thinned Poisson noise is drawn directly as
    # Poisson(mean * efficiency).
    occupied = np.flatnonzero(pairs)
    det_pair_s = np.zeros(n_pulses, dtype=np.int64)
    det_pair_i = np.zeros(n_pulses, dtype=np.int64)
    if occupied.size:
        det_pair_s[occupied] = rng.binomial(pairs[occupied], signal_detector.efficiency)
        det_pair_i[occupied] = rng.binomial(pairs[occupied], idler_detector.efficiency)
    det_noise_s = rng.poisson(
        source.mean_noise_signal * signal_detector.efficiency, size=n_pulses
    )
    det_noise_i = rng.poisson(
        source.mean_noise_idler * idler_detector.efficiency, size=n_pulses
    )

    pulse_ids = np.arange(n_pulses)
    sig_counts = det_pair_s + det_noise_s
    idl_counts = det_pair_i + det_noise_i

    stop_pulse = np.repeat(pulse_ids, sig_counts)
    start_pulse = np.repeat(pulse_ids, idl_counts)

    # Arrival spread + detector jitter add in quadrature per photon.
    sig_sigma = math.hypot(timing.signal_sigma, signal_detector.jitter_sigma)
    idl_sigma = math.hypot(timing.idler_sigma, idler_detector.jitter_sigma)
    stops = _photon_times(stop_pulse, rep, timing.signal_delay, sig_sigma, rng)
    starts = _photon_times(start_pulse, rep, 0.0, idl_sigma, rng)

    span = n_pulses * rep
    if signal_detector.dark_rate > 0.0:
        n_dark = rng.poisson(signal_detector.dark_rate * span)
        stops = np.concatenate([stops, rng.uniform(0.0, span, size=n_dark)])
    if idler_detector.dark_rate > 0.0:
        n_dark = rng.poisson(idler_detector.dark_rate * span)
        dark_starts = rng.uniform(0.0, span, size=n_dark)
        starts = np.concatenate([starts, dark_starts])

    # Segment-interior starts only: each counted start sees a full +-window.
    pad = window + 4.0 * (sig_sigma + abs(timing.signal_delay))
    starts = starts[(starts >= pad) & (starts <= span - pad)]

    starts.sort()
    stops.sort()
    return accumulate(starts, stops, window=window, bin_width=bin_width)


def simulate_buffer_histogram(
    source: SourceParams,
    timing: ArmTiming,
    signal_detector: DetectorParams,
    idler_detector: DetectorParams,
    starts: int,
    seed: int,
    window: float = DEFAULT_WINDOW,
    bin_width: float = DEFAULT_BIN_WIDTH,
    chunk_pulses: int = DEFAULT_CHUNK_PULSES,
    workers: int = 1,
) -> CoincidenceHistogram:
    """Coincidence histogram for one arm, sized for ``starts`` start signals.

    The pulse count is fixed analytically from the expected start rate, so
    identical (parameters, seed) give identical output for any ``workers``.
    """
    n_pulses = pulses_for_starts(starts, source, idler_detector)
    n_chunks = -(-n_pulses // chunk_pulses)
    sizes = [min(chunk_pulses, n_pulses - i * chunk_pulses) for i in range(n_chunks)]
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)

    def run(i):
        return _simulate_chunk(
            sizes[i], source, timing, signal_detector, idler_detector,
            window, bin_width, seeds[i],
        )

    if workers <= 1:
        results = [run(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(n_chunks)))

    merged = results[0]
    for hist in results[1:]:
        merged = merged.add(hist)
    return merged
