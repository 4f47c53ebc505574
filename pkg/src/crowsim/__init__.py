"""Desk-scale simulator of a thermally tunable slow-light single-photon buffer.

Subpackages cover the coupled-cavity dispersion model (:mod:`crowsim.crow`),
wavepacket propagation (:mod:`crowsim.pulses`), the photon-pair source
(:mod:`crowsim.source`), time-bin entanglement (:mod:`crowsim.timebin`),
detection and coincidence counting (:mod:`crowsim.detectors`), statistical
extraction (:mod:`crowsim.analysis`), and scan orchestration
(:mod:`crowsim.pipeline` / :mod:`crowsim.runner` / :mod:`crowsim.cli`).
"""

from .crow import (
    CalibrationResult,
    CrowParams,
    ReferenceWaveguideParams,
    band_center_at_temperature,
    bloch_wavenumber,
    buffer_delay,
    calibrate,
    group_delay,
    group_index,
    reference_transfer_function,
    transfer_function,
)
from .detectors import CoincidenceHistogram, DetectorParams, accumulate, detect
from .analysis import (
    BellCheck,
    FringeFit,
    G2Result,
    PeakFit,
    bell_violated,
    compute_g2,
    convolved_width,
    deconvolve_width,
    fit_fringe,
    fit_gaussian_peak,
)
from .pulses import (
    PulseEnvelope,
    frequency_grid,
    gaussian_pulse,
    measure_delay,
    measure_e_halfwidth,
    propagate,
    spectrum,
)
from .source import (
    PulseOutcome,
    SourceParams,
    analytic_g2,
    buffer_preset,
    calibrate_noise,
    entangle_preset,
    sample_pulse,
    zero_noise_g2,
)
from .timebin import (
    FringeDataset,
    InterferometerParams,
    TimeBinState,
    apply_mzi,
    coincidence_probability,
    ideal_visibility,
    simulate_fringe_scan,
)

__version__ = "0.1.0"

__all__ = [
    "BellCheck",
    "CalibrationResult",
    "CoincidenceHistogram",
    "CrowParams",
    "DetectorParams",
    "FringeDataset",
    "FringeFit",
    "G2Result",
    "InterferometerParams",
    "PeakFit",
    "PulseEnvelope",
    "PulseOutcome",
    "ReferenceWaveguideParams",
    "SourceParams",
    "TimeBinState",
    "accumulate",
    "analytic_g2",
    "apply_mzi",
    "band_center_at_temperature",
    "bell_violated",
    "bloch_wavenumber",
    "buffer_delay",
    "buffer_preset",
    "calibrate",
    "calibrate_noise",
    "coincidence_probability",
    "compute_g2",
    "convolved_width",
    "deconvolve_width",
    "detect",
    "entangle_preset",
    "fit_fringe",
    "fit_gaussian_peak",
    "frequency_grid",
    "gaussian_pulse",
    "group_delay",
    "group_index",
    "ideal_visibility",
    "measure_delay",
    "measure_e_halfwidth",
    "propagate",
    "reference_transfer_function",
    "sample_pulse",
    "simulate_fringe_scan",
    "spectrum",
    "transfer_function",
    "zero_noise_g2",
]
