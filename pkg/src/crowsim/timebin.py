"""High-dimensional time-bin entanglement and two-photon interference fringes.

The source emits a pair in a uniform superposition over M time slots,
(1/sqrt(M)) sum_k |k>_s |k>_i.  Each photon then passes a delayed
Mach-Zehnder interferometer whose arm imbalance equals an integer number s of
slots, mapping |k> -> (|k> + e^{i phi} |k+s>) / 2 (the 1/2 accounts for the
unused output port).  Same-slot coincidences interfere: an interior slot j is
reached by the short-short path of emission j and the long-long path of
emission j-s, so the coincidence rate follows 1 + V cos(phi_s + phi_i).  The
2s boundary slots carry only one path each and add a flat background, giving
the pure state a visibility of exactly (M - s) / M.

Multi-pair emission and noise photons add phase-independent same-slot
accidentals which dilute the visibility; the closed form is derived in
:func:`ideal_visibility`.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .detectors import DetectorParams
from .errors import InvalidVisibilityError, NonIntegerShiftError
from .source import SourceParams, _pair_second_moment


@dataclass(frozen=True)
class TimeBinState:
    """Uniform M-slot two-photon state; amplitude 1/sqrt(M) on each |k>|k>."""

    slot_count: int = 20000
    slot_interval: float = 0.5e-9  # seconds

    def __post_init__(self):
        if self.slot_count < 2:
            raise ValueError("slot_count must be at least 2")
        if self.slot_interval <= 0:
            raise ValueError("slot_interval must be positive")

    @property
    def amplitude(self) -> float:
        return 1.0 / np.sqrt(self.slot_count)

    def diagonal_amplitudes(self) -> np.ndarray:
        return np.full(self.slot_count, self.amplitude, dtype=complex)


@dataclass(frozen=True)
class InterferometerParams:
    """Delayed Mach-Zehnder interferometer for one arm.

    The arm phase is ``phase`` plus ``temperature_coefficient`` times the
    offset from ``reference_temperature`` (silica waveguide thermo-optic
    tuning).
    """

    arm_delay: float = 1.0e-9            # seconds
    phase: float = 0.0                   # radians at reference_temperature
    temperature_coefficient: float = 2.0 * np.pi / 0.4  # rad/°C
    reference_temperature: float = 22.74  # °C

    def phase_at_temperature(self, temperature_c: float) -> float:
        return self.phase + self.temperature_coefficient * (
            temperature_c - self.reference_temperature
        )

    def slot_shift(self, slot_interval: float) -> int:
        """Arm delay expressed in slots; must be a positive integer."""
        ratio = self.arm_delay / slot_interval
        shift = round(ratio)
        if shift < 1 or abs(ratio - shift) > 1e-9 * max(1.0, abs(ratio)):
            raise NonIntegerShiftError(
                f"arm delay {self.arm_delay} s is not a positive integer "
                f"multiple of the slot interval {slot_interval} s"
            )
        return shift

    def to_dict(self) -> dict:
        return asdict(self)


def apply_mzi(
    amplitudes: np.ndarray,
    params: InterferometerParams,
    arm: str,
    slot_interval: float = 0.5e-9,
    phase: float | None = None,
) -> np.ndarray:
    """Transform slot amplitudes through one delayed interferometer.

    ``amplitudes`` may be 1D (single photon) or 2D indexed
    (signal slot, idler slot); ``arm`` selects the axis acted on ("signal"
    or "idler").  The output gains ``slot_shift`` slots:
    out[k] = (in[k] + e^{i phi} in[k - s]) / 2.
    """
    if arm not in ("signal", "idler"):
        raise ValueError("arm must be 'signal' or 'idler'")
    shift = params.slot_shift(slot_interval)
    phi = params.phase if phase is None else phase
    a = np.asarray(amplitudes, dtype=complex)
    axis = 0 if (a.ndim == 1 or arm == "signal") else 1

    pad_short = [(0, 0)] * a.ndim
    pad_short[axis] = (0, shift)
    pad_long = [(0, 0)] * a.ndim
    pad_long[axis] = (shift, 0)
    return 0.5 * (np.pad(a, pad_short) + np.exp(1j * phi) * np.pad(a, pad_long))


def transformed_state(
    state: TimeBinState,
    signal_mzi: InterferometerParams,
    idler_mzi: InterferometerParams,
    phi_s: float | None = None,
    phi_i: float | None = None,
) -> np.ndarray:
    """Full two-photon amplitude table after both interferometers."""
    a = np.diag(state.diagonal_amplitudes())
    a = apply_mzi(a, signal_mzi, "signal", state.slot_interval, phase=phi_s)
    a = apply_mzi(a, idler_mzi, "idler", state.slot_interval, phase=phi_i)
    return a


def coincidence_probability(phi_s: float, phi_i: float, visibility: float):
    """Relative same-slot coincidence probability, 1 + V cos(phi_s + phi_i).

    Normalized so that the mean over a fringe period is 1.
    """
    v = np.asarray(visibility, dtype=float)
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise InvalidVisibilityError(f"visibility must be within [0, 1], got {visibility}")
    return 1.0 + v * np.cos(np.asarray(phi_s) + np.asarray(phi_i))


def state_visibility(state: TimeBinState, slot_shift: int = 2) -> float:
    """Visibility of the pure M-slot state: (M - s) / M.

    The s first and s last output slots carry only one path each and dilute
    the interfering interior slots; exact for any M >= 2 (zero when the
    boundary dominates).
    """
    m = state.slot_count
    return max(0.0, (m - slot_shift) / m)


def accidental_weight(source: SourceParams) -> float:
    """Phase-independent same-slot coincidence weight, in units of the
    per-pair correlated weight.

    Two independent photons originating s slots apart can still meet in the
    same output slot via opposite interferometer arms, so the accidental rate
    sums a same-origin-slot term E[n(n-1)] + mu(nu_s+nu_i) + nu_s nu_i
    (weight 1/8 per slot, like the correlated term) and a +-s-offset term
    (mu+nu_s)(mu+nu_i) (two paths of weight 1/16 each).
    """
    mu = source.mean_pair
    nu_s, nu_i = source.mean_noise_signal, source.mean_noise_idler
    same_slot = (_pair_second_moment(source) - mu) + mu * (nu_s + nu_i) + nu_s * nu_i
    offset = (mu + nu_s) * (mu + nu_i)
    return same_slot + offset


def ideal_visibility(state: TimeBinState, source: SourceParams, slot_shift: int = 2) -> float:
    """End-to-end fringe visibility of the modeled state.

    Correlated pairs contribute a same-slot coincidence rate proportional to
    mu (1 + V_state cos(phi_s + phi_i)) / 8; accidentals add a flat rate
    A / 8 with A from :func:`accidental_weight`, so

        V = V_state * mu / (mu + A).

    Noiseless and M -> infinity gives 1; M = 2 with shift 2 gives 0 (only
    boundary slots exist).
    """
    mu = source.mean_pair
    if mu <= 0.0:
        return 0.0
    return state_visibility(state, slot_shift) * mu / (mu + accidental_weight(source))


def expected_coincidences_per_start(
    state: TimeBinState,
    source: SourceParams,
    signal_detector: DetectorParams,
    idler_detector: DetectorParams,
    v_extra: float = 1.0,
) -> tuple[float, float]:
    """Fringe-mean same-slot coincidences per start signal, and visibility.

    Starts are idler-channel detections (rate eta_i (mu + nu_i) / 2 per slot
    after the interferometer); the same-slot coincidence rate per slot is
    eta_s eta_i (mu + A) / 8.  ``v_extra`` multiplies the visibility to model
    unbudgeted degradation (component mismatch, residual distinguishability).
    """
    mu = source.mean_pair
    weight = mu + accidental_weight(source)
    start_rate = idler_detector.efficiency * source.total_idler_mean / 2.0
    coinc_rate = signal_detector.efficiency * idler_detector.efficiency * weight / 8.0
    visibility = v_extra * ideal_visibility(state, source)
    return coinc_rate / start_rate, visibility


@dataclass
class FringeDataset:
    """Coincidences versus signal-interferometer temperature setting."""

    setting_temps_c: np.ndarray
    coincidences: np.ndarray
    starts: int
    analytic_probability: np.ndarray
    idler_temperature_c: float
    temperature_coefficient: float  # rad/°C used to map settings to phase

    def to_csv(self, path, header_lines: list[str] | None = None) -> None:
        with open(path, "w") as f:
            for line in header_lines or []:
                f.write(f"# {line}\n")
            f.write(f"# idler_temperature_C={self.idler_temperature_c!r}\n")
            f.write(f"# temperature_coefficient_rad_per_C={self.temperature_coefficient!r}\n")
            f.write("setting_temp_C,coincidences,starts,analytic_probability\n")
            for t, c, p in zip(
                self.setting_temps_c, self.coincidences, self.analytic_probability
            ):
                f.write(f"{float(t)!r},{int(c)},{self.starts},{float(p)!r}\n")


def simulate_fringe_scan(
    setting_temps_c,
    idler_temp_c: float,
    shots: int,
    state: TimeBinState,
    source: SourceParams,
    signal_detector: DetectorParams,
    idler_detector: DetectorParams,
    signal_mzi: InterferometerParams,
    idler_mzi: InterferometerParams,
    rng: np.random.Generator,
    v_extra: float = 1.0,
) -> FringeDataset:
    """Monte Carlo coincidence fringe over signal-interferometer settings.

    Per setting, the expected coincidence count over ``shots`` start signals
    is modulated as 1 + V cos(phi_s + phi_i) and the recorded count is a
    Poisson draw around it.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    temps = np.asarray(setting_temps_c, dtype=float)
    per_start, visibility = expected_coincidences_per_start(
        state, source, signal_detector, idler_detector, v_extra
    )
    phi_s = np.array([signal_mzi.phase_at_temperature(t) for t in temps])
    phi_i = idler_mzi.phase_at_temperature(idler_temp_c)
    relative = coincidence_probability(phi_s, phi_i, visibility)
    mean_counts = shots * per_start * relative
    counts = rng.poisson(mean_counts)
    return FringeDataset(
        setting_temps_c=temps,
        coincidences=counts.astype(np.int64),
        starts=int(shots),
        analytic_probability=relative,
        idler_temperature_c=float(idler_temp_c),
        temperature_coefficient=signal_mzi.temperature_coefficient,
    )
