"""Photon-pair source model for spontaneous four-wave mixing.

Each pump pulse produces a number of correlated signal/idler pairs drawn from
a thermal (single-mode) or Poisson (multimode) law plus independent Poisson
noise photons in each arm.  In the low-detection-probability limit the
signal-idler cross-correlation is

    g2 = E[(n + m_s)(n + m_i)] / (E[n + m_s] E[n + m_i])

with n the pair number and m_s, m_i the noise counts, which reduces to
2 + 1/mu (thermal) or 1 + 1/mu (Poisson) without noise.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleG2Error, ZeroMeanError

PAIR_STATISTICS = ("thermal", "poisson")

# Repetition rates of the two operating modes (Hz).
PULSED_REPETITION_RATE = 53.65e6
TIME_BIN_REPETITION_RATE = 2e9


@dataclass(frozen=True)
class SourceParams:
    """Per-pulse photon-number means and the pair-number law."""

    mean_pair: float
    mean_noise_signal: float = 0.0
    mean_noise_idler: float = 0.0
    repetition_rate: float = PULSED_REPETITION_RATE
    pair_statistics: str = "thermal"

    def __post_init__(self):
        if self.mean_pair < 0 or self.mean_noise_signal < 0 or self.mean_noise_idler < 0:
            raise ValueError("photon-number means must be non-negative")
        if self.repetition_rate <= 0:
            raise ValueError("repetition_rate must be positive")
        if self.pair_statistics not in PAIR_STATISTICS:
            raise ValueError(f"pair_statistics must be one of {PAIR_STATISTICS}")

    @property
    def total_signal_mean(self) -> float:
        return self.mean_pair + self.mean_noise_signal

    @property
    def total_idler_mean(self) -> float:
        return self.mean_pair + self.mean_noise_idler

    @property
    def repetition_period(self) -> float:
        return 1.0 / self.repetition_rate

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SourceParams":
        return cls(**data)


@dataclass(frozen=True)
class PulseOutcome:
    """Photon occupation of one pump pulse."""

    pulse_index: int
    n_pairs: int
    n_noise_signal: int
    n_noise_idler: int
    pump_phase: float  # radians, constant across one pump coherence window


def _sample_pair_counts(params: SourceParams, size: int, rng: np.random.Generator) -> np.ndarray:
    mu = params.mean_pair
    if mu == 0.0:
        return np.zeros(size, dtype=np.int64)
    if params.pair_statistics == "thermal":
        # Bose-Einstein: P(n) = mu^n / (1+mu)^(n+1), a geometric law on n >= 0.
        return rng.geometric(1.0 / (1.0 + mu), size=size) - 1
    return rng.poisson(mu, size=size)


def sample_counts(
    params: SourceParams, n_pulses: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized per-pulse (pairs, signal noise, idler noise) counts."""
    pairs = _sample_pair_counts(params, n_pulses, rng)
    noise_s = (
        rng.poisson(params.mean_noise_signal, size=n_pulses)
        if params.mean_noise_signal > 0 else np.zeros(n_pulses, dtype=np.int64)
    )
    noise_i = (
        rng.poisson(params.mean_noise_idler, size=n_pulses)
        if params.mean_noise_idler > 0 else np.zeros(n_pulses, dtype=np.int64)
    )
    return pairs, noise_s, noise_i


def sample_pulse(params: SourceParams, rng: np.random.Generator, pulse_index: int = 0) -> PulseOutcome:
    """Draw the photon occupation of a single pump pulse."""
    pairs, noise_s, noise_i = sample_counts(params, 1, rng)
    return PulseOutcome(
        pulse_index=pulse_index,
        n_pairs=int(pairs[0]),
        n_noise_signal=int(noise_s[0]),
        n_noise_idler=int(noise_i[0]),
        pump_phase=float(rng.uniform(0.0, 2.0 * np.pi)),
    )


def sample_slot_sequence(
    params: SourceParams,
    n_slots: int,
    coherence_slots: int,
    rng: np.random.Generator,
) -> list[PulseOutcome]:
    """Occupation of consecutive time slots with the pump phase held constant
    over each window of ``coherence_slots`` slots."""
    pairs, noise_s, noise_i = sample_counts(params, n_slots, rng)
    n_windows = -(-n_slots // coherence_slots)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_windows)
    return [
        PulseOutcome(
            pulse_index=k,
            n_pairs=int(pairs[k]),
            n_noise_signal=int(noise_s[k]),
            n_noise_idler=int(noise_i[k]),
            pump_phase=float(phases[k // coherence_slots]),
        )
        for k in range(n_slots)
    ]


def _pair_second_moment(params: SourceParams) -> float:
    """E[n^2] of the pair-number law."""
    mu = params.mean_pair
    if params.pair_statistics == "thermal":
        return mu + 2.0 * mu * mu  # Var = mu(1+mu)
    return mu + mu * mu


def analytic_g2(params: SourceParams) -> float:
    """Closed-form signal-idler cross-correlation, low-detection-probability limit.

    g2 = (E[n^2] + mu (nu_s + nu_i) + nu_s nu_i) / ((mu + nu_s)(mu + nu_i)).
    """
    ts, ti = params.total_signal_mean, params.total_idler_mean
    if ts <= 0.0 or ti <= 0.0:
        raise ZeroMeanError("both arms need a positive mean photon number")
    mu, nu_s, nu_i = params.mean_pair, params.mean_noise_signal, params.mean_noise_idler
    numerator = _pair_second_moment(params) + mu * (nu_s + nu_i) + nu_s * nu_i
    return numerator / (ts * ti)


def zero_noise_g2(mean_pair: float, pair_statistics: str = "thermal") -> float:
    """Upper bound on g2 at fixed pair mean (all photons correlated)."""
    if mean_pair <= 0.0:
        raise ZeroMeanError("mean_pair must be positive")
    if pair_statistics == "thermal":
        return 2.0 + 1.0 / mean_pair
    return 1.0 + 1.0 / mean_pair


def calibrate_noise(
    total_signal_mean: float,
    total_idler_mean: float,
    target_g2: float,
    repetition_rate: float = PULSED_REPETITION_RATE,
    pair_statistics: str = "thermal",
) -> SourceParams:
    """Split the arm totals into correlated pairs plus noise to hit a target g2.

    With both totals fixed, the pair mean mu is the single unknown
    (nu_s = total_s - mu, nu_i = total_i - mu) and g2 grows monotonically
    from 1 at mu = 0 to the zero-noise maximum at mu = min(total_s, total_i),
    so the solution is unique.

    Raises:
        InfeasibleG2Error: target at or below 1 (no correlation possible) or
            above the zero-noise maximum for the given totals.
    """
    if total_signal_mean <= 0.0 or total_idler_mean <= 0.0:
        raise ZeroMeanError("arm totals must be positive")
    mu_max = min(total_signal_mean, total_idler_mean)

    def g2_of_mu(mu):
        return analytic_g2(SourceParams(
            mean_pair=mu,
            mean_noise_signal=total_signal_mean - mu,
            mean_noise_idler=total_idler_mean - mu,
            repetition_rate=repetition_rate,
            pair_statistics=pair_statistics,
        ))

    g2_top = g2_of_mu(mu_max)
    if target_g2 <= 1.0:
        raise InfeasibleG2Error(
            f"target g2 = {target_g2} needs no correlated pairs (degenerate mu = 0)"
        )
    if target_g2 > g2_top:
        raise InfeasibleG2Error(
            f"target g2 = {target_g2} exceeds the zero-noise maximum "
            f"{g2_top:.4f} for totals ({total_signal_mean}, {total_idler_mean})"
        )
    if target_g2 == g2_top:
        mu = mu_max
    else:
        mu = brentq(lambda m: g2_of_mu(m) - target_g2, 1e-15, mu_max, xtol=1e-15)
    return SourceParams(
        mean_pair=float(mu),
        mean_noise_signal=float(total_signal_mean - mu),
        mean_noise_idler=float(total_idler_mean - mu),
        repetition_rate=repetition_rate,
        pair_statistics=pair_statistics,
    )


def buffer_preset(target_g2: float = 3.25) -> SourceParams:
    """Pulsed-mode source: 0.13 photons/pulse per arm at 53.65 MHz."""
    return calibrate_noise(0.13, 0.13, target_g2, repetition_rate=PULSED_REPETITION_RATE)


def entangle_preset() -> SourceParams:
    """Time-bin mode source: 0.01 photons/slot, noiseless, at 2 GHz."""
    return SourceParams(mean_pair=0.01, repetition_rate=TIME_BIN_REPETITION_RATE)
