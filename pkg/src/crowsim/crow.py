"""Tight-binding dispersion model of a coupled-resonator optical waveguide.

A chain of N identical cavities with nearest-neighbour coupling supports a
transmission band

    omega(K) = omega_c(T) + (dOmega/2) * cos(K * Lambda),   K in (0, pi/Lambda)

where Lambda is the intercavity spacing and dOmega the full angular bandwidth.
The band centre shifts linearly with chip temperature.  The group index is

    n_g = c / |d omega / dK| = c / ((dOmega/2) * Lambda * |sin(K Lambda)|)

minimal at the band centre and diverging at the edges (clamped here).  The
buffer delay relative to a fixed reference waveguide of index n_ref is
(n_g - n_ref) * L / c.

Band parameters are normally obtained by fitting the model to measured
(temperature, delay) pairs rather than taken from approximate transmission
edges; see :func:`calibrate`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, asdict, replace

import numpy as np
from scipy.optimize import least_squares

from .errors import OutOfBandError, NoFeasibleFitError
from .units import C_VACUUM, wavelength_nm_to_angular

# Temperature range over which the linear band-shift model is trusted.
VALID_TEMPERATURE_RANGE_C = (15.0, 80.0)


def _quoted_band_halfwidth(band_min_nm: float, band_max_nm: float) -> float:
    """Angular halfwidth (rad/s) implied by quoted band edge wavelengths."""
    return 0.5 * abs(
        wavelength_nm_to_angular(band_min_nm) - wavelength_nm_to_angular(band_max_nm)
    )


@dataclass(frozen=True)
class CrowParams:
    """Geometric and optical parameters of the coupled-cavity waveguide.

    Lengths in µm, wavelengths in nm, loss in dB, temperatures in °C,
    ``band_halfwidth_angular`` in rad/s.  ``length`` defaults to
    ``cavity_count * intercavity_spacing``.
    """

    cavity_count: int = 400
    intercavity_spacing: float = 2.1          # µm (5 lattice constants of 0.42 µm)
    length: float = field(default=0.0)        # µm, derived if left at 0
    band_min_wavelength: float = 1543.0       # nm
    band_max_wavelength: float = 1548.0       # nm
    band_center_ref: float = 1545.5           # nm at reference_temperature
    band_halfwidth_angular: float = field(default=0.0)  # rad/s, derived if 0
    thermal_shift: float = 0.07               # nm per °C
    reference_temperature: float = 21.6       # °C
    insertion_loss_db: float = 26.0           # total, incl. facet coupling
    max_group_index: float = 500.0            # clamp near the band edges

    def __post_init__(self):
        if self.cavity_count < 2:
            raise ValueError("cavity_count must be at least 2")
        if self.intercavity_spacing <= 0:
            raise ValueError("intercavity_spacing must be positive")
        derived = self.cavity_count * self.intercavity_spacing
        if self.length == 0.0:
            object.__setattr__(self, "length", derived)
        elif not math.isclose(self.length, derived, rel_tol=1e-12):
            raise ValueError(
                f"length must equal cavity_count * intercavity_spacing "
                f"({derived} µm), got {self.length}"
            )
        if self.band_halfwidth_angular == 0.0:
            object.__setattr__(
                self,
                "band_halfwidth_angular",
                _quoted_band_halfwidth(self.band_min_wavelength, self.band_max_wavelength),
            )
        if self.band_halfwidth_angular <= 0:
            raise ValueError("band_halfwidth_angular must be positive")
        if not (self.band_min_wavelength < self.band_center_ref < self.band_max_wavelength):
            raise ValueError(
                "band_center_ref must lie strictly between the quoted band edges"
            )
        if self.thermal_shift < 0:
            raise ValueError("thermal_shift must be non-negative")
        if self.max_group_index < 1:
            raise ValueError("max_group_index must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CrowParams":
        return cls(**data)


@dataclass(frozen=True)
class ReferenceWaveguideParams:
    """Reference waveguide of the same physical length on the same chip."""

    length: float = 840.0     # µm
    group_index: float = 5.0  # dimensionless

    def __post_init__(self):
        if self.group_index < 1:
            raise ValueError("group_index must be at least 1")
        if self.length <= 0:
            raise ValueError("length must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ReferenceWaveguideParams":
        return cls(**data)

    def group_delay(self) -> float:
        """Absolute traversal time in seconds."""
        return self.group_index * self.length * 1e-6 / C_VACUUM


def band_center_at_temperature(params: CrowParams, temperature_c: float) -> float:
    """Band-centre wavelength (nm) at a given chip temperature."""
    lo, hi = VALID_TEMPERATURE_RANGE_C
    if not lo <= temperature_c <= hi:
        warnings.warn(
            f"chip temperature {temperature_c} °C outside the validated "
            f"linear-shift range {lo}-{hi} °C",
            stacklevel=2,
        )
    return params.band_center_ref + params.thermal_shift * (
        temperature_c - params.reference_temperature
    )


def _normalized_detuning(params: CrowParams, wavelength_nm: float, temperature_c: float) -> float:
    """(omega - omega_c) / (dOmega/2); in-band iff the magnitude is <= 1."""
    omega = wavelength_nm_to_angular(wavelength_nm)
    omega_c = wavelength_nm_to_angular(band_center_at_temperature(params, temperature_c))
    return float((omega - omega_c) / params.band_halfwidth_angular)


def bloch_wavenumber(params: CrowParams, wavelength_nm: float, temperature_c: float) -> float:
    """Bloch wavenumber K (rad/µm) on the branch K in (0, pi/Lambda).

    K solves omega = omega_c + (dOmega/2) cos(K Lambda) and decreases
    monotonically with optical frequency across the band.

    Raises:
        OutOfBandError: the wavelength lies outside the transmission band.
    """
    x = _normalized_detuning(params, wavelength_nm, temperature_c)
    if abs(x) > 1.0:
        raise OutOfBandError(
            f"wavelength {wavelength_nm} nm is out of band at "
            f"{temperature_c} °C (normalized detuning {x:+.4f})"
        )
    return math.acos(x) / params.intercavity_spacing


def group_index(params: CrowParams, wavelength_nm: float, temperature_c: float) -> float:
    """Group index c/|v_g|, clamped at ``max_group_index`` near the band edges."""
    x = _normalized_detuning(params, wavelength_nm, temperature_c)
    if abs(x) > 1.0:
        raise OutOfBandError(
            f"wavelength {wavelength_nm} nm is out of band at "
            f"{temperature_c} °C (normalized detuning {x:+.4f})"
        )
    # |sin(K Lambda)| for cos(K Lambda) = x
    sin_kl = math.sqrt(max(0.0, 1.0 - x * x))
    v_g = params.band_halfwidth_angular * params.intercavity_spacing * 1e-6 * sin_kl
    if v_g <= 0.0:
        return params.max_group_index
    return min(C_VACUUM / v_g, params.max_group_index)


def group_delay(params: CrowParams, wavelength_nm: float, temperature_c: float) -> float:
    """Absolute traversal time (seconds) of the slow-light waveguide."""
    n_g = group_index(params, wavelength_nm, temperature_c)
    return n_g * params.length * 1e-6 / C_VACUUM


def buffer_delay(
    params: CrowParams,
    reference: ReferenceWaveguideParams,
    wavelength_nm: float,
    temperature_c: float,
) -> float:
    """Delay in picoseconds relative to the reference waveguide."""
    n_g = group_index(params, wavelength_nm, temperature_c)
    return (n_g - reference.group_index) * params.length * 1e-6 / C_VACUUM * 1e12


def transfer_function(
    params: CrowParams,
    omega_grid: np.ndarray,
    temperature_c: float,
    edge_fraction: float = 0.02,
) -> np.ndarray:
    """Complex field transfer function sampled at absolute angular frequencies.

    In-band, H = t * exp(i * Kp(omega) * L) with |t|^2 the insertion-loss
    transmission and Kp = pi/Lambda - K the propagating branch of the Bloch
    wavenumber, which increases with frequency so the spectral phase slope
    d(phase)/d(omega) = +n_g L / c is a positive group delay.  (The branch
    returned by :func:`bloch_wavenumber` decreases with frequency; using it
    directly would advance rather than delay the envelope.)  Out-of-band
    samples are zero, and a raised-cosine roll-off over ``edge_fraction`` of
    the full bandwidth at each band edge avoids a hard spectral cliff.
    """
    omega = np.asarray(omega_grid, dtype=float)
    omega_c = wavelength_nm_to_angular(band_center_at_temperature(params, temperature_c))
    x = (omega - omega_c) / params.band_halfwidth_angular

    h = np.zeros(omega.shape, dtype=complex)
    in_band = np.abs(x) <= 1.0
    if not np.any(in_band):
        return h

    xi = x[in_band]
    k_prop = (np.pi - np.arccos(xi)) / (params.intercavity_spacing * 1e-6)  # rad/m
    phase = k_prop * (params.length * 1e-6)

    amplitude = math.sqrt(10.0 ** (-params.insertion_loss_db / 10.0))
    apod = np.ones_like(xi)
    if edge_fraction > 0.0:
        # Fraction of the full bandwidth (2 halfwidths) -> width 2f in x units.
        zone = 2.0 * edge_fraction
        t = (np.abs(xi) - (1.0 - zone)) / zone
        mask = t > 0.0
        apod[mask] = np.cos(0.5 * np.pi * np.clip(t[mask], 0.0, 1.0)) ** 2

    h[in_band] = amplitude * apod * np.exp(1j * phase)
    return h


def reference_transfer_function(
    reference: ReferenceWaveguideParams, omega_grid: np.ndarray
) -> np.ndarray:
    """Dispersionless unit-amplitude transfer of the reference waveguide."""
    omega = np.asarray(omega_grid, dtype=float)
    return np.exp(1j * omega * reference.group_delay())


# --- calibration -------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of fitting band parameters to measured delays.

    ``residuals_ps`` are (model - observed) at each calibration point for the
    selected solution.  ``alternate`` holds the best fit on the mirror branch
    (band centre on the other side of the signal wavelength), which is kept
    because the dispersion is symmetric about the band centre at any single
    temperature; the thermal trend normally disambiguates.
    """

    params: CrowParams
    residuals_ps: tuple
    sum_squared_residuals: float
    branch: str                      # "center_below_signal" | "center_above_signal"
    alternate: dict | None = None    # {"params": CrowParams, "residuals_ps": ..., ...}

    def to_dict(self) -> dict:
        out = {
            "params": self.params.to_dict(),
            "residuals_ps": list(self.residuals_ps),
            "sum_squared_residuals": self.sum_squared_residuals,
            "branch": self.branch,
        }
        if self.alternate is not None:
            out["alternate"] = {
                "params": self.alternate["params"].to_dict(),
                "residuals_ps": list(self.alternate["residuals_ps"]),
                "sum_squared_residuals": self.alternate["sum_squared_residuals"],
                "branch": self.alternate["branch"],
            }
        return out


def _delay_model_ps(
    center_ref_nm: float,
    halfwidth_rad_s: float,
    prior: CrowParams,
    reference: ReferenceWaveguideParams,
    wavelength_nm: float,
    temperature_c: float,
) -> float:
    """Model delay for trial band parameters; clamp-valued out of band."""
    omega = wavelength_nm_to_angular(wavelength_nm)
    center = center_ref_nm + prior.thermal_shift * (temperature_c - prior.reference_temperature)
    x = (omega - wavelength_nm_to_angular(center)) / halfwidth_rad_s
    if abs(x) >= 1.0:
        n_g = prior.max_group_index
    else:
        v_g = halfwidth_rad_s * prior.intercavity_spacing * 1e-6 * math.sqrt(1.0 - x * x)
        n_g = min(C_VACUUM / v_g, prior.max_group_index)
    return (n_g - reference.group_index) * prior.length * 1e-6 / C_VACUUM * 1e12


def calibrate(
    params_prior: CrowParams,
    observations: list[tuple[float, float]],
    signal_wavelength_nm: float,
    reference: ReferenceWaveguideParams | None = None,
) -> CalibrationResult:
    """Fit band centre and halfwidth to measured (temperature °C, delay ps) pairs.

    Least squares over (band_center_ref, band_halfwidth_angular) with the
    centre bounded by the quoted band edges; the halfwidth is allowed to
    exceed the quoted edges because those are approximate while the delays
    are the precise observable.  Both centre-below-signal and
    centre-above-signal branches are fitted; the returned solution is the one
    whose thermal trend matches the observations (ties broken by residual).

    Raises:
        NoFeasibleFitError: fewer than two distinct temperatures, or no
            parameters keep the signal wavelength in-band at every
            observation temperature.
    """
    if reference is None:
        reference = ReferenceWaveguideParams()
    obs = [(float(t), float(d)) for t, d in observations]
    if len(obs) < 2 or len({t for t, _ in obs}) < 2:
        raise NoFeasibleFitError(
            "calibration needs at least two observations at distinct temperatures"
        )

    prior = params_prior
    h_quoted = _quoted_band_halfwidth(prior.band_min_wavelength, prior.band_max_wavelength)
    h_lo, h_hi = 0.25 * h_quoted, 4.0 * h_quoted
    margin = 1e-3  # nm, keeps bounds strict and the two branches disjoint

    def residuals(p, c_bounds):
        c_nm = min(max(p[0], c_bounds[0]), c_bounds[1])
        h = min(max(p[1], h_lo / 1e12), h_hi / 1e12) * 1e12
        return [
            _delay_model_ps(c_nm, h, prior, reference, signal_wavelength_nm, t) - d
            for t, d in obs
        ]

    def fit_branch(c_bounds, name):
        best = None
        c_starts = np.linspace(c_bounds[0], c_bounds[1], 7)
        h_starts = np.linspace(h_lo, h_hi, 7) / 1e12
        for c0 in c_starts:
            for h0 in h_starts:
                sol = least_squares(
                    residuals,
                    [c0, h0],
                    args=(c_bounds,),
                    bounds=([c_bounds[0], h_lo / 1e12], [c_bounds[1], h_hi / 1e12]),
                    xtol=1e-14,
                    ftol=1e-14,
                    gtol=1e-14,
                )
                if best is None or sol.cost < best.cost:
                    best = sol
        c_nm, h = best.x[0], best.x[1] * 1e12
        res = residuals(best.x, c_bounds)
        fitted = replace(prior, band_center_ref=float(c_nm), band_halfwidth_angular=float(h))
        return {
            "params": fitted,
            "residuals_ps": tuple(res),
            "sum_squared_residuals": float(sum(r * r for r in res)),
            "branch": name,
        }

    below_hi = min(signal_wavelength_nm - margin, prior.band_max_wavelength - margin)
    above_lo = max(signal_wavelength_nm + margin, prior.band_min_wavelength + margin)
    branches = []
    if below_hi > prior.band_min_wavelength + margin:
        branches.append(fit_branch((prior.band_min_wavelength + margin, below_hi),
                                   "center_below_signal"))
    if above_lo < prior.band_max_wavelength - margin:
        branches.append(fit_branch((above_lo, prior.band_max_wavelength - margin),
                                   "center_above_signal"))
    if not branches:
        raise NoFeasibleFitError("signal wavelength leaves no room inside the quoted band")

    def in_band_everywhere(candidate):
        try:
            for t, _ in obs:
                group_index(candidate["params"], signal_wavelength_nm, t)
        except OutOfBandError:
            return False
        return True

    feasible = [b for b in branches if in_band_everywhere(b)]
    if not feasible:
        raise NoFeasibleFitError(
            "no band parameters keep the signal wavelength in-band at every "
            "observation temperature"
        )

    def trend_matches(candidate):
        ts = sorted({t for t, _ in obs})
        model = [
            _delay_model_ps(
                candidate["params"].band_center_ref,
                candidate["params"].band_halfwidth_angular,
                prior, reference, signal_wavelength_nm, t,
            )
            for t in ts
        ]
        observed = [dict(obs)[t] for t in ts]
        return (model[-1] - model[0]) * (observed[-1] - observed[0]) > 0

    feasible.sort(key=lambda b: (not trend_matches(b), b["sum_squared_residuals"]))
    chosen = feasible[0]
    others = [b for b in branches if b is not chosen]
    return CalibrationResult(
        params=chosen["params"],
        residuals_ps=chosen["residuals_ps"],
        sum_squared_residuals=chosen["sum_squared_residuals"],
        branch=chosen["branch"],
        alternate=others[0] if others else None,
    )
