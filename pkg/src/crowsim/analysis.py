"""Statistical extraction: peak fitting, g2 estimation, width deconvolution,
fringe fitting and the Bell-threshold check.

Fits use a damped Gauss-Newton iteration with a numeric Jacobian (central
differences), step-halving on residual increase, at most 200 iterations and
a 1e-9 relative-parameter-change tolerance.  Parameter errors come from the
scaled inverse normal matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .detectors import CoincidenceHistogram
from .errors import (
    DegenerateFitError,
    EmptySidePeaksError,
    InsufficientSpanError,
    NoPeakError,
    NonPhysicalWidthError,
    SingularFitError,
)
from .timebin import FringeDataset

MAX_ITERATIONS = 200
PARAMETER_TOLERANCE = 1e-9
BELL_THRESHOLD = 1.0 / math.sqrt(2.0)


@dataclass
class FitInfo:
    iterations: int
    converged: bool
    residual_rms: float


def gauss_newton(
    model,
    x: np.ndarray,
    y: np.ndarray,
    p0: np.ndarray,
    weights: np.ndarray | None = None,
    scales: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, FitInfo]:
    """Damped Gauss-Newton least squares of ``model(x, p)`` against ``y``.

    Returns (parameters, covariance, info).  ``weights`` multiply squared
    residuals; the covariance is scaled by the reduced chi-square so errors
    remain meaningful for unweighted fits.  ``scales`` gives the characteristic
    magnitude of each parameter (defaults to |p0| or 1): the iteration, the
    finite-difference steps and the convergence test all run in scaled space,
    which keeps second-scale and count-scale parameters equally conditioned.

    Raises:
        SingularFitError: normal equations are singular or non-finite.
    """
    p0 = np.asarray(p0, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    sw = np.sqrt(w)
    if scales is None:
        scales = np.where(np.abs(p0) > 0.0, np.abs(p0), 1.0)
    scales = np.asarray(scales, dtype=float)

    def weighted_residuals(q):
        return (model(x, q * scales) - y) * sw

    q = p0 / scales
    r = weighted_residuals(q)
    ssr = float(r @ r)
    iterations = 0
    converged = False
    for iterations in range(1, MAX_ITERATIONS + 1):
        # Central-difference Jacobian of the weighted residuals (scaled space).
        jac = np.empty((y.size, q.size))
        for j in range(q.size):
            h = 1e-6 * max(1.0, abs(q[j]))
            qp, qm = q.copy(), q.copy()
            qp[j] += h
            qm[j] -= h
            jac[:, j] = (weighted_residuals(qp) - weighted_residuals(qm)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac.T @ jac, -jac.T @ r)
        except np.linalg.LinAlgError as exc:
            raise SingularFitError("normal equations are singular") from exc
        if not np.all(np.isfinite(step)):
            raise SingularFitError("non-finite Gauss-Newton step")

        # Damping: halve the step until the residual does not increase.
        damping = 1.0
        for _ in range(20):
            q_new = q + damping * step
            r_new = weighted_residuals(q_new)
            ssr_new = float(r_new @ r_new)
            if np.isfinite(ssr_new) and ssr_new <= ssr:
                break
            damping *= 0.5
        else:
            converged = True  # no downhill direction left: local minimum
            break

        rel_change = np.max(np.abs(damping * step) / np.maximum(1.0, np.abs(q_new)))
        q, r, ssr = q_new, r_new, ssr_new
        if rel_change < PARAMETER_TOLERANCE:
            converged = True
            break

    dof = max(1, y.size - q.size)
    try:
        cov_scaled = np.linalg.inv(jac.T @ jac) * (ssr / dof)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("singular covariance") from exc
    if not np.all(np.isfinite(cov_scaled)):
        raise SingularFitError("non-finite covariance")
    cov = cov_scaled * np.outer(scales, scales)
    info = FitInfo(
        iterations=iterations,
        converged=converged,
        residual_rms=float(np.sqrt(ssr / y.size)),
    )
    return q * scales, cov, info


# --- Gaussian peak fitting ---------------------------------------------------

@dataclass
class PeakFit:
    """Gaussian fit a + b exp(-(t - t0)^2 / w^2); w is the 1/e half width."""

    center: float
    center_err: float
    e_halfwidth: float
    e_halfwidth_err: float
    amplitude: float
    background: float
    residual_rms: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if self.e_halfwidth <= 0:
            raise ValueError("e_halfwidth must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def _gaussian_peak_model(t, p):
    background, amplitude, center, width = p
    return background + amplitude * np.exp(-((t - center) ** 2) / width**2)


def fit_gaussian_peak(
    hist: CoincidenceHistogram, window: tuple[float, float]
) -> PeakFit:
    """Fit a constant-background Gaussian to the counts inside a time window.

    Initialization is moment-based: centre at the maximum bin, width from the
    RMS spread of the windowed counts, background from the window-edge median.

    Raises:
        NoPeakError: fewer than 7 bins, flat counts, or maximum on the window
            boundary.
        SingularFitError: degenerate fit.
    """
    centers = hist.bin_centers
    lo, hi = window
    mask = (centers >= lo) & (centers <= hi)
    t = centers[mask]
    y = hist.counts[mask].astype(float)
    if t.size < 7:
        raise NoPeakError(f"window contains {t.size} bins, need at least 7")
    i_max = int(np.argmax(y))
    if i_max == 0 or i_max == t.size - 1:
        raise NoPeakError("count maximum sits on the window boundary")
    if y.max() == y.min():
        raise NoPeakError("counts are flat inside the window")

    edge = np.concatenate([y[:3], y[-3:]])
    background0 = float(np.median(edge))
    amplitude0 = float(y[i_max] - background0)
    if amplitude0 <= 0:
        raise NoPeakError("no counts above the background level")
    excess = np.clip(y - background0, 0.0, None)
    mean_t = float(np.sum(t * excess) / np.sum(excess))
    rms = math.sqrt(float(np.sum((t - mean_t) ** 2 * excess) / np.sum(excess)))
    width0 = max(rms * math.sqrt(2.0), 2.0 * hist.bin_width)

    p0 = np.array([background0, amplitude0, t[i_max], width0])
    scales = np.array([max(1.0, abs(background0)), amplitude0, width0, width0])
    p, cov, info = gauss_newton(_gaussian_peak_model, t, y, p0, scales=scales)
    background, amplitude, center, width = p
    return PeakFit(
        center=float(center),
        center_err=float(math.sqrt(max(0.0, cov[2, 2]))),
        e_halfwidth=float(abs(width)),
        e_halfwidth_err=float(math.sqrt(max(0.0, cov[3, 3]))),
        amplitude=float(amplitude),
        background=float(background),
        residual_rms=info.residual_rms,
        iterations=info.iterations,
        converged=info.converged,
    )


# --- g2 from histogram slots -------------------------------------------------

@dataclass
class G2Result:
    value: float
    stderr: float
    n_main: int
    n_side_total: int
    side_slot_count: int
    nonclassical: bool  # value - 2 > 2 * stderr

    def to_dict(self) -> dict:
        return asdict(self)


def compute_g2(
    hist: CoincidenceHistogram,
    main_center: float,
    rep_period: float,
    half_window: float,
    side_slots: tuple[int, ...] = (-3, -2, -1, 1, 2, 3),
) -> G2Result:
    """Main-peak to accidental-peak count ratio with Poisson errors.

    Counts are integrated over ``+-half_window`` around the main peak centre
    and around each side slot at ``main_center + k * rep_period``; the window
    fraction cancels in the ratio.  Standard error by Poisson propagation:
    g2 * sqrt(1/N_main + 1/N_side_total).

    Raises:
        ValueError: fewer than two side slots, or 0 among them.
        EmptySidePeaksError: no side-slot counts to normalize with.
    """
    if len(side_slots) < 2:
        raise ValueError("need at least two side slots")
    if 0 in side_slots:
        raise ValueError("side slots must exclude the main peak (index 0)")

    centers = hist.bin_centers

    def slot_counts(center):
        mask = np.abs(centers - center) <= half_window
        if not np.any(mask):
            raise ValueError(f"slot at {center * 1e12:.1f} ps lies outside the histogram")
        return int(hist.counts[mask].sum())

    n_main = slot_counts(main_center)
    n_side = [slot_counts(main_center + k * rep_period) for k in side_slots]
    n_side_total = int(sum(n_side))
    if n_side_total == 0:
        raise EmptySidePeaksError("side slots contain no counts")
    mean_side = n_side_total / len(side_slots)
    value = n_main / mean_side
    stderr = value * math.sqrt(1.0 / max(1, n_main) + 1.0 / n_side_total)
    return G2Result(
        value=float(value),
        stderr=float(stderr),
        n_main=n_main,
        n_side_total=n_side_total,
        side_slot_count=len(side_slots),
        nonclassical=bool(value - 2.0 > 2.0 * stderr),
    )


# --- width deconvolution -----------------------------------------------------

def convolved_width(sigma_signal: float, sigma_idler: float, sigma_sspd: float) -> float:
    """Forward quadrature: width of a histogram main peak."""
    return math.sqrt(sigma_signal**2 + sigma_idler**2 + 2.0 * sigma_sspd**2)


def deconvolve_width(sigma_main: float, sigma_idler: float, sigma_sspd: float) -> float:
    """Signal-photon 1/e half width from the measured main-peak width.

    Inverts sigma_main^2 = sigma_s^2 + sigma_i^2 + 2 sigma_sspd^2.

    Raises:
        NonPhysicalWidthError: the peak is narrower than the resolution floor
            sqrt(sigma_i^2 + 2 sigma_sspd^2).
    """
    arg = sigma_main**2 - sigma_idler**2 - 2.0 * sigma_sspd**2
    if arg < 0.0:
        floor = math.sqrt(sigma_idler**2 + 2.0 * sigma_sspd**2)
        raise NonPhysicalWidthError(
            f"main-peak width {sigma_main} is below the resolution floor {floor:.3e}"
        )
    return math.sqrt(arg)


# --- fringe fitting ----------------------------------------------------------

@dataclass
class FringeFit:
    """Fit of C (1 + V cos(beta x + phi0)) to coincidences vs setting."""

    visibility: float
    visibility_err: float
    phase_offset: float
    period_in_setting_units: float
    mean_level: float
    residual_rms: float
    iterations: int
    converged: bool
    clamped: bool = False  # raw |V| exceeded 1 and was clamped

    def to_dict(self) -> dict:
        return asdict(self)


def _fringe_model(x, p):
    mean_level, visibility, beta, phase0 = p
    return mean_level * (1.0 + visibility * np.cos(beta * x + phase0))


def fit_fringe(
    data: FringeDataset,
    beta_hint: float | None = None,
    pin_period: bool = False,
) -> FringeFit:
    """Poisson-weighted least squares of the fringe model.

    ``beta_hint`` seeds the rad-per-setting-unit frequency (defaults to the
    dataset's configured temperature coefficient); with ``pin_period`` the
    frequency is held fixed instead of fitted.

    Raises:
        InsufficientSpanError: fewer than 5 settings or less than half a
            fringe period spanned.
        DegenerateFitError: singular fit (e.g. a single repeated setting).
    """
    x = np.asarray(data.setting_temps_c, dtype=float)
    y = np.asarray(data.coincidences, dtype=float)
    if x.size < 5:
        raise InsufficientSpanError(f"{x.size} settings, need at least 5")
    beta = float(beta_hint if beta_hint is not None else data.temperature_coefficient)
    span = (x.max() - x.min()) * abs(beta)
    if span < math.pi:
        raise InsufficientSpanError(
            f"settings span {span:.2f} rad of phase, need at least pi"
        )
    weights = 1.0 / np.maximum(y, 1.0)
    mean0 = float(np.mean(y))
    if mean0 <= 0.0:
        raise DegenerateFitError("no counts to fit")
    v0 = float((y.max() - y.min()) / max(1.0, y.max() + y.min()))
    v0 = min(max(v0, 0.05), 0.99)

    best = None
    for phase0 in np.linspace(0.0, 2.0 * np.pi, 8, endpoint=False):
        if pin_period:
            def model(t, p, _beta=beta):
                return _fringe_model(t, [p[0], p[1], _beta, p[2]])
            p0 = np.array([mean0, v0, phase0])
            scales = np.array([mean0, 1.0, 1.0])
        else:
            model = _fringe_model
            p0 = np.array([mean0, v0, beta, phase0])
            scales = np.array([mean0, 1.0, abs(beta), 1.0])
        try:
            result = gauss_newton(model, x, y, p0, weights=weights, scales=scales)
        except SingularFitError:
            continue
        if best is None or result[2].residual_rms < best[2].residual_rms:
            best = result
    if best is None:
        raise DegenerateFitError("all fringe fit attempts were singular")
    p, cov, info = best
    if pin_period:
        mean_level, visibility, phase0 = p
        v_err = math.sqrt(max(0.0, cov[1, 1]))
        beta_fit = beta
    else:
        mean_level, visibility, beta_fit, phase0 = p
        v_err = math.sqrt(max(0.0, cov[1, 1]))

    # Sign/phase canonicalization: V >= 0, phase in [0, 2pi).
    if visibility < 0.0:
        visibility = -visibility
        phase0 += math.pi
    if beta_fit < 0.0:
        beta_fit = -beta_fit
        phase0 = -phase0
    phase0 = phase0 % (2.0 * math.pi)
    clamped = bool(visibility > 1.0)
    visibility = min(float(visibility), 1.0)
    if abs(beta_fit) < 1e-12:
        raise DegenerateFitError("fitted fringe frequency collapsed to zero")
    return FringeFit(
        visibility=float(visibility),
        visibility_err=float(v_err),
        phase_offset=float(phase0),
        period_in_setting_units=float(2.0 * math.pi / beta_fit),
        mean_level=float(mean_level),
        residual_rms=info.residual_rms,
        iterations=info.iterations,
        converged=info.converged,
        clamped=clamped,
    )


# --- Bell threshold ----------------------------------------------------------

@dataclass
class BellCheck:
    violated: bool
    margin: float       # visibility - 1/sqrt(2)
    threshold: float
    sigma_multiplier: float

    def to_dict(self) -> dict:
        return asdict(self)


def bell_violated(fit: FringeFit, sigma_multiplier: float = 1.0) -> BellCheck:
    """True iff the fitted visibility exceeds 1/sqrt(2) by k standard errors.

    Sinusoidal fringes with V > 1/sqrt(2) are incompatible with local realism
    (CHSH); the strict inequality means V exactly at the threshold does not
    count as a violation.
    """
    margin = fit.visibility - BELL_THRESHOLD
    violated = fit.visibility - sigma_multiplier * fit.visibility_err > BELL_THRESHOLD
    return BellCheck(
        violated=bool(violated),
        margin=float(margin),
        threshold=BELL_THRESHOLD,
        sigma_multiplier=float(sigma_multiplier),
    )
