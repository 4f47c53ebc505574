"""Scan orchestration: calibrated end-to-end runs and report emission.

Each scan writes tidy CSV plus JSON fit blocks and rendered figures into the
output directory.  Every delimited file header carries the config hash and
seed, and outputs are byte-identical for a given (config, seed) regardless
of worker count.
"""

from __future__ import annotations

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import crow as crow_model
from . import figures
from .analysis import (
    BellCheck,
    FringeFit,
    PeakFit,
    bell_violated,
    compute_g2,
    convolved_width,
    fit_fringe,
    fit_gaussian_peak,
)
from .detectors import CoincidenceHistogram
from .errors import ConfigError
from .pipeline import ArmTiming, simulate_buffer_histogram
from .scenarios import ScenarioConfig, build_mzi, build_state
from .timebin import simulate_fringe_scan


def _header(config: ScenarioConfig, seed: int) -> list[str]:
    return [f"config_sha256={config.hash}", f"seed={seed}"]


def _write_json(path: Path, payload: dict, config: ScenarioConfig, seed: int) -> None:
    payload = {"config_sha256": config.hash, "seed": seed, **payload}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def ensure_calibrated(config: ScenarioConfig) -> tuple[ScenarioConfig, crow_model.CalibrationResult | None]:
    """Calibrate the band parameters from the configured observations if the
    config does not pin them already."""
    if config.crow_calibrated:
        return config, None
    result = crow_model.calibrate(
        config.crow,
        [(t, d) for t, d in config.calibration_observations],
        config.signal_wavelength,
        reference=config.reference,
    )
    config = replace(config, crow=result.params, crow_calibrated=True)
    return config, result


def run_calibration(config: ScenarioConfig, out_dir) -> crow_model.CalibrationResult:
    """Fit band parameters to the configured delay observations and save them."""
    result = crow_model.calibrate(
        config.crow,
        [(t, d) for t, d in config.calibration_observations],
        config.signal_wavelength,
        reference=config.reference,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "calibration.json", result.to_dict(), config, config.seed)
    return result


def _fit_main_peak(
    hist: CoincidenceHistogram, expected_center: float, sigma_expected: float
) -> PeakFit:
    span = max(5.0 * sigma_expected, 30 * hist.bin_width)
    return fit_gaussian_peak(hist, (expected_center - span, expected_center + span))


def _arm_run(
    config: ScenarioConfig,
    arm: str,
    temperature: float,
    seed: int,
    workers: int,
) -> tuple[CoincidenceHistogram, PeakFit, dict]:
    """Simulate one arm at one chip temperature and fit its main peak."""
    if arm == "crow":
        delay = crow_model.group_delay(config.crow, config.signal_wavelength, temperature)
        width = config.timing["signal_crow"]
    else:
        delay = config.reference.group_delay()
        width = config.timing["signal_ref"]
    timing = ArmTiming(
        signal_delay=delay,
        signal_e_halfwidth=width,
        idler_e_halfwidth=config.timing["idler"],
    )
    hist = simulate_buffer_histogram(
        config.source,
        timing,
        config.signal_detector,
        config.idler_detector,
        starts=config.starts,
        seed=seed,
        window=config.histogram["window"],
        bin_width=config.histogram["bin_width"],
        workers=workers,
    )
    sigma_expected = convolved_width(
        width, config.timing["idler"], config.signal_detector.jitter_e_halfwidth
    )
    peak = _fit_main_peak(hist, delay, sigma_expected)
    g2 = compute_g2(
        hist,
        main_center=peak.center,
        rep_period=config.source.repetition_period,
        half_window=3.0 * sigma_expected,
        side_slots=config.histogram["side_slots"],
    )
    return hist, peak, g2.to_dict()


def run_buffer_scan(config: ScenarioConfig, out_dir, workers: int = 1) -> list[dict]:
    """Full buffering scan over the configured chip temperatures.

    Per temperature: both arms simulated, main peaks fitted, g2 extracted,
    histogram CSVs and fit JSONs written; plus a delay summary CSV and the
    report figures.  Returns the summary rows.
    """
    config, calibration = ensure_calibrated(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if calibration is not None:
        _write_json(out / "calibration.json", calibration.to_dict(), config, config.seed)

    seed_seq = np.random.SeedSequence(config.seed)
    arm_seeds = seed_seq.generate_state(2 * len(config.temperatures), dtype=np.uint64)

    rows = []
    for i, temperature in enumerate(config.temperatures):
        per_arm: dict[str, tuple[CoincidenceHistogram, PeakFit]] = {}
        g2_blocks = {}
        for j, arm in enumerate(("crow", "ref")):
            seed = int(arm_seeds[2 * i + j])
            hist, peak, g2 = _arm_run(config, arm, temperature, seed, workers)
            tag = f"{arm}_T{temperature:g}"
            hist.to_csv(out / f"hist_{tag}.csv", header_lines=_header(config, config.seed))
            _write_json(out / f"peakfit_{tag}.json", peak.to_dict(), config, config.seed)
            _write_json(out / f"g2_{tag}.json", g2, config, config.seed)
            per_arm[arm] = (hist, peak)
            g2_blocks[arm] = g2

        crow_fit, ref_fit = per_arm["crow"][1], per_arm["ref"][1]
        delay_ps = (crow_fit.center - ref_fit.center) * 1e12
        delay_err_ps = math.hypot(crow_fit.center_err, ref_fit.center_err) * 1e12
        rows.append({
            "temp_C": temperature,
            "delay_ps": delay_ps,
            "delay_err_ps": delay_err_ps,
            "g2_crow": g2_blocks["crow"]["value"],
            "g2_err": g2_blocks["crow"]["stderr"],
            "g2_ref": g2_blocks["ref"]["value"],
        })
        figures.plot_main_peaks(
            {"CROW": per_arm["crow"], "reference": per_arm["ref"]},
            out / f"peaks_T{temperature:g}.png",
            title=f"chip temperature {temperature:g} °C",
        )

    with open(out / "buffer_scan_summary.csv", "w") as f:
        for line in _header(config, config.seed):
            f.write(f"# {line}\n")
        f.write("temp_C,delay_ps,delay_err_ps,g2_crow,g2_err,g2_ref\n")
        for r in rows:
            f.write(
                f"{r['temp_C']!r},{r['delay_ps']!r},{r['delay_err_ps']!r},"
                f"{r['g2_crow']!r},{r['g2_err']!r},{r['g2_ref']!r}\n"
            )
    figures.plot_delay_curve(rows, out / "delay_vs_temperature.png")
    return rows


def run_entanglement_scan(
    config: ScenarioConfig, out_dir, workers: int = 1
) -> list[tuple[FringeFit, BellCheck]]:
    """Two-photon interference scans, one per configured idler setting.

    Writes per-scan fringe CSVs, fit JSONs with the Bell flag, and the
    combined fringe figure.  Returns (fit, bell check) per scan.
    """
    if config.entanglement is None:
        raise ConfigError("entangle scan requires an 'entanglement' block")
    del workers  # fringe Monte Carlo is rate-level; nothing to parallelize
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    state = build_state(config)
    mzi = build_mzi(config)
    ent = config.entanglement
    seed_seq = np.random.SeedSequence(config.seed)
    scan_seeds = seed_seq.spawn(len(ent["idler_temperatures"]))

    results = []
    scans = []
    for idler_temp, scan_seed in zip(ent["idler_temperatures"], scan_seeds):
        rng = np.random.default_rng(scan_seed)
        data = simulate_fringe_scan(
            config.temperatures,
            idler_temp,
            config.starts,
            state,
            config.source,
            config.signal_detector,
            config.idler_detector,
            signal_mzi=mzi,
            idler_mzi=mzi,
            rng=rng,
            v_extra=ent["v_extra"],
        )
        fit = fit_fringe(data)
        bell = bell_violated(fit)
        tag = f"idler{idler_temp:g}"
        data.to_csv(out / f"fringe_{tag}.csv", header_lines=_header(config, config.seed))
        _write_json(
            out / f"fringe_{tag}_fit.json",
            {"fit": fit.to_dict(), "bell": bell.to_dict()},
            config,
            config.seed,
        )
        results.append((fit, bell))
        scans.append((data, fit))

    _write_json(
        out / "bell.json",
        {
            "scans": [
                {
                    "idler_temperature_C": t,
                    "visibility": fit.visibility,
                    "visibility_err": fit.visibility_err,
                    "violated": bell.violated,
                    "margin": bell.margin,
                }
                for t, (fit, bell) in zip(ent["idler_temperatures"], results)
            ]
        },
        config,
        config.seed,
    )
    figures.plot_fringes(scans, out / "fringes.png")
    return results
