"""Scenario configuration: JSON loading, schema validation, presets.

A scenario is a single JSON document validated against the shipped schema
(unknown keys are rejected).  Seeds must be explicit; there is no wall-clock
default.  ``config_hash`` fingerprints the canonical document so every output
file can identify the run that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .crow import CrowParams, ReferenceWaveguideParams
from .detectors import DetectorParams
from .errors import ConfigError
from .source import (
    PULSED_REPETITION_RATE,
    TIME_BIN_REPETITION_RATE,
    SourceParams,
    calibrate_noise,
)
from .timebin import InterferometerParams, TimeBinState

PAPER_DELAY_OBSERVATIONS = [[21.6, 151.1], [65.4, 103.0]]
DEFAULT_SIGNAL_WAVELENGTH = 1546.70  # nm


def _schema() -> dict:
    with resources.files("crowsim.schema").joinpath("scenario.schema.json").open() as f:
        return json.load(f)


def canonical_json(document: dict) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def config_hash(document: dict) -> str:
    return hashlib.sha256(canonical_json(document).encode()).hexdigest()[:16]


@dataclass
class ScenarioConfig:
    """Validated, materialized scenario ready to run."""

    scenario: str
    seed: int
    starts: int
    temperatures: list[float]
    crow: CrowParams
    reference: ReferenceWaveguideParams
    source: SourceParams
    signal_detector: DetectorParams
    idler_detector: DetectorParams
    signal_wavelength: float
    calibration_observations: list[list[float]]
    crow_calibrated: bool
    timing: dict[str, float]          # e halfwidths in seconds
    histogram: dict                    # bin_width (s), window (s), side_slots
    entanglement: dict | None
    output_dir: str | None
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def _detector_from_block(block: dict) -> DetectorParams:
    kwargs = {}
    if "efficiency" in block:
        kwargs["efficiency"] = block["efficiency"]
    if "dark_rate" in block:
        kwargs["dark_rate"] = block["dark_rate"]
    if "jitter_e_halfwidth_ps" in block:
        kwargs["jitter_e_halfwidth"] = block["jitter_e_halfwidth_ps"] * 1e-12
    return DetectorParams(**kwargs)


def _source_from_block(block: dict, scenario: str) -> SourceParams:
    rate = block.get(
        "repetition_rate",
        PULSED_REPETITION_RATE if scenario == "buffer" else TIME_BIN_REPETITION_RATE,
    )
    stats = block.get("pair_statistics", "thermal")
    if "mean_pair" in block:
        return SourceParams(
            mean_pair=block["mean_pair"],
            mean_noise_signal=block.get("mean_noise_signal", 0.0),
            mean_noise_idler=block.get("mean_noise_idler", 0.0),
            repetition_rate=rate,
            pair_statistics=stats,
        )
    total = block.get("total_signal_mean", 0.13 if scenario == "buffer" else 0.01)
    target = block.get("target_g2")
    if target is None:
        return SourceParams(mean_pair=total, repetition_rate=rate, pair_statistics=stats)
    return calibrate_noise(total, total, target, repetition_rate=rate, pair_statistics=stats)


def materialize(document: dict) -> ScenarioConfig:
    """Validate a raw JSON document and build the typed configuration."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        paths = "; ".join(
            f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
            for e in errors[:5]
        )
        raise ConfigError(f"invalid configuration: {paths}")

    scenario = document["scenario"]
    crow_block = dict(document.get("crow", {}))
    calibrated = (
        crow_block.get("band_center_ref") is not None
        and crow_block.get("band_halfwidth_angular") is not None
    )
    if crow_block.get("band_center_ref") is None:
        crow_block.pop("band_center_ref", None)
    if crow_block.get("band_halfwidth_angular") is None:
        crow_block.pop("band_halfwidth_angular", None)
    try:
        crow = CrowParams(**crow_block)
        reference = ReferenceWaveguideParams(**document.get("reference", {}))
        src_block = dict(document.get("source", {}))
        signal_wavelength = document.get(
            "signal_wavelength", src_block.get("signal_wavelength", DEFAULT_SIGNAL_WAVELENGTH)
        )
        for meta in ("signal_wavelength", "idler_wavelength", "pump_wavelength"):
            src_block.pop(meta, None)
        source = _source_from_block(src_block, scenario)
        det = document["detectors"]
        signal_detector = _detector_from_block(det["signal"])
        idler_detector = _detector_from_block(det["idler"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    timing_block = document.get("timing", {})
    timing = {
        "signal_crow": timing_block.get("signal_crow_e_halfwidth_ps", 28.9) * 1e-12,
        "signal_ref": timing_block.get("signal_ref_e_halfwidth_ps", 14.1) * 1e-12,
        "idler": timing_block.get("idler_e_halfwidth_ps", 12.0) * 1e-12,
    }
    hist_block = document.get("histogram", {})
    histogram = {
        "bin_width": hist_block.get("bin_width_ps", 5.0) * 1e-12,
        "window": hist_block.get("window_ns", 60.0) * 1e-9,
        "side_slots": tuple(hist_block.get("side_slots", (-3, -2, -1, 1, 2, 3))),
    }

    ent_block = document.get("entanglement")
    entanglement = None
    if ent_block is not None:
        entanglement = {
            "slot_count": ent_block.get("slot_count", 20000),
            "slot_interval": ent_block.get("slot_interval_ns", 0.5) * 1e-9,
            "arm_delay": ent_block.get("arm_delay_ns", 1.0) * 1e-9,
            "temperature_coefficient": ent_block.get(
                "temperature_coefficient", InterferometerParams().temperature_coefficient
            ),
            "mzi_reference_temperature": ent_block.get("mzi_reference_temperature", 22.74),
            "idler_temperatures": list(ent_block.get("idler_temperatures", [22.74, 22.94])),
            "chip_temperature": ent_block.get("chip_temperature", 21.6),
            "v_extra": ent_block.get("v_extra", 0.814),
        }
    if scenario == "entangle" and entanglement is None:
        raise ConfigError("entangle scenario requires an 'entanglement' block")

    return ScenarioConfig(
        scenario=scenario,
        seed=int(document["seed"]),
        starts=int(document["starts"]),
        temperatures=[float(t) for t in document["temperatures"]],
        crow=crow,
        reference=reference,
        source=source,
        signal_detector=signal_detector,
        idler_detector=idler_detector,
        signal_wavelength=float(signal_wavelength),
        calibration_observations=[
            [float(a), float(b)]
            for a, b in document.get("calibration_observations", PAPER_DELAY_OBSERVATIONS)
        ],
        crow_calibrated=calibrated,
        timing=timing,
        histogram=histogram,
        entanglement=entanglement,
        output_dir=document.get("output_dir"),
        raw=document,
    )


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as f:
            document = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return materialize(document)


def default_document(scenario: str, seed: int = 12345, starts: int | None = None) -> dict:
    """Ready-to-run configuration documents for the two scenario presets."""
    if scenario == "buffer":
        return {
            "scenario": "buffer",
            "seed": seed,
            "starts": starts if starts is not None else 1_000_000,
            "temperatures": [21.6, 30.0, 40.0, 50.0, 60.0, 65.4],
            "signal_wavelength": DEFAULT_SIGNAL_WAVELENGTH,
            "crow": {"band_center_ref": None, "band_halfwidth_angular": None},
            "reference": {},
            "calibration_observations": PAPER_DELAY_OBSERVATIONS,
            "source": {"total_signal_mean": 0.13, "target_g2": 3.25},
            "detectors": {
                "signal": {"efficiency": 0.14, "dark_rate": 10.0, "jitter_e_halfwidth_ps": 30.0},
                "idler": {"efficiency": 0.11, "dark_rate": 10.0, "jitter_e_halfwidth_ps": 30.0},
            },
            "timing": {
                "signal_crow_e_halfwidth_ps": 28.9,
                "signal_ref_e_halfwidth_ps": 14.1,
                "idler_e_halfwidth_ps": 12.0,
            },
            "histogram": {"bin_width_ps": 5.0, "window_ns": 60.0},
        }
    if scenario == "entangle":
        return {
            "scenario": "entangle",
            "seed": seed,
            "starts": starts if starts is not None else 500_000,
            "temperatures": [round(22.0 + 0.044 * k, 3) for k in range(10)],
            "signal_wavelength": DEFAULT_SIGNAL_WAVELENGTH,
            "source": {"mean_pair": 0.01, "repetition_rate": TIME_BIN_REPETITION_RATE},
            "detectors": {
                "signal": {"efficiency": 0.14, "dark_rate": 10.0, "jitter_e_halfwidth_ps": 30.0},
                "idler": {"efficiency": 0.11, "dark_rate": 10.0, "jitter_e_halfwidth_ps": 30.0},
            },
            "entanglement": {
                "slot_count": 20000,
                "slot_interval_ns": 0.5,
                "arm_delay_ns": 1.0,
                "idler_temperatures": [22.74, 22.94],
                "chip_temperature": 21.6,
                "v_extra": 0.814,
            },
        }
    raise ConfigError(f"unknown scenario preset '{scenario}'")


def write_default_config(scenario: str, path) -> None:
    Path(path).write_text(json.dumps(default_document(scenario), indent=2) + "\n")


def build_state(config: ScenarioConfig) -> TimeBinState:
    ent = config.entanglement
    return TimeBinState(slot_count=ent["slot_count"], slot_interval=ent["slot_interval"])


def build_mzi(config: ScenarioConfig) -> InterferometerParams:
    ent = config.entanglement
    return InterferometerParams(
        arm_delay=ent["arm_delay"],
        phase=0.0,
        temperature_coefficient=ent["temperature_coefficient"],
        reference_temperature=ent["mzi_reference_temperature"],
    )
