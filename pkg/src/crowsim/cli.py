"""Command-line front end.

Subcommands: buffer-scan, entangle-scan, calibrate, fit-histogram.
Exit codes: 0 success, 2 configuration error, 3 physics error, 4 fit failure.
The output directory resolves as --out, then $CROWSIM_OUT, then the config's
output_dir field.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import figures
from .analysis import fit_gaussian_peak
from .detectors import CoincidenceHistogram
from .errors import ConfigError, FitError, PhysicsError
from .runner import run_buffer_scan, run_calibration, run_entanglement_scan
from .scenarios import load_config

EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_FIT = 4


def _resolve_out(args, config=None) -> Path:
    out = getattr(args, "out", None) or os.environ.get("CROWSIM_OUT") or (
        config.output_dir if config is not None else None
    )
    if out is None:
        raise ConfigError("no output directory: pass --out, set CROWSIM_OUT, "
                          "or put output_dir in the config")
    return Path(out)


def _load(args):
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed,
                         raw={**config.raw, "seed": args.seed})
    return config


def _cmd_buffer_scan(args) -> int:
    config = _load(args)
    out = _resolve_out(args, config)
    rows = run_buffer_scan(config, out, workers=args.workers)
    if not rows:
        raise FitError("scan produced no results")
    for r in rows:
        print(
            f"T = {r['temp_C']:6.2f} °C  delay = {r['delay_ps']:7.2f} "
            f"± {r['delay_err_ps']:.2f} ps  g2(crow) = {r['g2_crow']:.3f} "
            f"± {r['g2_err']:.3f}  g2(ref) = {r['g2_ref']:.3f}"
        )
    print(f"report written to {out}")
    return 0


def _cmd_entangle_scan(args) -> int:
    config = _load(args)
    out = _resolve_out(args, config)
    results = run_entanglement_scan(config, out, workers=args.workers)
    for (fit, bell), temp in zip(
        results, config.entanglement["idler_temperatures"]
    ):
        flag = "violated" if bell.violated else "not violated"
        print(
            f"idler {temp:g} °C: V = {fit.visibility:.3f} ± {fit.visibility_err:.3f} "
            f"(Bell {flag}, margin {bell.margin:+.3f})"
        )
    print(f"report written to {out}")
    return 0


def _cmd_calibrate(args) -> int:
    config = _load(args)
    out = _resolve_out(args, config)
    result = run_calibration(config, out)
    params = result.params
    print(
        f"band_center_ref = {params.band_center_ref:.4f} nm, "
        f"band_halfwidth_angular = {params.band_halfwidth_angular:.6e} rad/s "
        f"({result.branch})"
    )
    print("residuals (ps): " + ", ".join(f"{r:+.3f}" for r in result.residuals_ps))
    print(f"calibration written to {out}/calibration.json")
    return 0


def _cmd_fit_histogram(args) -> int:
    hist = CoincidenceHistogram.from_csv(args.histogram)
    if args.window is not None:
        lo, hi = (float(v) * 1e-12 for v in args.window.split(","))
    else:
        centers = hist.bin_centers
        peak = centers[int(hist.counts.argmax())]
        span = 50 * hist.bin_width
        lo, hi = peak - span, peak + span
    fit = fit_gaussian_peak(hist, (lo, hi))
    print(json.dumps(fit.to_dict(), sort_keys=True, indent=2))
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "peakfit.json").write_text(
            json.dumps(fit.to_dict(), sort_keys=True, indent=2) + "\n"
        )
        figures.plot_histogram_fit(hist, fit, out / "peakfit.png", window=(lo, hi))
        print(f"fit written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Slow-light single-photon buffer simulator and analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=1,
                       help="Monte Carlo worker threads (does not affect results)")
        p.set_defaults(func=func)
        return p

    add_run_command("buffer-scan", _cmd_buffer_scan,
                    "simulate the temperature-scanned buffering experiment")
    add_run_command("entangle-scan", _cmd_entangle_scan,
                    "simulate the time-bin entanglement storage fringes")
    add_run_command("calibrate", _cmd_calibrate,
                    "fit band parameters to measured delays")

    p = sub.add_parser("fit-histogram", help="Gaussian peak fit of a histogram CSV")
    p.add_argument("histogram", help="histogram CSV (bin_center_ps,counts)")
    p.add_argument("--window", default=None,
                   help="fit window as 'lo_ps,hi_ps' (default: around the maximum)")
    p.add_argument("--out", default=None, help="optional output directory")
    p.set_defaults(func=_cmd_fit_histogram)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
