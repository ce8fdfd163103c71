"""Command-line front end binding the simulation modules together.

Subcommands
-----------
``ring-spectrum``
    Sample through- and drop-port transmission over a wavelength range.
``laser-curve``
    Sweep drive current, write the lasing curve, and fit its threshold.
``fwm-sweep``
    Sweep pump or signal power and report the log-log conversion slope.
``jsd``
    Run the scanned joint-spectral-density measurement, fit the ridge,
    and report the Schmidt decomposition of the underlying amplitude.
``fit``
    Fit a Lorentzian resonance or a lasing curve read from CSV.

Every run validates its configuration up front, writes deterministic
CSV/text outputs into the output directory, and records a manifest with
the configuration hash.  Exit codes: 0 success, 2 configuration or
parameter error, 3 numeric non-convergence or fit failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, default_config_text, parse_config
from .csvio import CsvParseError, format_float, read_table, write_table
from .fitting import (
    FitConvergenceError,
    FitReport,
    Spectrum,
    fit_lasing_curve,
    fit_lorentzian,
)
from .instrument import range_grid
from .fwm import conversion_sweep
from .jsd import jsa, ridge_fit, schmidt, simulate_jsd_scan
from .laser import ConvergenceError, output_power_curve, steady_state_roundtrip
from .ring import drop_spectrum, linewidth_ghz, through_spectrum


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, FitConvergenceError) as exc:
        print(f"numeric non-convergence: {exc}", file=sys.stderr)
        return 3
    except CsvParseError as exc:
        print(f"csv error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopfwm",
        description="Simulate a self-pumped microring mixing source and analyze its output.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", type=Path, default=None, help="config file (YAML)")
        sub.add_argument("--out", type=Path, default=None, help="output directory")
        sub.add_argument("--seed", type=int, default=None, help="override the config seed")

    ring = commands.add_parser(
        "ring-spectrum", help="sample through/drop port transmission spectra"
    )
    add_common(ring)
    ring.add_argument("--start-nm", type=float, default=None, help="range start (nm)")
    ring.add_argument("--stop-nm", type=float, default=None, help="range stop (nm)")
    ring.add_argument(
        "--resolution-pm", type=float, default=None, help="sample spacing (pm)"
    )
    ring.set_defaults(handler=_cmd_ring_spectrum)

    laser = commands.add_parser(
        "laser-curve", help="sweep drive current and fit the lasing threshold"
    )
    add_common(laser)
    laser.add_argument("--start-ma", type=float, default=60.0, help="first current (mA)")
    laser.add_argument("--stop-ma", type=float, default=150.0, help="last current (mA)")
    laser.add_argument("--step-ma", type=float, default=5.0, help="current step (mA)")
    laser.add_argument(
        "--cutoff-ma",
        type=float,
        default=130.0,
        help="exclude points above this current from the threshold fit",
    )
    laser.add_argument(
        "--tpa",
        type=float,
        nargs="?",
        const=0.02,
        default=None,
        metavar="DB_PER_MW",
        help="enable two-photon loss (optional coefficient, dB per mW)",
    )
    laser.set_defaults(handler=_cmd_laser_curve)

    sweep = commands.add_parser(
        "fwm-sweep", help="sweep pump or signal power and report the conversion slope"
    )
    add_common(sweep)
    sweep.add_argument(
        "--axis", choices=("pump", "signal"), default="pump", help="swept power"
    )
    sweep.add_argument("--start-mw", type=float, default=0.001, help="first power (mW)")
    sweep.add_argument("--stop-mw", type=float, default=1.0, help="last power (mW)")
    sweep.add_argument("--points", type=int, default=97, help="number of sweep points")
    sweep.add_argument(
        "--fixed-mw", type=float, default=1.0, help="power of the wave held fixed (mW)"
    )
    sweep.set_defaults(handler=_cmd_fwm_sweep)

    jsd = commands.add_parser(
        "jsd", help="simulate the scanned joint spectral density and analyze it"
    )
    add_common(jsd)
    jsd.set_defaults(handler=_cmd_jsd)

    fit = commands.add_parser("fit", help="fit a resonance or lasing curve from CSV")
    add_common(fit)
    fit.add_argument("input", type=Path, help="input CSV file")
    fit.add_argument(
        "--model", choices=("lorentzian", "lasing"), required=True, help="fit model"
    )
    fit.add_argument(
        "--column", default=None, help="value column name (default: second column)"
    )
    fit.add_argument(
        "--window-nm",
        type=float,
        nargs=2,
        default=None,
        metavar=("START", "STOP"),
        help="wavelength window for the Lorentzian fit",
    )
    fit.add_argument(
        "--cutoff-ma",
        type=float,
        default=None,
        help="high-current exclusion cutoff for the lasing fit",
    )
    fit.set_defaults(handler=_cmd_fit)
    return parser


def _load(args: argparse.Namespace) -> tuple[ExperimentConfig, str]:
    """Load the experiment config and remember where it came from."""
    if args.config is None:
        text = default_config_text()
        origin = "<packaged default>"
    else:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        origin = str(args.config)
    return parse_config(text), origin


def _out_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    directory = Path(args.out) if args.out is not None else Path(config.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_manifest(
    directory: Path,
    config: ExperimentConfig,
    origin: str,
    args: argparse.Namespace,
    outputs: list[str],
    started: float,
) -> None:
    seed = config.seed if args.seed is None else int(args.seed)
    manifest = {
        "command": args.command,
        "config_input": origin,
        "config_sha256": hashlib.sha256(config.source_text.encode("utf-8")).hexdigest(),
        "outputs": sorted(outputs),
        "seed": seed,
        "version": __version__,
        "wall_clock_seconds": round(time.monotonic() - started, 6),
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _report_lines(report: FitReport) -> list[str]:
    lines = [
        f"model: {report.model}",
        f"points_used: {report.points_used}",
        f"points_excluded: {report.points_excluded}",
        f"residual_rms: {format_float(report.residual_rms)}",
    ]
    for name, parameter in report.parameters.items():
        lines.append(
            f"{name}: {format_float(parameter.value)} +/- {format_float(parameter.sigma)}"
        )
    return lines


def _write_report(directory: Path, stem: str, report: FitReport) -> list[str]:
    """Write a fit report as text and as a one-row CSV; return file names."""
    text_name = f"{stem}.txt"
    csv_name = f"{stem}.csv"
    (directory / text_name).write_text(
        "\n".join(_report_lines(report)) + "\n", encoding="utf-8"
    )
    header = ["model", "points_used", "points_excluded", "residual_rms"]
    row = [report.model, str(report.points_used), str(report.points_excluded),
           format_float(report.residual_rms)]
    for name, parameter in report.parameters.items():
        header.extend([name, f"{name}_sigma"])
        row.extend([format_float(parameter.value), format_float(parameter.sigma)])
    (directory / csv_name).write_text(
        ",".join(header) + "\n" + ",".join(row) + "\n", encoding="utf-8"
    )
    return [text_name, csv_name]


def _cmd_ring_spectrum(args: argparse.Namespace) -> int:
    started = time.monotonic()
    config, origin = _load(args)
    resonance = config.resonance_nm
    start = args.start_nm if args.start_nm is not None else resonance - 3.0
    stop = args.stop_nm if args.stop_nm is not None else resonance + 3.0
    resolution = (
        args.resolution_pm if args.resolution_pm is not None else config.spectrum_resolution_pm
    )
    if not stop > start:
        raise ConfigError(f"wavelength range must satisfy start < stop, got [{start}, {stop}]")
    if resolution <= 0.0:
        raise ConfigError(f"resolution must be positive, got {resolution} pm")

    wavelengths = range_grid(start, stop, resolution * 1e-3)
    through = through_spectrum(wavelengths, resonance, config.geometry, config.coupling)
    drop = drop_spectrum(wavelengths, resonance, config.geometry, config.coupling)

    directory = _out_dir(args, config)
    write_table(directory / "through.csv", ("wavelength_nm", "through"), (wavelengths, through))
    write_table(directory / "drop.csv", ("wavelength_nm", "drop"), (wavelengths, drop))
    _write_manifest(directory, config, origin, args, ["through.csv", "drop.csv"], started)
    print(
        f"wrote {wavelengths.size}-point spectra to {directory} "
        f"(on-resonance through {format_float(float(through.min()))})"
    )
    return 0


def _cmd_laser_curve(args: argparse.Namespace) -> int:
    started = time.monotonic()
    config, origin = _load(args)
    if not args.stop_ma > args.start_ma:
        raise ConfigError(
            f"current range must satisfy start < stop, got [{args.start_ma}, {args.stop_ma}]"
        )
    if args.step_ma <= 0.0:
        raise ConfigError(f"current step must be positive, got {args.step_ma}")
    currents = range_grid(args.start_ma, args.stop_ma, args.step_ma)

    if args.tpa is None:
        drop, tap = output_power_curve(config.gain, config.budget, currents)
    else:
        points = [
            steady_state_roundtrip(
                config.gain, config.budget, current, tpa_db_per_mw=args.tpa
            )
            for current in currents
        ]
        drop = np.array([point.drop_port_power_mw for point in points])
        tap = np.array([point.tap_power_mw for point in points])

    directory = _out_dir(args, config)
    write_table(
        directory / "laser_curve.csv",
        ("current_mA", "drop_power_mw", "tap_power_uw"),
        (currents, drop, tap * 1e3),
    )
    report = fit_lasing_curve(currents, drop, exclusion_cutoff_ma=args.cutoff_ma)
    outputs = ["laser_curve.csv"] + _write_report(directory, "laser_fit", report)
    _write_manifest(directory, config, origin, args, outputs, started)
    print(
        f"threshold {format_float(report.value('threshold_ma'))} mA, "
        f"slope {format_float(report.value('slope_mw_per_ma'))} mW/mA "
        f"({report.points_used} points used)"
    )
    return 0


def _cmd_fwm_sweep(args: argparse.Namespace) -> int:
    started = time.monotonic()
    config, origin = _load(args)
    if args.points < 2:
        raise ConfigError(f"a sweep needs at least 2 points, got {args.points}")
    if args.start_mw <= 0.0 or not args.stop_mw > args.start_mw:
        raise ConfigError(
            f"power range must satisfy 0 < start < stop, got [{args.start_mw}, {args.stop_mw}]"
        )
    if args.fixed_mw <= 0.0:
        raise ConfigError(f"fixed power must be positive, got {args.fixed_mw}")

    values = np.geomspace(args.start_mw, args.stop_mw, args.points)
    idler = conversion_sweep(
        args.axis,
        values,
        args.fixed_mw,
        config.triplet,
        config.geometry,
        config.coupling,
        config.gamma_per_w_m,
    )
    slopes = np.polyfit(np.log10(values), np.log10(idler), 1)
    slope = float(slopes[0])

    directory = _out_dir(args, config)
    write_table(
        directory / "fwm_sweep.csv",
        (f"{args.axis}_power_mw", "idler_power_mw"),
        (values, idler),
        trailer_comments=(f"loglog_slope = {format_float(slope)}",),
    )
    _write_manifest(directory, config, origin, args, ["fwm_sweep.csv"], started)
    print(f"{args.axis} sweep log-log slope {format_float(slope)}")
    return 0


def _cmd_jsd(args: argparse.Namespace) -> int:
    started = time.monotonic()
    config, origin = _load(args)
    triplet = config.triplet
    signal_linewidth = linewidth_ghz(triplet.signal_nm, config.geometry, config.coupling)
    idler_linewidth = linewidth_ghz(triplet.idler_nm, config.geometry, config.coupling)

    matrix = simulate_jsd_scan(
        config.jsd_grid,
        triplet,
        pump_linewidth_ghz=config.pump_linewidth_ghz,
        signal_linewidth_ghz=signal_linewidth,
        idler_linewidth_ghz=idler_linewidth,
        resolution_fwhm_pm=config.jsd_resolution_pm,
    )
    signal_axis = config.jsd_grid.signal.wavelengths_nm()
    idler_axis = config.jsd_grid.idler.wavelengths_nm()
    ridge = ridge_fit(matrix, signal_axis, idler_axis)

    joint = jsa(
        config.jsd_grid,
        config.pump_linewidth_ghz,
        signal_linewidth,
        idler_linewidth,
        signal_resonance_nm=triplet.signal_nm,
        idler_resonance_nm=triplet.idler_nm,
        pump_resonance_nm=triplet.pump_nm,
    )
    decomposition = schmidt(joint)

    directory = _out_dir(args, config)
    grid = config.jsd_grid
    write_table(
        directory / "jsd_scan.csv",
        ("signal_nm", "idler_nm", "intensity"),
        (
            np.repeat(signal_axis, idler_axis.size),
            np.tile(idler_axis, signal_axis.size),
            matrix.ravel(),
        ),
        comments=(
            f"signal axis: {format_float(signal_axis[0])} to "
            f"{format_float(signal_axis[-1])} nm, step {format_float(grid.signal.step_pm)} pm",
            f"idler axis: {format_float(idler_axis[0])} to "
            f"{format_float(idler_axis[-1])} nm, step {format_float(grid.idler.step_pm)} pm",
            f"pump linewidth: {format_float(config.pump_linewidth_ghz)} GHz",
            f"idler resolution: {format_float(config.jsd_resolution_pm)} pm",
        ),
    )
    leading = ", ".join(format_float(c) for c in decomposition.coefficients[:8])
    report_lines = [
        f"ridge_slope: {format_float(ridge.slope)}",
        f"ridge_intercept_nm: {format_float(ridge.intercept_nm)}",
        f"ridge_rms_width_nm: {format_float(ridge.rms_width_nm)}",
        f"purity: {format_float(decomposition.purity)}",
        f"schmidt_number: {format_float(decomposition.schmidt_number)}",
        f"leading_coefficients: {leading}",
    ]
    (directory / "jsd_report.txt").write_text("\n".join(report_lines) + "\n", encoding="utf-8")
    _write_manifest(
        directory, config, origin, args, ["jsd_scan.csv", "jsd_report.txt"], started
    )
    print(
        f"ridge slope {format_float(ridge.slope)}, "
        f"purity {format_float(decomposition.purity)}, "
        f"K {format_float(decomposition.schmidt_number)}"
    )
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    started = time.monotonic()
    config, origin = _load(args)
    header, data, _ = read_table(args.input)
    if data.shape[0] == 0:
        raise CsvParseError("line 2: file has a header but no data rows")
    if args.column is not None:
        if args.column not in header:
            raise ConfigError(
                f"column '{args.column}' not in file columns {', '.join(header)}"
            )
        value_index = header.index(args.column)
    else:
        value_index = 1
        if len(header) < 2:
            raise CsvParseError("line 1: need at least two columns")
    xs = data[:, 0]
    ys = data[:, value_index]

    try:
        if args.model == "lorentzian":
            kind = header[value_index] if header[value_index] in ("through", "drop") else "idler"
            spacing = float(np.median(np.diff(xs)))
            spectrum = Spectrum(xs, ys, spacing * 1e3, kind)
            window = (
                tuple(args.window_nm) if args.window_nm is not None else (xs[0], xs[-1])
            )
            report = fit_lorentzian(spectrum, window)
        else:
            report = fit_lasing_curve(xs, ys, exclusion_cutoff_ma=args.cutoff_ma)
    except FitConvergenceError:
        raise
    except ValueError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return 3

    directory = _out_dir(args, config)
    outputs = _write_report(directory, "fit_report", report)
    _write_manifest(directory, config, origin, args, outputs, started)
    for line in _report_lines(report):
        print(line)
    return 0
