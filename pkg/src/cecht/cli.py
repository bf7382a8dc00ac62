"""``cecht`` command-line front end.

Exit codes: 0 ok, 2 configuration error, 3 degenerate design, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .calibration import DegenerateDesignError, calibration_report
from .config import ConfigError, EchtConfig, config_from_options
from .signals import SignalIOError, read_signal
from .tracking import FrequencyTracker, NoPeakError, TrackerConfig, estimate_f0

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("cecht")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# -- configuration -------------------------------------------------------------

_OVERRIDES = ("f0", "fs", "n", "order", "band", "family", "dft_length")


def _short_form(cfg: EchtConfig) -> dict:
    bp = cfg.bandpass
    d = {"f0": cfg.f0, "fs": cfg.sampling_rate, "n": cfg.window_length}
    if cfg.dft_length != cfg.window_length:
        d["dft_length"] = cfg.dft_length
    if bp is None:
        d["identity_filter"] = True
    else:
        d.update(order=bp.order, band=list(bp.band_hz), family=bp.family)
    return d


def _load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_IO) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed JSON in {path}: {exc}", EXIT_CONFIG) from exc
    if not isinstance(data, dict):
        raise CliError(f"config {path} must hold a JSON object", EXIT_CONFIG)
    return data


def load_config(args, fs_hint: float | None = None) -> tuple[EchtConfig, int]:
    """Config file plus flag overrides; returns ``(config, seed)``."""
    data = _load_json(args.config) if args.config else {}
    seed = data.pop("seed", 0)
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if getattr(args, "identity_filter", False):
        overrides["identity_filter"] = True
    if fs_hint is not None and "fs" not in overrides and "fs" not in data and "window_length" not in data:
        overrides["fs"] = fs_hint
    try:
        if "window_length" in data and not overrides:
            cfg = EchtConfig.from_dict(data)
        else:
            if "window_length" in data:
                data = _short_form(EchtConfig.from_dict(data))
            cfg = config_from_options(**{**data, **overrides})
    except (ConfigError, ValueError, TypeError) as exc:
        raise CliError(f"invalid config: {exc}", EXIT_CONFIG) from exc
    if args.seed is not None:
        seed = args.seed
    try:
        seed = int(seed)
    except (TypeError, ValueError) as exc:
        raise CliError(f"seed must be an integer, got {seed!r}", EXIT_CONFIG) from exc
    return cfg, seed


# -- output --------------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc
    log.info("wrote %s", out)


def _emit_result(result: ex.ExperimentResult, out: str | None) -> None:
    if out is not None:
        result.manifest.outputs = [out]
    _emit(result.to_csv(), out)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- subcommands -------------------------------------------------------------------


def cmd_calibrate(args) -> int:
    fs_hint = None
    x = None
    if args.input:
        x, fs_hint = _read_input(args.input)
    cfg, seed = load_config(args, fs_hint)
    if x is not None:
        lo, hi = cfg.bandpass.band_hz if cfg.bandpass else (0.5 * cfg.f0, 1.5 * cfg.f0)
        try:
            f0 = estimate_f0(x, cfg.sampling_rate, (lo, hi))
        except (NoPeakError, ValueError) as exc:
            _note(f"f0 estimate failed ({exc}); keeping f0 = {cfg.f0} Hz")
        else:
            cfg = cfg.retuned(f0)
    report = calibration_report(cfg, seed=seed)
    manifest = ex.make_manifest("calibrate", cfg, seed=seed)
    if args.out:
        manifest.outputs = [args.out]
    _emit(json.dumps({**report, "manifest": manifest.to_dict()}, indent=2) + "\n", args.out)
    return EXIT_OK


def _read_input(path):
    try:
        return read_signal(path)
    except SignalIOError as exc:
        raise CliError(str(exc), EXIT_IO) from exc


def cmd_estimate(args) -> int:
    x, fs = _read_input(args.input)
    if args.fs is not None and args.fs != fs:
        raise CliError(f"--fs {args.fs} disagrees with the file's sampling rate {fs}", EXIT_CONFIG)
    cfg, seed = load_config(args, fs)
    if cfg.sampling_rate != fs:
        raise CliError(f"config fs {cfg.sampling_rate} disagrees with the file's {fs}", EXIT_CONFIG)
    tk = TrackerConfig((0.6 * cfg.f0, min(1.4 * cfg.f0, 0.49 * fs)), fs,
                       update_interval=args.update_interval)
    tracker = FrequencyTracker(cfg, tk, calibrate=not args.no_calibrate, track=args.track)
    idx, z, f0 = tracker.run(x)
    digest = hashlib.sha256(np.ascontiguousarray(x).tobytes()).hexdigest()[:16]
    manifest = ex.ExperimentManifest(
        "estimate", cfg.to_dict(), signals=[{"input": str(args.input), "sha256": digest, "fs_hz": fs}],
        seed=seed, params={"track": args.track, "calibrate": not args.no_calibrate,
                           "update_interval": args.update_interval},
        outputs=[args.out] if args.out else [],
    )
    buf = io.StringIO()
    buf.write(f"# schema: cecht.estimate/{ex.SCHEMA_VERSION}\n")
    buf.write(f"# manifest: {manifest.to_json()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "phase_deg", "amplitude", "f0_hz_active"])
    for i, v, f in zip(idx, z, f0):
        w.writerow([int(i), repr(math.degrees(math.atan2(v.imag, v.real))), repr(float(abs(v))), repr(float(f))])
    _emit(buf.getvalue(), args.out)
    if args.events:
        tracker.write_event_log(args.events)
    if tracker.stream.dropped:
        _note(f"dropped {tracker.stream.dropped} non-finite samples")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        ex._panel_name(args.panel)
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc
    cfg, seed = load_config(args)
    result = ex.run_sweep(args.panel, cfg, seed=seed, grid=args.grid,
                          phase_points=args.phase_points, noise_trials=args.trials)
    _emit_result(result, args.out)
    return EXIT_OK


def cmd_mc_table(args) -> int:
    cfg, seed = load_config(args)
    result = ex.run_mc_table(cfg, seed=seed, trials=args.trials, snrs=tuple(args.snr))
    _emit_result(result, args.out)
    return EXIT_OK


def cmd_chirp_replication(args) -> int:
    seed = 0 if args.seed is None else args.seed
    kw = {}
    if args.n is not None:
        kw["window_length"] = args.n
    if args.fs is not None:
        kw["sampling_rate"] = args.fs
    if args.order is not None:
        kw["order"] = args.order
    result = ex.run_chirp_replication(None, seed=seed, mode=args.mode, f_start=args.f_start,
                                      f_end=args.f_end, n_points=args.points,
                                      duration=args.duration, **kw)
    _emit_result(result, args.out)
    return EXIT_OK


def cmd_track_drift(args) -> int:
    cfg, seed = load_config(args)
    result = ex.run_track_drift(cfg, seed=seed, signal_f0=args.signal_f0, drift_hz=args.drift_hz,
                                drift_period=args.drift_period, duration=args.duration,
                                snr_in=args.snr)
    _emit_result(result, args.out)
    s = result.summary
    _note(f"tracked c-ecHT has the smallest |bias|: {s['tracked_cecht_best']}; "
          f"tracked ecHT worse than fixed ecHT: {s['tracked_echt_worse_than_fixed_echt']}; "
          f"bias slope {s['frequency_shift']['slope']:.3f} vs -tau_g {-s['frequency_shift']['tau_g']:.3f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg, seed = load_config(args)
    result = ex.run_bench(cfg, seed=seed, lengths=tuple(args.lengths))
    _emit_result(result, args.out)
    s = result.summary
    _note(f"median overhead {s['median_overhead']:.2f}x; "
          f"endpoint path never slower: {s['endpoint_never_slower']}")
    return EXIT_OK


def cmd_rerun(args) -> int:
    try:
        manifest = ex.read_manifest(args.file)
    except OSError as exc:
        raise CliError(f"cannot read {args.file}: {exc}", EXIT_IO) from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"no usable manifest in {args.file}: {exc}", EXIT_CONFIG) from exc
    if manifest.experiment in ("calibrate", "estimate"):
        raise CliError(f"rerun supports table experiments, not {manifest.experiment!r}", EXIT_CONFIG)
    _emit(ex.rerun(manifest).to_csv(), args.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------


def _config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--f0", type=float, help="centre frequency (Hz)")
    g.add_argument("--fs", type=float, help="sampling rate (Hz)")
    g.add_argument("--n", type=int, help="window length (samples)")
    g.add_argument("--order", type=int, help="bandpass prototype order")
    g.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"), help="passband (Hz)")
    g.add_argument("--family", help="filter family")
    g.add_argument("--dft-length", dest="dft_length", type=int, help="DFT length L >= N")
    g.add_argument("--identity-filter", action="store_true", help="use H = 1")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cecht", description="Calibrated endpoint-corrected Hilbert transform")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="endpoint gains and calibration factor (JSON)")
    _config_flags(p)
    p.add_argument("--input", help="signal file to estimate f0 from first")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("estimate", help="stream a signal file through the c-ecHT")
    _config_flags(p)
    p.add_argument("input", help="signal file (.csv or .f64 with JSON sidecar)")
    p.add_argument("--track", action="store_true", help="follow the centre frequency")
    p.add_argument("--no-calibrate", action="store_true", help="plain ecHT")
    p.add_argument("--update-interval", type=float, default=4.0, help="tracker update period (s)")
    p.add_argument("--events", help="write the tracker event log here")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="single-tone parameter sweep (CSV)")
    _config_flags(p)
    p.add_argument("panel", help="A-F or bandwidth/order/detuning/snr/family/window-cycles")
    p.add_argument("--grid", nargs="+", type=_grid_value, help="override the axis grid")
    p.add_argument("--phase-points", type=int, default=ex.PHASE_GRID_POINTS)
    p.add_argument("--trials", type=int, default=ex.NOISE_TRIALS, help="noise trials per point")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc-table", help="Monte Carlo phase spread vs closed forms (CSV)")
    _config_flags(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--snr", type=float, nargs="+", default=list(ex.MC_SNRS))
    p.set_defaults(func=cmd_mc_table)

    p = sub.add_parser("chirp-replication", help="swept-tone error table (CSV)")
    _config_flags(p)
    p.add_argument("--mode", choices=("sweep", "chirp"), default="sweep")
    p.add_argument("--f-start", type=float, default=2.0)
    p.add_argument("--f-end", type=float, default=3.0)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--duration", type=float, default=60.0, help="chirp length in chirp mode (s)")
    p.set_defaults(func=cmd_chirp_replication)

    p = sub.add_parser("track-drift", help="fixed vs tracked centre frequency (CSV)")
    _config_flags(p)
    p.add_argument("--signal-f0", type=float, default=9.6)
    p.add_argument("--drift-hz", type=float, default=0.3)
    p.add_argument("--drift-period", type=float, default=40.0)
    p.add_argument("--duration", type=float, default=120.0)
    p.add_argument("--snr", type=float, default=None)
    p.set_defaults(func=cmd_track_drift)

    p = sub.add_parser("bench", help="per-window timing (CSV)")
    _config_flags(p)
    p.add_argument("--lengths", type=int, nargs="+", default=[256, 1024, 16384])
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rerun", help="regenerate a CSV from its embedded manifest")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rerun)
    return parser


def _grid_value(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        _note(f"cecht: {exc}")
        return exc.code
    except DegenerateDesignError as exc:
        _note(f"cecht: degenerate design: {exc}")
        return EXIT_DEGENERATE
    except ConfigError as exc:
        _note(f"cecht: invalid config: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _note(f"cecht: I/O error: {exc}")
        return EXIT_IO
    except ValueError as exc:
        _note(f"cecht: invalid config: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
