"""Reproducible experiments behind the command-line harness.

Every runner returns an :class:`ExperimentResult` whose manifest records the
design, signals, grids, seed and version. CSV outputs carry the manifest in
``#`` header lines; :func:`rerun` rebuilds a file from that header.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import io
import json
import math
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy import signal as sps

from . import __version__
from ._runtime import ordered_map, stream
from .calibration import (
    compute_endpoint_gains,
    deterministic_calibration_mse,
    noise_gain,
    optimal_calibration,
    predicted_phase_sigma,
)
from .config import ConfigError, EchtConfig, default_config
from .engine import echt_endpoint, echt_window
from .filters import FAMILIES, BandpassSpec
from .signals import SignalSpec, synthesize
from .stats import summarize_errors, wrap
from .tracking import FrequencyTracker, TrackerConfig

SCHEMA_VERSION = 1
PHASE_GRID_POINTS = 360
NOISE_TRIALS = 2000
MC_SNRS = (0.1, 1.0, 10.0, 100.0)
# Monte Carlo trials are drawn in fixed-size chunks, each from its own stream,
# so a larger run extends a smaller one instead of reshuffling it
MC_CHUNK = 5000

PANELS = {
    "A": "bandwidth",
    "B": "order",
    "C": "detuning",
    "D": "snr",
    "E": "family",
    "F": "window-cycles",
}

DEFAULT_GRIDS: dict[str, tuple] = {
    "bandwidth": tuple(round(0.1 * i, 10) for i in range(1, 16)),
    "order": tuple(range(1, 9)),
    "detuning": tuple(round(0.02 * i, 10) for i in range(-10, 11)),
    "snr": (0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0),
    "family": FAMILIES,
    "window-cycles": tuple(round(1.0 + 0.1 * i, 10) for i in range(31)),
}

SWEEP_COLUMNS = (
    "axis_value", "echt_mean_deg", "echt_std_deg", "cecht_mean_deg", "cecht_std_deg", "seed",
    "echt_bias_deg", "cecht_bias_deg", "echt_max_deg", "cecht_max_deg", "window_length",
)


# -- manifests and output files ----------------------------------------------


@dataclass
class ExperimentManifest:
    """Everything needed to regenerate one output file."""

    experiment: str
    config: dict | None
    signals: list[dict] = field(default_factory=list)
    axes: dict = field(default_factory=dict)
    seed: int | None = None
    params: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    timestamp: str = ""

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentManifest":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(**d)


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for reproducible builds
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    return now.replace(microsecond=0).isoformat()


def make_manifest(experiment: str, config: EchtConfig | None, **kwargs) -> ExperimentManifest:
    stamp = _timestamp()
    cfg = None if config is None else config.to_dict()
    return ExperimentManifest(experiment, _jsonable(cfg), timestamp=stamp, **_jsonable(kwargs))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass
class ExperimentResult:
    """Rows of one experiment, its manifest and a summary for JSON output."""

    manifest: ExperimentManifest
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: cecht.{self.manifest.experiment}/{SCHEMA_VERSION}\n")
        buf.write(f"# manifest: {self.manifest.to_json()}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        if str(path) not in self.manifest.outputs:
            self.manifest.outputs.append(str(path))
        path.write_text(self.to_csv())
        return path

    def to_json(self) -> str:
        return json.dumps(
            {"manifest": self.manifest.to_dict(), "summary": _jsonable(self.summary),
             "columns": list(self.columns), "rows": _jsonable(self.rows)},
            indent=2, sort_keys=True,
        )


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_manifest(path) -> ExperimentManifest:
    """Manifest embedded in a CSV (``# manifest:`` line) or JSON output."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        return ExperimentManifest.from_dict(json.loads(text)["manifest"])
    for line in text.splitlines():
        if line.startswith("# manifest: "):
            return ExperimentManifest.from_dict(json.loads(line[len("# manifest: "):]))
        if not line.startswith("#"):
            break
    raise ConfigError(f"{path} carries no manifest")


def rerun(manifest: ExperimentManifest, workers: int | None = None) -> ExperimentResult:
    """Run the experiment a manifest describes and attach that same manifest."""
    try:
        runner = RUNNERS[manifest.experiment]
    except KeyError:
        raise ConfigError(f"unknown experiment {manifest.experiment!r}") from None
    config = None if manifest.config is None else EchtConfig.from_dict(manifest.config)
    result = runner(config=config, seed=manifest.seed, workers=workers, **manifest.params)
    result.manifest = ExperimentManifest.from_dict(manifest.to_dict())
    return result


# -- single-tone scoring -----------------------------------------------------


def _tone_windows(N: int, omega: float, phis: np.ndarray) -> np.ndarray:
    n = np.arange(N)
    return np.cos(omega * n[None, :] + phis[:, None])


def phase_grid(points: int = PHASE_GRID_POINTS) -> np.ndarray:
    return 2 * np.pi * np.arange(points) / points


def tone_endpoint_errors(
    design: EchtConfig,
    omega: float,
    phis: np.ndarray,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Endpoint phase errors of ecHT and c-ecHT on unit tones at ``omega``.

    The design's own single-tone calibration (at its ``f0``) is used for the
    c-ecHT. Returns ``(err_echt, err_cecht, z_echt)`` with errors in radians.
    """
    plain = design.uncalibrated()
    C = optimal_calibration(compute_endpoint_gains(plain, group_delay=False)).C
    N = design.window_length
    x = _tone_windows(N, omega, np.asarray(phis, dtype=float))
    if noise_sigma > 0:
        x = x + rng.normal(0.0, noise_sigma, x.shape)
    z = echt_endpoint(x, plain)
    truth = omega * (N - 1) + phis
    return wrap(np.angle(z) - truth), wrap(np.angle(C * z) - truth), z


def _row_stats(err: np.ndarray) -> tuple[float, float, float, float]:
    """Mean |e|, std of the signed error, circular mean, max |e|; degrees."""
    s = summarize_errors(err)
    return (math.degrees(s.mean_abs), math.degrees(s.linear_std),
            math.degrees(s.circular_mean), math.degrees(s.max_abs))


# -- parameter sweeps ----------------------------------------------------------


def _panel_name(panel: str) -> str:
    p = str(panel)
    if p.upper() in PANELS:
        return PANELS[p.upper()]
    if p.lower() in PANELS.values():
        return p.lower()
    raise ConfigError(f"unknown panel {panel!r}; expected one of {sorted(PANELS)} or {sorted(PANELS.values())}")


def _need_bandpass(base: EchtConfig, name: str) -> BandpassSpec:
    if base.bandpass is None:
        raise ConfigError(f"panel {name!r} varies the bandpass; the base config has none")
    return base.bandpass


def _point_config(base: EchtConfig, name: str, value) -> tuple[EchtConfig, float]:
    """Design and signal frequency (Hz) for one sweep grid point."""
    f0 = base.f0
    if name == "bandwidth":
        bp = _need_bandpass(base, name)
        b = float(value)
        bp = dataclasses.replace(bp, l_freq=f0 * (1 - b / 2), h_freq=f0 * (1 + b / 2))
        return base.replace(bandpass=bp), f0
    if name == "order":
        bp = dataclasses.replace(_need_bandpass(base, name), order=int(value))
        return base.replace(bandpass=bp), f0
    if name == "family":
        bp = dataclasses.replace(_need_bandpass(base, name), family=str(value))
        return base.replace(bandpass=bp), f0
    if name == "detuning":
        return base, f0 * (1 + float(value))
    if name == "snr":
        return base, f0
    # window-cycles
    N = int(round(float(value) * base.sampling_rate / f0))
    L = None if base.dft_length == base.window_length else max(N, base.dft_length)
    return base.replace(window_length=N, dft_length=L), f0


def run_sweep(
    panel: str,
    config: EchtConfig | None = None,
    *,
    seed: int | None = 0,
    grid: Sequence | None = None,
    phase_points: int = PHASE_GRID_POINTS,
    noise_trials: int = NOISE_TRIALS,
    workers: int | None = None,
) -> ExperimentResult:
    """One panel of the single-tone parameter study.

    Every grid point is scored over a uniform ``phase_points`` grid of
    initial phases. The noise panel instead runs ``noise_trials`` trials per
    point, cycling through the same phase grid, with white noise of variance
    ``1/SNR``. ``*_mean_deg`` is the mean absolute error, ``*_std_deg`` the
    standard deviation of the signed error, ``*_bias_deg`` the circular mean.
    """
    name = _panel_name(panel)
    seed = 0 if seed is None else int(seed)
    base = (config or default_config()).uncalibrated()
    values = tuple(DEFAULT_GRIDS[name] if grid is None else grid)
    if not values:
        raise ConfigError("empty sweep grid")
    panel_idx = list(PANELS.values()).index(name)
    phis = phase_grid(phase_points)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            points = [_point_config(base, name, v) for v in values]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def evaluate(i):
        design, f_sig = points[i]
        omega = 2 * np.pi * f_sig / design.sampling_rate
        if name == "snr":
            trial_phis = phis[np.arange(noise_trials) % len(phis)]
            rng = stream(seed, panel_idx, i)
            e1, e2, _ = tone_endpoint_errors(design, omega, trial_phis,
                                             1 / math.sqrt(float(values[i])), rng)
        else:
            e1, e2, _ = tone_endpoint_errors(design, omega, phis)
        m1, s1, b1, x1 = _row_stats(e1)
        m2, s2, b2, x2 = _row_stats(e2)
        return (values[i], m1, s1, m2, s2, seed, b1, b2, x1, x2, design.window_length)

    rows = ordered_map(evaluate, range(len(values)), workers)
    manifest = make_manifest(
        f"sweep-{name}", base,
        signals=[{"kind": "tone", "amplitude": 1.0, "f0": base.f0,
                  "sampling_rate": base.sampling_rate}],
        axes={name: list(values), "phi0_points": phase_points,
              "noise_trials": noise_trials if name == "snr" else None},
        seed=seed,
        params={"panel": name, "grid": list(values), "phase_points": phase_points,
                "noise_trials": noise_trials},
    )
    return ExperimentResult(manifest, SWEEP_COLUMNS, rows)


# -- calibration report --------------------------------------------------------


def run_calibrate(config: EchtConfig | None = None, *, seed: int | None = None,
                  workers: int | None = None) -> ExperimentResult:
    """Endpoint gains, calibration factor and noise gain of one design."""
    from .calibration import calibration_report

    cfg = (config or default_config()).uncalibrated()
    report = calibration_report(cfg, seed=seed)
    manifest = make_manifest("calibrate", cfg, seed=seed)
    cols = tuple(report)
    return ExperimentResult(manifest, cols, [tuple(report[c] for c in cols)], report)


# -- Monte Carlo phase-sigma table -----------------------------------------------


def run_mc_table(
    config: EchtConfig | None = None,
    *,
    seed: int | None = 0,
    trials: int = 100_000,
    snrs: Sequence[float] = MC_SNRS,
    workers: int | None = None,
) -> ExperimentResult:
    """Monte Carlo endpoint phase spread next to the two closed forms.

    ``mc_deg`` is the RMS of ``arg(z_noisy / z_clean)`` through the real
    ecHT: the part of the error caused by noise. ``mc_total_deg`` is the RMS
    error of the calibrated estimate against the true phase, which also
    contains the leakage ripple. ``exact_deg``/``simple_deg`` use the
    noise-only error ``J = 1/SNR_out``; the ``*_leak_deg`` columns use
    ``J = l + (1 - l)/SNR_out``.
    """
    if trials < 10_000:
        raise ConfigError(f"need at least 10^4 trials, got {trials}")
    seed = 0 if seed is None else int(seed)
    cfg = (config or default_config()).uncalibrated()
    gains = compute_endpoint_gains(cfg, group_delay=False)
    C = optimal_calibration(gains).C
    g_noise = noise_gain(cfg)
    g_snr = gains.power / g_noise
    N, omega = cfg.window_length, cfg.omega0
    n = np.arange(N)
    chunks = [(i, c) for i in range(len(snrs)) for c in range(-(-trials // MC_CHUNK))]

    def chunk(item):
        i, c = item
        size = min(MC_CHUNK, trials - c * MC_CHUNK)
        rng = stream(seed, i, c)
        phi = rng.uniform(0, 2 * np.pi, size)
        clean = np.cos(omega * n[None, :] + phi[:, None])
        noisy = clean + rng.normal(0, 1 / math.sqrt(snrs[i]), clean.shape)
        z0 = echt_endpoint(clean, cfg)
        z1 = echt_endpoint(noisy, cfg)
        e_noise = wrap(np.angle(z1) - np.angle(z0))
        e_total = wrap(np.angle(C * z1) - (omega * (N - 1) + phi))
        return np.sum(e_noise ** 2), np.sum(e_total ** 2)

    sums = ordered_map(chunk, chunks, workers)
    rows = []
    for i, snr in enumerate(snrs):
        s = [v for (j, _), v in zip(chunks, sums) if j == i]
        mc = math.degrees(math.sqrt(sum(a for a, _ in s) / trials))
        total = math.degrees(math.sqrt(sum(b for _, b in s) / trials))
        snr_out = g_snr * snr
        J0 = 1 / snr_out
        J1 = deterministic_calibration_mse(gains, snr_out)
        rows.append((
            snr, mc,
            math.degrees(predicted_phase_sigma(J0, "exact")),
            math.degrees(predicted_phase_sigma(J0, "simple")),
            total,
            math.degrees(predicted_phase_sigma(J1, "exact")),
            math.degrees(predicted_phase_sigma(J1, "simple")),
            J0, J1, trials, seed,
        ))
    manifest = make_manifest(
        "mc-table", cfg,
        signals=[{"kind": "tone_plus_noise", "f0": cfg.f0, "amplitude": 1.0,
                  "phi0": "uniform", "sampling_rate": cfg.sampling_rate}],
        axes={"snr_in": list(snrs)}, seed=seed,
        params={"trials": trials, "snrs": list(snrs)},
    )
    cols = ("snr_in", "mc_deg", "exact_deg", "simple_deg", "mc_total_deg",
            "exact_leak_deg", "simple_leak_deg", "J", "J_leak", "trials", "seed")
    summary = {"G_noise": g_noise, "G_SNR": g_snr, "leakage": gains.leakage}
    return ExperimentResult(manifest, cols, rows, summary)


# -- swept-tone replication ------------------------------------------------------

CHIRP_COLUMNS = ("estimator", "phase_mean_deg", "phase_std_deg", "phase_max_deg",
                 "amp_mean_pct", "amp_std_pct", "amp_max_pct")


def _chirp_design(f: float, fs: float, N: int, order: int, band_ratios) -> EchtConfig:
    bp = BandpassSpec(band_ratios[0] * f, band_ratios[1] * f, fs, order=order)
    return EchtConfig(N, fs, f, bp)


def run_chirp_replication(
    config: EchtConfig | None = None,
    *,
    seed: int | None = 0,
    mode: str = "sweep",
    f_start: float = 2.0,
    f_end: float = 3.0,
    n_points: int = 1000,
    window_length: int = 256,
    sampling_rate: float = 256.0,
    order: int = 2,
    band_ratios: Sequence[float] = (0.75, 1.25),
    phi0: float = 0.0,
    duration: float = 60.0,
    workers: int | None = None,
) -> ExperimentResult:
    """Endpoint error of ecHT and c-ecHT over tones from ``f_start`` to ``f_end``.

    ``mode="sweep"`` scores one unit tone per frequency on a uniform grid
    (window ``N``, phase ``phi0`` at the first sample). ``mode="chirp"``
    synthesises one continuous linear chirp of ``duration`` seconds and
    scores ``n_points`` evenly spaced endpoints against its exact phase. In
    both modes the bandpass spans ``band_ratios`` times the local frequency
    and the c-ecHT uses the matching single-tone calibration.
    """
    if mode not in ("sweep", "chirp"):
        raise ConfigError(f"mode must be 'sweep' or 'chirp', got {mode!r}")
    seed = 0 if seed is None else int(seed)
    N, fs = int(window_length), float(sampling_rate)
    if mode == "sweep":
        freqs = np.linspace(f_start, f_end, n_points)
        n = np.arange(N)
        signals = [{"kind": "tone", "f_start": f_start, "f_end": f_end, "points": n_points,
                    "phi0": phi0, "sampling_rate": fs}]

        def point(i):
            f = freqs[i]
            design = _chirp_design(f, fs, N, order, band_ratios)
            x = np.cos(2 * np.pi * f * n / fs + phi0)
            return design, x, 2 * np.pi * f * (N - 1) / fs + phi0
    else:
        spec = SignalSpec("linear_chirp", f_start=f_start, f_end=f_end, duration=duration,
                          sampling_rate=fs, phi0=phi0, seed=seed)
        xs, ref = synthesize(spec)
        ends = np.linspace(N - 1, spec.n_samples - 1, n_points).round().astype(int)
        f_inst = f_start + (f_end - f_start) * (ends / fs) / duration
        signals = [spec.to_dict()]

        def point(i):
            e = ends[i]
            design = _chirp_design(float(f_inst[i]), fs, N, order, band_ratios)
            return design, xs[e - N + 1:e + 1], ref.theta[e]

    def evaluate(i):
        design, x, theta = point(i)
        C = optimal_calibration(compute_endpoint_gains(design, group_delay=False)).C
        z = complex(echt_endpoint(x, design))
        out = []
        for v in (z, C * z):
            out += [abs(float(wrap(np.angle(v) - theta))), abs(abs(v) - 1.0)]
        return out

    res = np.array(ordered_map(evaluate, range(n_points), workers))
    rows = []
    for label, (pc, ac) in (("ecHT", (0, 1)), ("c-ecHT", (2, 3))):
        ph, amp = np.degrees(res[:, pc]), 100 * res[:, ac]
        rows.append((label, *(float(v) for v in (ph.mean(), ph.std(), ph.max(), amp.mean(), amp.std(), amp.max()))))
    manifest = make_manifest(
        "chirp-replication", None, signals=signals, axes={"points": n_points}, seed=seed,
        params={"mode": mode, "f_start": f_start, "f_end": f_end, "n_points": n_points,
                "window_length": N, "sampling_rate": fs, "order": order,
                "band_ratios": list(band_ratios), "phi0": phi0, "duration": duration},
    )
    return ExperimentResult(manifest, CHIRP_COLUMNS, rows)


# -- drift tracking ----------------------------------------------------------------

DRIFT_CONDITIONS = (
    ("fixed-cecht", False, True),
    ("tracked-cecht", True, True),
    ("tracked-echt", True, False),
    ("fixed-echt", False, False),
)
DRIFT_COLUMNS = ("scenario", "condition", "bias_deg", "abs_bias_deg", "circular_std_deg",
                 "mean_abs_deg", "max_abs_deg", "plv", "pli", "n", "retunes", "seed")


def _score_tracker(design, tracker_cfg, x, theta, track, calibrate, skip):
    tr = FrequencyTracker(design, tracker_cfg, calibrate=calibrate, track=track)
    idx, z, _ = tr.run(x)
    keep = idx >= skip
    s = summarize_errors(np.angle(z[keep]) - theta[idx[keep]])
    return s, len(tr.events) - 1


def frequency_shift_slope(config: EchtConfig, offsets_hz: Sequence[float],
                          phase_points: int = PHASE_GRID_POINTS) -> dict:
    """Fit the calibrated bias against detuning ``dw`` (rad/sample).

    Returns the least-squares slope next to ``-tau_g`` from the gains.
    """
    cfg = config.uncalibrated()
    gains = compute_endpoint_gains(cfg)
    phis = phase_grid(phase_points)
    dw, bias = [], []
    for df in offsets_hz:
        omega = 2 * np.pi * (cfg.f0 + df) / cfg.sampling_rate
        _, e2, _ = tone_endpoint_errors(cfg, omega, phis)
        dw.append(omega - cfg.omega0)
        bias.append(summarize_errors(e2).circular_mean)
    slope = float(np.polyfit(dw, bias, 1)[0])
    return {"slope": slope, "tau_g": gains.tau_g,
            "relative_error": abs(slope + gains.tau_g) / abs(gains.tau_g),
            "offsets_hz": list(offsets_hz), "bias_deg": list(np.degrees(bias))}


def run_track_drift(
    config: EchtConfig | None = None,
    *,
    seed: int | None = 0,
    signal_f0: float = 9.6,
    drift_hz: float = 0.3,
    drift_period: float = 40.0,
    duration: float = 120.0,
    snr_in: float | None = None,
    update_interval: float = 4.0,
    analysis_length: int = 1024,
    search_ratios: Sequence[float] = (0.6, 1.4),
    slope_offsets_hz: Sequence[float] = (-0.2, -0.1, 0.0, 0.1, 0.2),
    zero_drift: bool = True,
    workers: int | None = None,
) -> ExperimentResult:
    """Fixed vs tracked centre frequency, with and without calibration.

    The design is centred at ``config.f0`` while the signal wanders around
    ``signal_f0``. Scoring starts after the first tracker update. With
    ``zero_drift`` a second scenario (steady tone at the design centre) is
    also run.
    """
    seed = 0 if seed is None else int(seed)
    design = (config or default_config()).uncalibrated()
    fs = design.sampling_rate
    tracker_cfg = TrackerConfig(
        (search_ratios[0] * design.f0, search_ratios[1] * design.f0), fs,
        update_interval=update_interval, analysis_length=analysis_length,
    )
    skip = max(tracker_cfg.update_samples, analysis_length)
    specs = {"drift": SignalSpec("drifting_tone", f0=signal_f0, drift_hz=drift_hz,
                                 drift_period=drift_period, duration=duration,
                                 sampling_rate=fs, snr_in=snr_in, seed=seed)}
    if zero_drift:
        specs["zero-drift"] = SignalSpec("tone", f0=design.f0, duration=duration,
                                         sampling_rate=fs, snr_in=snr_in, seed=seed)
    signals = {k: synthesize(s) for k, s in specs.items()}
    jobs = [(k, c) for k in specs for c in DRIFT_CONDITIONS]

    def job(item):
        k, (label, track, cal) = item
        x, ref = signals[k]
        return _score_tracker(design, tracker_cfg, x, ref.theta, track, cal, skip)

    scored = ordered_map(job, jobs, workers)
    rows = []
    for (k, (label, _, _)), (s, retunes) in zip(jobs, scored):
        b = math.degrees(s.circular_mean)
        rows.append((k, label, b, abs(b), math.degrees(s.circular_std), math.degrees(s.mean_abs),
                     math.degrees(s.max_abs), s.plv, s.pli, s.n, retunes, seed))
    bias = {(r[0], r[1]): r[3] for r in rows}
    summary = {
        "tracked_cecht_best": all(bias[("drift", "tracked-cecht")] <= bias[("drift", c)]
                                  for c, _, _ in DRIFT_CONDITIONS),
        "tracked_echt_worse_than_fixed_echt":
            bias[("drift", "tracked-echt")] > bias[("drift", "fixed-echt")],
        "frequency_shift": frequency_shift_slope(design, slope_offsets_hz),
    }
    if zero_drift:
        gaps = {
            "cecht": abs(bias[("zero-drift", "tracked-cecht")] - bias[("zero-drift", "fixed-cecht")]),
            "echt": abs(bias[("zero-drift", "tracked-echt")] - bias[("zero-drift", "fixed-echt")]),
        }
        summary["zero_drift_tracking_gap_deg"] = gaps
    manifest = make_manifest(
        "track-drift", design, signals=[s.to_dict() for s in specs.values()],
        axes={"conditions": [c for c, _, _ in DRIFT_CONDITIONS]}, seed=seed,
        params={"signal_f0": signal_f0, "drift_hz": drift_hz, "drift_period": drift_period,
                "duration": duration, "snr_in": snr_in, "update_interval": update_interval,
                "analysis_length": analysis_length, "search_ratios": list(search_ratios),
                "slope_offsets_hz": list(slope_offsets_hz), "zero_drift": zero_drift},
    )
    return ExperimentResult(manifest, DRIFT_COLUMNS, rows, summary)


# -- benchmark -----------------------------------------------------------------------

BENCH_COLUMNS = ("n", "hilbert_us", "echt_us", "endpoint_us", "overhead", "endpoint_speedup")


def _time_per_call(fn: Callable[[], Any], min_time: float = 0.05, repeats: int = 5) -> float:
    """Best-of-``repeats`` seconds per call, each repeat lasting ``min_time``."""
    fn()
    number, t = 1, 0.0
    while True:
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        t = time.perf_counter() - t0
        if t >= min_time / 5:
            break
        number *= 4
    number = max(1, int(number * (min_time / max(t, 1e-9)) / 5) + 1)
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def run_bench(
    config: EchtConfig | None = None,
    *,
    seed: int | None = 0,
    lengths: Sequence[int] = (256, 1024, 16384),
    min_time: float = 0.05,
    workers: int | None = None,
) -> ExperimentResult:
    """Per-window wall time of the plain DFT Hilbert transform and the c-ecHT.

    ``hilbert_us`` is :func:`scipy.signal.hilbert`, ``echt_us`` the full
    calibrated window transform and ``endpoint_us`` the endpoint-only path.
    Timings run serially; absolute numbers depend on the machine.
    """
    seed = 0 if seed is None else int(seed)
    base = config or default_config()
    rng = stream(seed, 0)
    rows = []
    for N in lengths:
        N = int(N)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = base.uncalibrated().replace(window_length=N, dft_length=None)
        cfg = cfg.with_calibration(optimal_calibration(compute_endpoint_gains(cfg, group_delay=False)))
        cfg.output_weights  # build caches outside the timed region
        x = rng.standard_normal(N)
        t_h = _time_per_call(lambda: sps.hilbert(x), min_time)
        t_e = _time_per_call(lambda: echt_window(x, cfg), min_time)
        t_p = _time_per_call(lambda: echt_endpoint(x, cfg), min_time)
        rows.append((N, 1e6 * t_h, 1e6 * t_e, 1e6 * t_p, t_e / t_h, t_e / t_p))
    summary = {"median_overhead": float(np.median([r[4] for r in rows]))}
    by_n = {r[0]: r for r in rows}
    if 1024 in by_n and 16384 in by_n:
        ratio = by_n[16384][2] / by_n[1024][2]
        limit = 16 * (math.log(16384) / math.log(1024)) * 1.5
        summary["complexity_ratio"] = ratio
        summary["complexity_limit"] = limit
        summary["complexity_ok"] = ratio < limit
    summary["endpoint_never_slower"] = all(r[3] <= r[2] for r in rows)
    manifest = make_manifest("bench", base.uncalibrated(), axes={"n": [int(n) for n in lengths]},
                             seed=seed, params={"lengths": [int(n) for n in lengths],
                                                "min_time": min_time})
    return ExperimentResult(manifest, BENCH_COLUMNS, rows, summary)


def _sweep_runner(config=None, seed=0, workers=None, panel="bandwidth", **kw):
    return run_sweep(panel, config, seed=seed, workers=workers, **kw)


RUNNERS: dict[str, Callable[..., ExperimentResult]] = {
    "calibrate": run_calibrate,
    "mc-table": run_mc_table,
    "chirp-replication": run_chirp_replication,
    "track-drift": run_track_drift,
    "bench": run_bench,
    **{f"sweep-{name}": _sweep_runner for name in PANELS.values()},
}
