"""Causal centre-frequency tracking with recalibration."""

from __future__ import annotations

import csv
import math
import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import calibration_mse, compute_endpoint_gains, optimal_calibration
from .config import ConfigError, EchtConfig
from .engine import EchtStream, PhaseEstimate


class NoPeakError(RuntimeError):
    """No usable spectral peak in the search band; keep the previous f0."""


@dataclass(frozen=True)
class TrackerConfig:
    """Schedule and peak-picking knobs.

    ``min_peak_prominence`` is the ratio of the in-band peak power to the
    median power of the whole periodogram. A retune only happens when the
    estimate moves by more than ``hysteresis`` (relative).
    """

    search_band: tuple[float, float]
    sampling_rate: float
    update_interval: float = 4.0
    analysis_length: int = 1024
    min_peak_prominence: float = 20.0
    hysteresis: float = 0.01
    zero_pad: int = 4

    def __post_init__(self):
        lo, hi = self.search_band
        if not 0 < lo < hi < self.sampling_rate / 2:
            raise ValueError(f"search band {self.search_band} must lie inside (0, fs/2)")
        if not self.update_interval > 0:
            raise ValueError("update_interval must be positive")
        if self.analysis_length < 4 * self.sampling_rate / lo:
            raise ValueError("analysis_length must span at least 4 cycles of the band's lower edge")

    @property
    def update_samples(self) -> int:
        return max(1, int(round(self.update_interval * self.sampling_rate)))


def estimate_f0(
    buffer,
    sampling_rate: float,
    band: tuple[float, float],
    min_peak_prominence: float = 20.0,
    zero_pad: int = 4,
) -> float:
    """Dominant frequency in ``band`` from a Hann periodogram.

    The in-band maximum is refined by a parabola through the log-power of
    the peak bin and its two neighbours.

    Raises
    ------
    NoPeakError
        If the peak is not prominent enough or sits on a band edge.
    """
    x = np.asarray(buffer, dtype=float)
    lo, hi = band
    if x.size < 4 * sampling_rate / lo:
        raise ValueError(f"need at least 4 cycles of {lo} Hz, got {x.size} samples")
    x = x - x.mean()
    nfft = zero_pad * x.size
    P = np.abs(np.fft.rfft(x * np.hanning(x.size), nfft)) ** 2
    f = np.fft.rfftfreq(nfft, 1 / sampling_rate)
    inband = np.flatnonzero((f >= lo) & (f <= hi))
    if inband.size < 3:
        raise NoPeakError("search band narrower than three bins")
    k = inband[np.argmax(P[inband])]
    if k in (inband[0], inband[-1]):
        raise NoPeakError(f"peak at the band edge ({f[k]:.3f} Hz)")
    floor = np.median(P[1:])
    if not P[k] > min_peak_prominence * floor:
        raise NoPeakError(f"peak at {f[k]:.3f} Hz is only {P[k] / max(floor, 1e-300):.1f}x the median")
    a, b, c = np.log(P[k - 1:k + 2] + 1e-300)
    den = a - 2 * b + c
    shift = 0.5 * (a - c) / den if den < 0 else 0.0
    return float(f[k] + shift * sampling_rate / nfft)


@dataclass(frozen=True)
class TrackerEvent:
    time_s: float
    f0_hz: float
    alpha_deg: float
    C_re: float
    C_im: float
    J: float


def configure(template: EchtConfig, f0: float, calibrate: bool = True) -> tuple[EchtConfig, TrackerEvent]:
    """Design centred at ``f0`` with its gains, calibration and event row."""
    with warnings.catch_warnings():
        # N is fixed by the original design; a retune may nudge it just below 2 cycles
        warnings.simplefilter("ignore", UserWarning)
        cfg = template.retuned(f0)
        gains = compute_endpoint_gains(cfg, group_delay=False)
        if calibrate:
            cal = optimal_calibration(gains)
            cfg = cfg.with_calibration(cal)
            C, J = cal.C, cal.J
        else:
            C, J = 1.0 + 0j, calibration_mse(1.0, gains)
    ev = TrackerEvent(math.nan, f0, math.degrees(gains.alpha), C.real, C.imag, J)
    return cfg, ev


def retune(stream: EchtStream, new_f0: float, calibrate: bool = True) -> TrackerEvent:
    """Re-centre the stream's bandpass at ``new_f0`` and recompute its calibration.

    The switch happens between two samples.
    """
    if not 0 < new_f0 < stream.config.sampling_rate / 2:
        raise ConfigError(f"new f0 {new_f0} outside (0, fs/2)")
    cfg, ev = configure(stream.config, new_f0, calibrate)
    stream.retune(cfg)
    return ev


class FrequencyTracker:
    """Streaming ecHT whose centre frequency follows the signal.

    Every ``update_interval`` seconds the last ``analysis_length`` samples are
    searched for a peak; if it moved by more than the hysteresis the filter
    and calibration are recomputed for the new centre. Only past samples are
    ever used.
    """

    def __init__(self, config: EchtConfig, tracker: TrackerConfig, calibrate: bool = True, track: bool = True):
        if tracker.sampling_rate != config.sampling_rate:
            raise ConfigError("tracker and config sampling rates differ")
        self.tracker = tracker
        self.calibrate = calibrate
        self.track = track
        cfg, ev = configure(config, config.f0, calibrate)
        self.stream = EchtStream(cfg)
        self.events = [TrackerEvent(0.0, ev.f0_hz, ev.alpha_deg, ev.C_re, ev.C_im, ev.J)]
        self._history: deque[float] = deque(maxlen=tracker.analysis_length)
        self._count = 0

    @property
    def f0(self) -> float:
        return self.stream.config.f0

    def push(self, sample: float) -> PhaseEstimate | None:
        est = self.stream.push(sample)
        if np.isfinite(sample):
            self._history.append(float(sample))
            self._count += 1
            if self.track and self._count % self.tracker.update_samples == 0:
                self._update()
        return est

    def _update(self) -> None:
        tk = self.tracker
        if len(self._history) < tk.analysis_length:
            return
        try:
            f_new = estimate_f0(np.fromiter(self._history, float), tk.sampling_rate, tk.search_band,
                                tk.min_peak_prominence, tk.zero_pad)
        except NoPeakError:
            return
        if abs(f_new - self.f0) <= tk.hysteresis * self.f0:
            return
        try:
            ev = retune(self.stream, f_new, self.calibrate)
        except ConfigError:
            return
        t = self._count / tk.sampling_rate
        self.events.append(TrackerEvent(t, ev.f0_hz, ev.alpha_deg, ev.C_re, ev.C_im, ev.J))

    def run(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Push a whole record; returns ``(index, z, f0_active)`` for every emitted sample."""
        idx, z, f0 = [], [], []
        for v in np.asarray(x, dtype=float):
            est = self.push(v)
            if est is not None:
                idx.append(est.sample_index)
                z.append(est.value)
                f0.append(self.f0)
        return np.array(idx, dtype=int), np.array(z, dtype=complex), np.array(f0)

    def write_event_log(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s", "f0_hz", "alpha_deg", "C_re", "C_im", "J"])
            for e in self.events:
                w.writerow([e.time_s, e.f0_hz, e.alpha_deg, e.C_re, e.C_im, e.J])
        return path
