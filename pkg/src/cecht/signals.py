"""Synthetic test signals, the acausal reference phase, and signal files."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import signal as sps

from ._runtime import stream
from .filters import BandpassSpec, design_bandpass, frequency_response
from .spectral import FrequencyGrid
from .stats import wrap

Kind = Literal["tone", "linear_chirp", "drifting_tone", "tone_plus_noise"]
KINDS = ("tone", "linear_chirp", "drifting_tone", "tone_plus_noise")


class SignalIOError(OSError):
    """A signal file is missing, unreadable or malformed."""


@dataclass(frozen=True)
class SignalSpec:
    """Description of a synthetic signal.

    ``tone``/``tone_plus_noise`` use ``f0``. ``linear_chirp`` sweeps
    ``f_start -> f_end`` over ``duration``. ``drifting_tone`` follows
    ``f0 + drift_hz * sin(2 pi t / drift_period)``. Noise (white Gaussian,
    variance ``amplitude**2 / snr_in``) is added whenever ``snr_in`` is set.
    """

    kind: Kind = "tone"
    f0: float = 10.0
    f_start: float | None = None
    f_end: float | None = None
    amplitude: float = 1.0
    phi0: float = 0.0
    duration: float = 10.0
    sampling_rate: float = 256.0
    snr_in: float | None = None
    seed: int = 0
    drift_hz: float = 0.0
    drift_period: float = 60.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == "linear_chirp" and (self.f_start is None or self.f_end is None):
            raise ValueError("linear_chirp needs f_start and f_end")
        if self.kind == "tone_plus_noise" and self.snr_in is None:
            raise ValueError("tone_plus_noise needs snr_in")
        if self.snr_in is not None and not self.snr_in > 0:
            raise ValueError("snr_in must be positive")
        if not (self.duration > 0 and self.sampling_rate > 0):
            raise ValueError("duration and sampling_rate must be positive")
        lo, hi = self.frequency_range
        if not 0 < lo <= hi < self.sampling_rate / 2:
            raise ValueError(
                f"instantaneous frequency spans [{lo}, {hi}] Hz, outside (0, fs/2)"
            )

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sampling_rate))

    @property
    def frequency_range(self) -> tuple[float, float]:
        if self.kind == "linear_chirp":
            return min(self.f_start, self.f_end), max(self.f_start, self.f_end)
        if self.kind == "drifting_tone":
            return self.f0 - abs(self.drift_hz), self.f0 + abs(self.drift_hz)
        return self.f0, self.f0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ReferencePhase:
    """Ground-truth phase (radians, wrapped) and amplitude per sample.

    ``valid`` marks the samples that should be scored (all of them for the
    analytic formula; the interior for the offline reference).
    """

    theta: np.ndarray
    amplitude: np.ndarray
    method: Literal["analytic_formula", "offline_hilbert"]
    valid: np.ndarray
    frequency: np.ndarray | None = None

    @property
    def analytic(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.theta)


def unwrapped_phase(spec: SignalSpec, t: np.ndarray) -> np.ndarray:
    """Integral of ``2 pi f(t)`` plus ``phi0``."""
    if spec.kind == "linear_chirp":
        T = spec.duration
        return 2 * np.pi * (spec.f_start * t + (spec.f_end - spec.f_start) * t * t / (2 * T)) + spec.phi0
    if spec.kind == "drifting_tone":
        P = spec.drift_period
        drift = spec.drift_hz * P / (2 * np.pi) * (1 - np.cos(2 * np.pi * t / P))
        return 2 * np.pi * (spec.f0 * t + drift) + spec.phi0
    return 2 * np.pi * spec.f0 * t + spec.phi0


def instantaneous_frequency(spec: SignalSpec, t: np.ndarray) -> np.ndarray:
    if spec.kind == "linear_chirp":
        return spec.f_start + (spec.f_end - spec.f_start) * t / spec.duration
    if spec.kind == "drifting_tone":
        return spec.f0 + spec.drift_hz * np.sin(2 * np.pi * t / spec.drift_period)
    return np.full_like(t, spec.f0)


def synthesize(spec: SignalSpec) -> tuple[np.ndarray, ReferencePhase]:
    """Samples and their exact phase from the generator's own phase law."""
    n = np.arange(spec.n_samples)
    if spec.kind in ("tone", "tone_plus_noise"):
        # reduce w0*n exactly in cycles so long tones keep full precision
        cyc = np.mod(n * spec.f0, spec.sampling_rate) / spec.sampling_rate
        phase = 2 * np.pi * cyc + spec.phi0
    else:
        phase = unwrapped_phase(spec, n / spec.sampling_rate)
    x = spec.amplitude * np.cos(phase)
    if spec.snr_in is not None:
        sigma = spec.amplitude / np.sqrt(spec.snr_in)
        x = x + sigma * stream(spec.seed, 0).standard_normal(x.size)
    ref = ReferencePhase(
        theta=wrap(phase),
        amplitude=np.full(x.size, float(spec.amplitude)),
        method="analytic_formula",
        valid=np.ones(x.size, dtype=bool),
        frequency=instantaneous_frequency(spec, n / spec.sampling_rate),
    )
    return x, ref


def offline_reference(
    x,
    sampling_rate: float,
    f0: float,
    band_ratios: tuple[float, float] = (0.7, 1.3),
    order: int = 2,
    edge_cycles: float = 2.0,
    method: Literal["dft", "sosfiltfilt"] = "dft",
) -> ReferencePhase:
    """Acausal reference: zero-phase bandpass, then the full-length analytic
    signal via the DFT.

    ``method="dft"`` applies ``|H|^2`` on the record's own DFT grid, i.e.
    forward-backward filtering of the periodically extended record; it is
    exact for records holding whole cycles. ``"sosfiltfilt"`` uses scipy's
    padded time-domain forward-backward pass, whose start-up transients reach
    further into the record. ``edge_cycles`` cycles of ``f0`` at each end are
    flagged invalid.
    """
    x = np.asarray(x, dtype=float)
    cycles = x.size * f0 / sampling_rate
    if cycles < 8:
        raise ValueError(f"signal holds {cycles:.2f} cycles of f0; at least 8 are needed")
    filt = design_bandpass(BandpassSpec.around(f0, sampling_rate, band_ratios, order=order))
    if method == "dft":
        H2 = np.abs(frequency_response(filt, FrequencyGrid(x.size))) ** 2
        y = np.fft.ifft(np.fft.fft(x) * H2).real
    elif method == "sosfiltfilt":
        y = sps.sosfiltfilt(np.array(filt.sos), x)
    else:
        raise ValueError(f"unknown method {method!r}")
    z = sps.hilbert(y)
    valid = np.ones(x.size, dtype=bool)
    edge = int(np.ceil(edge_cycles * sampling_rate / f0))
    valid[:edge] = False
    valid[x.size - edge:] = False
    return ReferencePhase(np.angle(z), np.abs(z), "offline_hilbert", valid)


# ---------------------------------------------------------------------------
# files


def write_csv(path, x, sampling_rate: float) -> Path:
    path = Path(path)
    t = np.arange(len(x)) / sampling_rate
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "x"])
        for ti, xi in zip(t, x):
            w.writerow([repr(float(ti)), repr(float(xi))])
    return path


def write_binary(path, x, sampling_rate: float, kind: str = "unknown", seed: int | None = None) -> Path:
    """Raw float64 little-endian samples plus a ``.json`` sidecar."""
    path = Path(path)
    np.asarray(x, dtype="<f8").tofile(path)
    sidecar = {"fs_hz": float(sampling_rate), "n": int(len(x)), "kind": kind, "seed": seed}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))
    return path


def read_signal(path) -> tuple[np.ndarray, float]:
    """Load ``(x, fs)`` from a CSV (``t_s, x``) or a binary file with sidecar."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".csv":
            with path.open(newline="") as fh:
                rows = list(csv.reader(fh))
            if not rows or rows[0][:2] != ["t_s", "x"]:
                raise SignalIOError(f"{path}: expected a 't_s,x' header")
            data = np.array([[float(v) for v in r[:2]] for r in rows[1:]])
            if len(data) < 2:
                raise SignalIOError(f"{path}: need at least two samples")
            fs = 1.0 / np.median(np.diff(data[:, 0]))
            return data[:, 1], float(fs)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        x = np.fromfile(path, dtype="<f8")
        if x.size != meta["n"]:
            raise SignalIOError(f"{path}: sidecar says {meta['n']} samples, file holds {x.size}")
        return x.astype(float), float(meta["fs_hz"])
    except SignalIOError:
        raise
    except (OSError, ValueError, KeyError, IndexError) as exc:
        raise SignalIOError(f"cannot read {path}: {exc}") from exc
