"""Configuration of one ecHT channel."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .filters import BandpassSpec, DigitalFilter, design_bandpass, effective_response
from .spectral import FrequencyGrid

if TYPE_CHECKING:
    from .calibration import CalibrationFactor

# windows shorter than this many cycles of f0 trigger a warning
MIN_RECOMMENDED_CYCLES = 2.0


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class EchtConfig:
    """Everything needed to run the ecHT on one channel.

    Parameters
    ----------
    window_length : int
        Analysis window ``N`` in samples.
    sampling_rate : float
        ``Fs`` in Hz.
    f0 : float
        Centre frequency in Hz; the tone the endpoint gains refer to.
    bandpass : BandpassSpec or None
        Filter applied to the analytic spectrum. ``None`` means ``H = 1``
        (the plain DFT Hilbert transform).
    dft_length : int, optional
        ``L >= N``; defaults to ``N`` (no zero padding).
    calibration : CalibrationFactor, optional
        Complex scalar applied to every endpoint.
    """

    window_length: int
    sampling_rate: float
    f0: float
    bandpass: BandpassSpec | None = None
    dft_length: int | None = None
    calibration: "CalibrationFactor | None" = None

    def __post_init__(self):
        N = self.window_length
        if int(N) != N or N < 2:
            raise ConfigError(f"window_length must be an integer >= 2, got {N}")
        object.__setattr__(self, "window_length", int(N))
        L = N if self.dft_length is None else self.dft_length
        if int(L) != L or L < N:
            raise ConfigError(f"dft_length must be an integer >= window_length ({N}), got {L}")
        object.__setattr__(self, "dft_length", int(L))
        object.__setattr__(self, "sampling_rate", float(self.sampling_rate))
        object.__setattr__(self, "f0", float(self.f0))
        fs = self.sampling_rate
        if not fs > 0:
            raise ConfigError(f"sampling_rate must be positive, got {fs}")
        if not 0 < self.f0 < fs / 2:
            raise ConfigError(f"f0 must lie in (0, fs/2) = (0, {fs / 2}), got {self.f0}")
        bp = self.bandpass
        if bp is not None:
            if bp.sampling_rate != fs:
                raise ConfigError(
                    f"bandpass designed for fs={bp.sampling_rate} but config has fs={fs}"
                )
            if not bp.l_freq < self.f0 < bp.h_freq:
                raise ConfigError(f"f0={self.f0} lies outside the passband {bp.band_hz}")
        if self.cycles < MIN_RECOMMENDED_CYCLES:
            warnings.warn(
                f"window holds {self.cycles:.2f} cycles of f0; at least "
                f"{MIN_RECOMMENDED_CYCLES:g} are recommended",
                stacklevel=3,
            )

    @classmethod
    def from_f0(
        cls,
        f0: float,
        sampling_rate: float,
        *,
        cycles: float = 2.1,
        window_length: int | None = None,
        band_ratios: tuple[float, float] = (0.7, 1.3),
        order: int = 2,
        family: str = "butterworth",
        dft_length: int | None = None,
        **filter_kwargs,
    ) -> "EchtConfig":
        """Default design: ``N = round(cycles*Fs/f0)``, Butterworth order 2 on
        ``[0.7, 1.3]*f0``."""
        N = int(round(cycles * sampling_rate / f0)) if window_length is None else window_length
        bp = BandpassSpec.around(f0, sampling_rate, band_ratios, order=order, family=family,
                                 **filter_kwargs)
        return cls(N, sampling_rate, f0, bp, dft_length)

    # -- derived quantities -------------------------------------------------

    @property
    def omega0(self) -> float:
        """Centre frequency in rad/sample."""
        return 2 * np.pi * self.f0 / self.sampling_rate

    @property
    def cycles(self) -> float:
        return self.window_length * self.f0 / self.sampling_rate

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.dft_length, self.sampling_rate)

    @property
    def k0(self) -> int:
        """Bin nearest to ``f0`` (diagnostic only)."""
        return self.grid.nearest_bin(self.omega0)

    @property
    def is_calibrated(self) -> bool:
        return self.calibration is not None

    @cached_property
    def filter(self) -> DigitalFilter:
        return DigitalFilter.identity() if self.bandpass is None else design_bandpass(self.bandpass)

    @cached_property
    def effective_response(self) -> np.ndarray:
        h = effective_response(self.filter, self.grid)
        h.setflags(write=False)
        return h

    @cached_property
    def endpoint_weights(self) -> np.ndarray:
        """``w_k = H_eff(k) exp(j w_k (N-1)) / L``: the endpoint is ``sum_k X_k w_k``."""
        L, N = self.dft_length, self.window_length
        k = np.arange(L)
        w = self.effective_response * np.exp(2j * np.pi * ((k * (N - 1)) % L) / L) / L
        w.setflags(write=False)
        return w

    @cached_property
    def output_weights(self) -> np.ndarray:
        """Endpoint weights with the calibration factor folded in."""
        w = self.endpoint_weights
        if self.calibration is not None:
            w = w * self.calibration.C
            w.setflags(write=False)
        return w

    # -- variants -----------------------------------------------------------

    def replace(self, **changes) -> "EchtConfig":
        return dataclasses.replace(self, **changes)

    def uncalibrated(self) -> "EchtConfig":
        return self if self.calibration is None else self.replace(calibration=None)

    def with_calibration(self, calibration: "CalibrationFactor | None") -> "EchtConfig":
        return self.replace(calibration=calibration)

    def retuned(self, f0: float, band_ratios: tuple[float, float] | None = None) -> "EchtConfig":
        """Same design re-centred at ``f0`` (band scaled proportionally).

        Calibration is dropped; recompute it for the new centre.
        """
        if not 0 < f0 < self.sampling_rate / 2:
            raise ConfigError(f"f0 must lie in (0, fs/2), got {f0}")
        bp = self.bandpass
        if f0 == self.f0 and band_ratios is None:
            return self.uncalibrated()
        if bp is not None:
            if band_ratios is None:
                band_ratios = (bp.l_freq / self.f0, bp.h_freq / self.f0)
            bp = dataclasses.replace(bp, l_freq=band_ratios[0] * f0, h_freq=band_ratios[1] * f0)
        return dataclasses.replace(self, f0=f0, bandpass=bp, calibration=None)

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        bp = self.bandpass
        d = {
            "window_length": self.window_length,
            "dft_length": self.dft_length,
            "sampling_rate": self.sampling_rate,
            "f0": self.f0,
            "bandpass": None if bp is None else dataclasses.asdict(bp),
        }
        if self.calibration is not None:
            d["calibration"] = self.calibration.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EchtConfig":
        """Inverse of :meth:`to_dict`.

        Also accepts the short form ``{"f0", "fs", "n", "order", "band",
        "family"}`` used by config files.
        """
        d = dict(d)
        if "window_length" in d or "bandpass" in d:
            bp = d.get("bandpass")
            cal = d.get("calibration")
            if cal is not None:
                from .calibration import CalibrationFactor

                cal = CalibrationFactor.from_dict(cal)
            try:
                return cls(
                    window_length=d["window_length"],
                    sampling_rate=float(d["sampling_rate"]),
                    f0=float(d["f0"]),
                    bandpass=None if bp is None else BandpassSpec(**bp),
                    dft_length=d.get("dft_length"),
                    calibration=cal,
                )
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"malformed config: {exc}") from exc
        return config_from_options(**d)

    def fingerprint(self) -> str:
        """Short stable hash of the uncalibrated design."""
        d = self.uncalibrated().to_dict()
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def config_from_options(
    f0: float = 10.0,
    fs: float = 256.0,
    n: int | None = None,
    order: int = 2,
    band: tuple[float, float] | None = None,
    family: str = "butterworth",
    dft_length: int | None = None,
    identity_filter: bool = False,
    cycles: float = 2.1,
    **extra,
) -> EchtConfig:
    """Build a config from flat options (CLI flags, short-form JSON).

    ``band`` is in Hz; by default ``[0.7, 1.3]*f0``. ``identity_filter``
    selects ``H = 1``.
    """
    unknown = set(extra) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        f0, fs = float(f0), float(fs)
        N = int(round(cycles * fs / f0)) if n is None else int(n)
        if identity_filter:
            return EchtConfig(N, fs, f0, None, dft_length)
        if band is None:
            band = (0.7 * f0, 1.3 * f0)
        lo, hi = (float(b) for b in band)
        bp = BandpassSpec(lo, hi, fs, order=int(order), family=family)
        return EchtConfig(N, fs, f0, bp, dft_length)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def default_config(f0: float = 10.0, sampling_rate: float = 256.0) -> EchtConfig:
    """The reference design: ``N = round(2.1*Fs/f0)``, Butterworth order 2,
    band ``[0.7, 1.3]*f0``."""
    return EchtConfig.from_f0(f0, sampling_rate)
