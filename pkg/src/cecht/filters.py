"""Causal IIR bandpass design and exact evaluation on DFT grids.

Design is delegated to :mod:`scipy.signal` (bilinear transform, realised as
second-order sections). Evaluation is done here by direct polynomial
evaluation of every section at ``z = exp(j*w_k)`` so the response always
sits exactly on the transform's bins.

Band-edge conventions per family (``l_freq``/``h_freq`` are passed to scipy
as the critical frequencies):

* ``butterworth``: -3 dB points.
* ``bessel``: -3 dB points (``norm='mag'``).
* ``chebyshev1``, ``elliptic``: passband edges, where the gain first drops
  by ``ripple_db``.
* ``chebyshev2``: stopband edges, where the attenuation first reaches
  ``attenuation_db``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import signal

from .spectral import FrequencyGrid, analytic_mask

Family = Literal["butterworth", "chebyshev1", "chebyshev2", "elliptic", "bessel"]
FAMILIES: tuple[str, ...] = ("butterworth", "chebyshev1", "chebyshev2", "elliptic", "bessel")

# designs with a pole this close to the unit circle are rejected
STABILITY_MARGIN = 1e-9


class UnstableFilterError(ValueError):
    """Raised when a design has a pole on or outside the unit circle."""


@dataclass(frozen=True)
class BandpassSpec:
    """Parameters of a digital bandpass.

    ``order`` is the order of the lowpass prototype, so the bandpass has
    ``2*order`` poles (scipy's convention).
    """

    l_freq: float
    h_freq: float
    sampling_rate: float
    order: int = 2
    family: Family = "butterworth"
    ripple_db: float = 1.0
    attenuation_db: float = 40.0

    def __post_init__(self):
        for name in ("l_freq", "h_freq", "sampling_rate", "ripple_db", "attenuation_db"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.family not in FAMILIES:
            raise ValueError(f"unknown filter family {self.family!r}; expected one of {FAMILIES}")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order}")
        nyq = self.sampling_rate / 2
        if not 0 < self.l_freq < self.h_freq < nyq:
            raise ValueError(
                f"band edges must satisfy 0 < l_freq < h_freq < fs/2 = {nyq}, "
                f"got [{self.l_freq}, {self.h_freq}]"
            )

    @classmethod
    def around(cls, f0, sampling_rate, ratios=(0.7, 1.3), **kwargs) -> "BandpassSpec":
        """Band ``[ratios[0]*f0, ratios[1]*f0]``."""
        lo, hi = ratios
        return cls(lo * f0, hi * f0, sampling_rate, **kwargs)

    @property
    def band_hz(self) -> tuple[float, float]:
        return (self.l_freq, self.h_freq)


@dataclass(frozen=True, eq=False)
class DigitalFilter:
    """Cascade of biquads, rows ``[b0, b1, b2, a0, a1, a2]``."""

    sos: np.ndarray
    gain: float = 1.0
    spec: BandpassSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        sos = np.array(self.sos, dtype=float).reshape(-1, 6)
        sos.setflags(write=False)
        object.__setattr__(self, "sos", sos)

    @classmethod
    def identity(cls) -> "DigitalFilter":
        """The all-pass ``H = 1``."""
        return cls(np.array([[1.0, 0, 0, 1.0, 0, 0]]))

    @property
    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(row[3:]) for row in self.sos if np.any(row[4:])] or [np.empty(0)])

    def is_stable(self, margin: float = STABILITY_MARGIN) -> bool:
        return bool(np.all(np.abs(self.poles) < 1 - margin))

    def to_ba(self) -> tuple[np.ndarray, np.ndarray]:
        """Expanded numerator and denominator polynomials (in ``z^-1``)."""
        b, a = signal.sos2tf(self.sos)
        return b * self.gain, a

    def to_dict(self) -> dict:
        spec = self.spec
        return {
            "family": spec.family if spec else "identity",
            "order": spec.order if spec else 0,
            "band_hz": list(spec.band_hz) if spec else None,
            "sections": self._gain_folded().tolist(),
        }

    def _gain_folded(self) -> np.ndarray:
        sos = self.sos.copy()
        sos[0, :3] *= self.gain
        return sos

    def __eq__(self, other):
        if not isinstance(other, DigitalFilter):
            return NotImplemented
        return self.gain == other.gain and np.array_equal(self.sos, other.sos)

    def __hash__(self):
        return hash((self.gain, self.sos.tobytes()))


def design_bandpass(spec: BandpassSpec) -> DigitalFilter:
    """Design the bandpass described by ``spec`` as second-order sections."""
    wn = [spec.l_freq, spec.h_freq]
    kw = dict(btype="bandpass", output="sos", fs=spec.sampling_rate)
    if spec.family == "butterworth":
        sos = signal.butter(spec.order, wn, **kw)
    elif spec.family == "chebyshev1":
        sos = signal.cheby1(spec.order, spec.ripple_db, wn, **kw)
    elif spec.family == "chebyshev2":
        sos = signal.cheby2(spec.order, spec.attenuation_db, wn, **kw)
    elif spec.family == "elliptic":
        sos = signal.ellip(spec.order, spec.ripple_db, spec.attenuation_db, wn, **kw)
    else:
        sos = signal.bessel(spec.order, wn, norm="mag", **kw)
    filt = DigitalFilter(sos, spec=spec)
    if not filt.is_stable():
        worst = np.max(np.abs(filt.poles))
        raise UnstableFilterError(
            f"{spec.family} order {spec.order} band {spec.band_hz} Hz has a pole at |p| = {worst:.12f}"
        )
    return filt


def frequency_response(filt: DigitalFilter, grid) -> np.ndarray:
    """``H(exp(j*w))`` on a :class:`FrequencyGrid` or an array of rad/sample.

    Each section is evaluated as a ratio of quadratics in ``z^-1`` and the
    sections are multiplied together.
    """
    omega = grid.bins if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    zi = np.exp(-1j * omega)
    zi2 = zi * zi
    H = np.full(omega.shape, complex(filt.gain))
    for b0, b1, b2, a0, a1, a2 in filt.sos:
        H *= (b0 + b1 * zi + b2 * zi2) / (a0 + a1 * zi + a2 * zi2)
    return H


def effective_response(filt: DigitalFilter, grid: FrequencyGrid) -> np.ndarray:
    """Analytic mask times filter response, ``H_eff(k) = m(k) H(k)``."""
    return analytic_mask(grid.dft_length) * frequency_response(filt, grid)


def impulse_response(filt: DigitalFilter, n: int, delay: int = 0) -> np.ndarray:
    """First ``n`` output samples of the recursion driven by an impulse at ``delay``."""
    x = np.zeros(n)
    if delay < n:
        x[delay] = 1.0
    return filt.gain * signal.sosfilt(np.array(filt.sos), x)
