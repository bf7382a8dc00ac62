"""The endpoint-corrected Hilbert transform: batch and streaming forms."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import EchtConfig
from .spectral import dft_forward

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhaseEstimate:
    """One causal estimate, for the window ending at ``sample_index``."""

    sample_index: int
    value: complex
    calibrated: bool

    @property
    def phase(self) -> float:
        """``arctan2(Im, Re)`` in (-pi, pi]."""
        return float(np.arctan2(self.value.imag, self.value.real))

    @property
    def amplitude(self) -> float:
        return abs(self.value)


def _check_length(x: np.ndarray, config: EchtConfig) -> None:
    if x.shape[-1] != config.window_length:
        raise ValueError(
            f"window has {x.shape[-1]} samples, config expects {config.window_length}"
        )


def echt_window(x, config: EchtConfig) -> np.ndarray:
    """Full ecHT of one window (or a stack of windows along the last axis).

    Returns the first ``N`` samples of ``iDFT(m * H * X)``, multiplied by the
    calibration factor when the config carries one.
    """
    x = np.asarray(x, dtype=float)
    _check_length(x, config)
    Z = dft_forward(x, config.dft_length) * config.effective_response
    z = np.fft.ifft(Z, axis=-1)[..., : config.window_length]
    if config.calibration is not None:
        z = z * config.calibration.C
    return z


def echt_endpoint(x, config: EchtConfig):
    """ecHT value at the last sample of the window, ``z_hat(N-1)``.

    Only the forward DFT is computed; the inverse transform is evaluated at
    the single output index. Works along the last axis.
    """
    x = np.asarray(x, dtype=float)
    _check_length(x, config)
    # a row-wise sum (not a BLAS product) with C folded into the weights keeps
    # single windows and stacks bit-identical
    return np.sum(dft_forward(x, config.dft_length) * config.output_weights, axis=-1)


def endpoint_impulse_response(config: EchtConfig) -> np.ndarray:
    """``h_n`` such that the uncalibrated endpoint equals ``sum_n h_n x(n)``.

    Obtained by probing the full-window transform with unit impulses.
    """
    return echt_window(np.eye(config.window_length), config.uncalibrated())[:, -1]


def sliding_endpoints(x, config: EchtConfig, hop: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints of every window ``x[n-N+1 : n+1]`` for ``n = N-1, N-1+hop, ...``.

    Vectorised block mode for offline evaluation and benchmarking.

    Returns
    -------
    index : ndarray of int
        Sample index of each window's last sample.
    z : ndarray of complex
    """
    x = np.asarray(x, dtype=float)
    N = config.window_length
    if x.shape[-1] < N:
        return np.empty(0, dtype=int), np.empty(0, dtype=complex)
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    windows = np.lib.stride_tricks.sliding_window_view(x, N)[::hop]
    index = np.arange(N - 1, x.shape[-1], hop)
    out = np.empty(len(windows), dtype=complex)
    # chunk to bound memory for long recordings
    step = max(1, (1 << 22) // max(config.dft_length, 1))
    for s in range(0, len(windows), step):
        out[s:s + step] = echt_endpoint(windows[s:s + step], config)
    return index, out


def phase_method2_diagnostic(x, config: EchtConfig) -> float:
    """Phase from ``arctan2(Im z_end, x(N-1))``.

    Mixes the imaginary part of the estimate with the raw real sample. For a
    tone this warps the phase in a ``phi0``-dependent way, which is why the
    argument of the complex endpoint is used everywhere else. Diagnostic only.
    """
    x = np.asarray(x, dtype=float)
    z = echt_endpoint(x, config)
    return float(np.arctan2(np.imag(z), x[..., -1]))


class EchtStream:
    """Sample-by-sample ecHT for one channel.

    Nothing is emitted until ``N`` samples are buffered. Each later sample
    yields the estimate for the window ending at it, which is bit-identical to
    :func:`echt_endpoint` on that window. Non-finite samples are dropped and
    logged.
    """

    def __init__(self, config: EchtConfig):
        self._config = config
        self._buffer: deque[float] = deque(maxlen=config.window_length)
        self._index = -1
        self.dropped = 0

    @property
    def config(self) -> EchtConfig:
        return self._config

    @property
    def ready(self) -> bool:
        return len(self._buffer) == self._config.window_length

    def push(self, sample: float) -> PhaseEstimate | None:
        sample = float(sample)
        if not np.isfinite(sample):
            self.dropped += 1
            log.warning("dropping non-finite sample after index %d: %r", self._index, sample)
            return None
        self._buffer.append(sample)
        self._index += 1
        if not self.ready:
            return None
        cfg = self._config
        z = echt_endpoint(np.fromiter(self._buffer, float, cfg.window_length), cfg)
        return PhaseEstimate(self._index, complex(z), cfg.is_calibrated)

    def push_many(self, samples) -> list[PhaseEstimate]:
        out = []
        for s in samples:
            est = self.push(s)
            if est is not None:
                out.append(est)
        return out

    def retune(self, config: EchtConfig) -> None:
        """Swap in a new configuration between two samples.

        The window length must stay the same so the buffer remains valid.
        """
        if config.window_length != self._config.window_length:
            raise ValueError("retuning cannot change the window length")
        # touch the cached arrays before the swap so the switch itself is a single assignment
        config.output_weights
        self._config = config
