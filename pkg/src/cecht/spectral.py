"""DFT machinery shared by the ecHT pipeline.

Everything here is a pure function of its inputs and works in float64 /
complex128. Bin frequencies are kept exact (``2*pi*k/L``); nothing is ever
rounded to an integer Hz grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# below this |sin(w/2)| the Dirichlet closed form is replaced by its limit
DIRICHLET_SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class FrequencyGrid:
    """An ``L``-point DFT grid at sampling rate ``fs``."""

    dft_length: int
    sampling_rate: float = 1.0

    def __post_init__(self):
        if self.dft_length < 1:
            raise ValueError(f"dft_length must be >= 1, got {self.dft_length}")
        if not self.sampling_rate > 0:
            raise ValueError(f"sampling_rate must be > 0, got {self.sampling_rate}")

    @property
    def bins(self) -> np.ndarray:
        """Angular bin frequencies ``w_k = 2*pi*k/L`` (rad/sample)."""
        return 2 * np.pi * np.arange(self.dft_length) / self.dft_length

    @property
    def frequencies(self) -> np.ndarray:
        """Bin frequencies ``f_k = k*fs/L`` in Hz."""
        return np.arange(self.dft_length) * self.sampling_rate / self.dft_length

    def nearest_bin(self, omega: float) -> int:
        """Index of the bin closest to ``omega``; ties go to the lower bin."""
        k = omega * self.dft_length / (2 * np.pi)
        lo = int(np.floor(k))
        return lo if k - lo <= 0.5 else lo + 1


def dft_forward(x, dft_length: int | None = None) -> np.ndarray:
    """L-point DFT of a real sequence, zero-padded to ``dft_length``.

    Operates along the last axis, so a stack of windows of shape ``(..., N)``
    is transformed in one call.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    L = n if dft_length is None else int(dft_length)
    if L < n:
        raise ValueError(f"dft_length {L} is shorter than the signal ({n})")
    return np.fft.fft(x, L, axis=-1)


def dirichlet_kernel(omega, N: int):
    """Length-``N`` Dirichlet kernel ``sum_{n<N} exp(j*omega*n)``.

    Uses the closed form ``exp(j*w*(N-1)/2) * sin(N*w/2) / sin(w/2)`` after
    reducing ``omega`` to (-pi, pi]; where ``|sin(w/2)|`` drops below
    ``DIRICHLET_SINGULAR_TOL`` the limit ``N * exp(j*w*(N-1)/2)`` is used.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    omega = np.asarray(omega, dtype=float)
    # the sum is 2*pi periodic, reduce first to keep the phase factor accurate
    w = omega - 2 * np.pi * np.round(omega / (2 * np.pi))
    half = np.sin(0.5 * w)
    singular = np.abs(half) < DIRICHLET_SINGULAR_TOL
    safe = np.where(singular, 1.0, half)
    ratio = np.where(singular, float(N), np.sin(0.5 * N * w) / safe)
    out = np.exp(0.5j * w * (N - 1)) * ratio
    return out[()] if out.ndim == 0 else out


def analytic_mask(L: int) -> np.ndarray:
    """Analytic-signal weights: 1 at DC (and Nyquist for even L), 2 on the
    strictly positive bins, 0 on the negative ones."""
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    m = np.zeros(L)
    m[0] = 1.0
    if L % 2 == 0:
        m[1:L // 2] = 2.0
        m[L // 2] = 1.0
    else:
        m[1:(L + 1) // 2] = 2.0
    return m


def synthesis_vector(L: int, n: int) -> np.ndarray:
    """Row of the inverse DFT matrix for output index ``n``: ``exp(j*n*w_k)/L``."""
    if not 0 <= n < L:
        raise IndexError(f"sample index {n} outside [0, {L})")
    k = np.arange(L)
    # reduce n*k mod L in integers so the exponent stays exact for large L
    return np.exp(2j * np.pi * ((n * k) % L) / L) / L


def endpoint_synthesis(Z, n: int) -> complex | np.ndarray:
    """Evaluate the inverse DFT of ``Z`` at the single index ``n``.

    Costs O(L) instead of the O(L log L) full inverse transform.
    """
    Z = np.asarray(Z, dtype=complex)
    L = Z.shape[-1]
    return Z @ synthesis_vector(L, n)
