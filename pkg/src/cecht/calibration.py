"""Deterministic endpoint analysis and MSE-optimal scalar calibration.

For a tone ``x(n) = cos(w0 n + phi0)`` the ecHT endpoint factorises as
``z_hat(N-1) = z(N-1) * F`` with ``F = G+ + G- exp(-2j phi0)``. ``G+`` is the
gain seen by the positive-frequency component, ``G-`` the leakage of the
negative one. Everything about the single-tone error follows from these two
numbers; the optimal complex scalar ``C`` undoes the bias ``arg G+`` and the
mean gain, leaving a residual set by the leakage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import integrate, special

from .config import EchtConfig
from .engine import endpoint_impulse_response
from .spectral import dirichlet_kernel

Provenance = Literal["analytic_noiseless", "noise_aware", "empirical", "identity"]

# designs whose main gain is below this are treated as degenerate
DEGENERATE_GAIN = 1e-12
# quadrature size for expectations over a uniform initial phase
PHASE_QUADRATURE_POINTS = 4096
# group delay: initial step, tolerance of the step-halving check, max halvings
GROUP_DELAY_STEP = 2 * np.pi * 1e-4
GROUP_DELAY_RTOL = 5e-3
GROUP_DELAY_REFINEMENTS = 4


class DegenerateDesignError(ValueError):
    """The filter (almost) removes the target component: ``|G+| ~ 0``."""


class ConvergenceError(RuntimeError):
    """A numerical refinement did not settle within its budget."""


# ---------------------------------------------------------------------------
# endpoint gains


def gains_at_frequency(config: EchtConfig, omega: float) -> tuple[complex, complex]:
    """``(G+, G-)`` for a tone at ``omega`` rad/sample through ``config``'s
    (fixed) filter and window.

    Direct sums over the DFT bins of ``H_eff(k) D_N(+-omega - w_k)
    exp(j w_k (N-1))``, scaled by ``exp(-j omega (N-1)) / (2L)``.
    """
    N, L = config.window_length, config.dft_length
    wk = config.grid.bins
    # endpoint_weights already holds H_eff(k) exp(j w_k (N-1)) / L
    w = config.endpoint_weights
    scale = 0.5 * np.exp(-1j * omega * (N - 1))
    g_plus = scale * np.sum(w * dirichlet_kernel(omega - wk, N))
    g_minus = scale * np.sum(w * dirichlet_kernel(-omega - wk, N))
    return complex(g_plus), complex(g_minus)


@dataclass(frozen=True)
class EndpointGains:
    """Single-tone characterisation of an ecHT design."""

    G_plus: complex
    G_minus: complex
    omega: float
    window_length: int
    tau_g: float | None = None
    fingerprint: str = ""

    @property
    def alpha(self) -> float:
        """Bias angle ``arg G+``."""
        return math.atan2(self.G_plus.imag, self.G_plus.real)

    @property
    def beta(self) -> float:
        return math.atan2(self.G_minus.imag, self.G_minus.real)

    @property
    def r(self) -> float:
        """Leakage ratio ``|G-| / |G+|``."""
        return abs(self.G_minus) / abs(self.G_plus)

    @property
    def delta(self) -> float:
        return self.beta - self.alpha

    @property
    def power(self) -> float:
        """``E|F|^2 = |G+|^2 + |G-|^2``."""
        return abs(self.G_plus) ** 2 + abs(self.G_minus) ** 2

    @property
    def leakage(self) -> float:
        """``l = |G-|^2 / (|G+|^2 + |G-|^2)``, the noiseless residual MSE."""
        return abs(self.G_minus) ** 2 / self.power

    @property
    def ripple_bound(self) -> float:
        """``arcsin r``: bound on the phase ripple after bias removal (NaN if ``r > 1``)."""
        r = self.r
        return math.asin(r) if r <= 1 else math.nan

    def F(self, phi0):
        return endpoint_gain_F(self, phi0)


def compute_endpoint_gains(config: EchtConfig, *, group_delay: bool = True) -> EndpointGains:
    """Endpoint gains at the configured centre frequency.

    Raises
    ------
    DegenerateDesignError
        If ``|G+| < 1e-12``.
    """
    gp, gm = gains_at_frequency(config, config.omega0)
    if abs(gp) < DEGENERATE_GAIN:
        raise DegenerateDesignError(
            f"|G+| = {abs(gp):.3e}: the design suppresses the target frequency {config.f0} Hz"
        )
    tau = endpoint_group_delay(config) if group_delay else None
    return EndpointGains(gp, gm, config.omega0, config.window_length, tau, config.fingerprint())


def endpoint_gain_F(gains: EndpointGains, phi0):
    """``F(phi0) = G+ + G- exp(-2j phi0)``."""
    return gains.G_plus + gains.G_minus * np.exp(-2j * np.asarray(phi0, dtype=float))


def _alpha(config: EchtConfig, omega: float) -> float:
    gp, _ = gains_at_frequency(config, omega)
    return math.atan2(gp.imag, gp.real)


def _wrapped_diff(a: float, b: float) -> float:
    d = a - b
    return d - 2 * np.pi * np.round(d / (2 * np.pi))


def endpoint_group_delay(
    config: EchtConfig,
    omega: float | None = None,
    step: float = GROUP_DELAY_STEP,
    rtol: float = GROUP_DELAY_RTOL,
    refinements: int = GROUP_DELAY_REFINEMENTS,
) -> float:
    """Endpoint group delay ``tau_g = -d arg G+ / d omega`` in samples.

    The filter and window stay fixed while the tone frequency moves. Central
    differences are taken with step ``step`` and ``step/2``; the step is
    halved until the two agree to ``rtol``.

    Raises
    ------
    ConvergenceError
        If no agreement is reached after ``refinements`` halvings.
    """
    if omega is None:
        omega = config.omega0
    if not 0 < omega < np.pi:
        raise ValueError(f"omega must lie in (0, pi), got {omega}")
    # keep both probes inside (0, pi)
    h = min(step, 0.5 * omega, 0.5 * (np.pi - omega))

    def central(h):
        # a step small enough keeps the phase change well below pi/2, so wrapping the difference unwraps it
        return -_wrapped_diff(_alpha(config, omega + h), _alpha(config, omega - h)) / (2 * h)

    prev = central(h)
    for _ in range(refinements + 1):
        h *= 0.5
        cur = central(h)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-12) or abs(cur - prev) < 1e-9:
            return float(cur)
        prev = cur
    raise ConvergenceError(
        f"group delay at omega={omega:.6g} did not converge (last two estimates {prev:.6g}, {cur:.6g})"
    )


# ---------------------------------------------------------------------------
# expectations over the initial phase


def _phase_grid(n: int = PHASE_QUADRATURE_POINTS) -> np.ndarray:
    # uniform grid on (-pi, pi]; the trapezoid rule on a periodic integrand is the plain mean
    return -np.pi + 2 * np.pi * np.arange(1, n + 1) / n


def mse_over_phase(gains: EndpointGains, C: complex = 1.0, n: int = PHASE_QUADRATURE_POINTS) -> float:
    """``E|C F(phi0) - 1|^2`` over a uniform ``phi0`` by quadrature."""
    F = endpoint_gain_F(gains, _phase_grid(n))
    return float(np.mean(np.abs(C * F - 1) ** 2))


def mean_errors_over_phase(
    gains: EndpointGains, C: complex = 1.0, n: int = PHASE_QUADRATURE_POINTS
) -> tuple[float, float]:
    """Mean absolute phase error (rad) and mean absolute amplitude error
    (relative) of ``C F`` over a uniform ``phi0``."""
    F = C * endpoint_gain_F(gains, _phase_grid(n))
    return float(np.mean(np.abs(np.angle(F)))), float(np.mean(np.abs(np.abs(F) - 1)))


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class CalibrationFactor:
    """Complex scalar applied to the endpoint, with its residual MSE ``J``."""

    C: complex
    J: float
    provenance: Provenance
    noise_variance: float | None = None

    def to_dict(self) -> dict:
        return {
            "C": [self.C.real, self.C.imag],
            "J": self.J,
            "provenance": self.provenance,
            "noise_variance": self.noise_variance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationFactor":
        re, im = d["C"]
        return cls(complex(re, im), float(d["J"]), d["provenance"], d.get("noise_variance"))

    @classmethod
    def identity(cls) -> "CalibrationFactor":
        return cls(1.0 + 0j, math.nan, "identity")


def calibration_mse(C: complex, gains: EndpointGains, noise_variance: float = 0.0) -> float:
    """``J(C) = E|C F - 1|^2 + |C|^2 sigma_W^2`` in closed form."""
    return (abs(C) ** 2 * (gains.power + noise_variance)
            - 2 * (C * gains.G_plus).real + 1)


@dataclass(frozen=True)
class NoiseModel:
    """White input noise of variance ``sigma_eta^2`` seen at the endpoint."""

    input_noise_variance: float
    noise_gain: float
    signal_power: float = field(default=1.0)

    @property
    def endpoint_noise_variance(self) -> float:
        """``sigma_W^2 = G_noise * sigma_eta^2``."""
        return self.noise_gain * self.input_noise_variance

    def snr_gain(self, gains: EndpointGains) -> float:
        """``G_SNR = (|G+|^2 + |G-|^2) / G_noise``."""
        return gains.power / self.noise_gain

    def snr_out(self, gains: EndpointGains) -> float:
        return gains.power * self.signal_power / self.endpoint_noise_variance


def optimal_calibration(gains: EndpointGains, noise: NoiseModel | None = None) -> CalibrationFactor:
    """MSE-optimal scalar for a single tone with uniform initial phase.

    Without ``noise`` this is ``C = conj(G+) / (|G+|^2 + |G-|^2)`` with
    ``J = |G-|^2 / (|G+|^2 + |G-|^2)``. With ``noise`` the endpoint noise
    variance is added to the denominator and ``J`` is the minimum
    ``1 - |G+|^2 / (|G+|^2 + |G-|^2 + sigma_W^2)``.
    """
    if abs(gains.G_plus) < DEGENERATE_GAIN:
        raise DegenerateDesignError("|G+| is zero")
    if noise is None:
        C = gains.G_plus.conjugate() / gains.power
        return CalibrationFactor(C, gains.leakage, "analytic_noiseless")
    s2 = noise.endpoint_noise_variance
    C = gains.G_plus.conjugate() / (gains.power + s2)
    J = 1 - abs(gains.G_plus) ** 2 / (gains.power + s2)
    return CalibrationFactor(C, J, "noise_aware", s2)


def deterministic_calibration_mse(gains: EndpointGains, snr_out: float) -> float:
    """Residual MSE of the noiseless scalar under noise: ``l + (1 - l)/SNR_out``."""
    ell = gains.leakage
    return ell + (1 - ell) / snr_out


def general_optimal_calibration(cross: complex, est_power: float, true_power: float) -> CalibrationFactor:
    """Wiener scalar from second moments.

    Parameters
    ----------
    cross : complex
        ``E[conj(Z_hat) Z]``.
    est_power : float
        ``E|Z_hat|^2``.
    true_power : float
        ``E|Z|^2``.
    """
    if not est_power > 0:
        raise ValueError("E|Z_hat|^2 must be positive")
    C = complex(cross) / est_power
    if true_power > 0:
        rho2 = abs(cross) ** 2 / (est_power * true_power)
        J = true_power * (1 - rho2)
    else:
        J = 0.0
    return CalibrationFactor(C, max(J, 0.0), "empirical")


def empirical_calibration(Z, Z_hat) -> CalibrationFactor:
    """``C_M = sum conj(Z_hat_i) Z_i / sum |Z_hat_i|^2`` from paired samples.

    ``J`` is the in-sample residual ``mean |C Z_hat - Z|^2``.
    """
    Z = np.atleast_1d(np.asarray(Z, dtype=complex))
    Zh = np.atleast_1d(np.asarray(Z_hat, dtype=complex))
    if Z.shape != Zh.shape:
        raise ValueError(f"shape mismatch: {Z.shape} vs {Zh.shape}")
    if Z.size < 1:
        raise ValueError("need at least one pair")
    den = np.sum(np.abs(Zh) ** 2)
    if den == 0:
        raise ValueError("all estimates are zero")
    C = complex(np.sum(np.conj(Zh) * Z) / den)
    J = float(np.mean(np.abs(C * Zh - Z) ** 2))
    return CalibrationFactor(C, J, "empirical")


# ---------------------------------------------------------------------------
# noise


def noise_gain(config: EchtConfig) -> float:
    """``G_noise = sum_n |h_n|^2`` of the uncalibrated endpoint."""
    h = endpoint_impulse_response(config)
    return float(np.sum(np.abs(h) ** 2))


def noise_model(config: EchtConfig, snr_in: float, amplitude: float = 1.0) -> NoiseModel:
    """Noise model for input SNR ``A^2 / sigma_eta^2``."""
    if not snr_in > 0:
        raise ValueError(f"snr_in must be positive, got {snr_in}")
    return NoiseModel(amplitude ** 2 / snr_in, noise_gain(config), amplitude ** 2)


# ---------------------------------------------------------------------------
# phase-error distribution


class IntegrationError(ConvergenceError):
    pass


def phase_error_pdf(phi, J: float):
    """Density of ``arg(1 + eps)`` with ``eps`` circular complex Gaussian of
    variance ``J``, in the overflow-free form."""
    if not J > 0:
        raise ValueError(f"J must be positive, got {J}")
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    sq = math.sqrt(J)
    out = (math.exp(-1 / J)
           + math.sqrt(math.pi / J) * c * np.exp(-s * s / J) * special.erfc(-c / sq)) / (2 * math.pi)
    return out[()] if out.ndim == 0 else out


def phase_sigma_simple(J: float) -> float:
    """Small-error approximation ``sqrt(J/2)`` (radians)."""
    return math.sqrt(J / 2)


def phase_sigma_exact(J: float, tol: float = 1e-12) -> float:
    """``sqrt(int phi^2 p(phi) dphi)`` over (-pi, pi] (radians)."""
    return math.sqrt(_integrate_pdf(lambda p: p * p * phase_error_pdf(p, J), J, tol))


def pdf_mass(J: float, tol: float = 1e-12) -> float:
    """``int p(phi) dphi`` over (-pi, pi]; should be 1."""
    return _integrate_pdf(lambda p: phase_error_pdf(p, J), J, tol)


def _integrate_pdf(fn, J: float, tol: float) -> float:
    # symmetric integrand: integrate (0, pi) with breakpoints at multiples of the peak width
    width = math.sqrt(J / 2)
    pts = sorted({min(m * width, math.pi) for m in (1, 2, 4, 8, 16, 32)} - {math.pi})
    edges = [0.0, *pts, math.pi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        res = integrate.quad(fn, a, b, epsabs=tol, epsrel=tol, limit=200, full_output=1)
        val, err = res[0], res[1]
        # a fourth element is quad's warning message; accept round-off-limited results
        if len(res) > 3 and err > 1e-9:
            raise IntegrationError(f"quadrature failed on [{a}, {b}] (error {err:.2e}): {res[3]}")
        total += val
    return 2 * total


def predicted_phase_sigma(J: float, method: Literal["exact", "simple"] = "exact") -> float:
    """Predicted phase-error standard deviation (radians) for residual MSE ``J``."""
    if not J > 0:
        raise ValueError(f"J must be positive, got {J}")
    if method == "simple":
        return phase_sigma_simple(J)
    if method == "exact":
        return phase_sigma_exact(J)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# procedure


def calibrate(config: EchtConfig, noise: NoiseModel | None = None) -> EchtConfig:
    """Compute the gains for ``config`` and return it with the optimal scalar attached."""
    gains = compute_endpoint_gains(config.uncalibrated(), group_delay=False)
    return config.with_calibration(optimal_calibration(gains, noise))


def calibration_report(config: EchtConfig, noise: NoiseModel | None = None, seed: int | None = None) -> dict:
    """Gains, calibration and noise gain as a JSON-ready dict."""
    cfg = config.uncalibrated()
    gains = compute_endpoint_gains(cfg)
    cal = optimal_calibration(gains, noise)
    g_noise = noise_gain(cfg)
    bound = gains.ripple_bound
    return {
        "G_plus": [gains.G_plus.real, gains.G_plus.imag],
        "G_minus": [gains.G_minus.real, gains.G_minus.imag],
        "r": gains.r,
        "alpha_rad": gains.alpha,
        "delta_rad": gains.delta,
        "tau_g_samples": gains.tau_g,
        "C": [cal.C.real, cal.C.imag],
        "J": cal.J,
        "G_noise": g_noise,
        "G_SNR": gains.power / g_noise,
        "phase_ripple_bound_deg": None if math.isnan(bound) else math.degrees(bound),
        "provenance": cal.provenance,
        "seed": seed,
        "config_fingerprint": gains.fingerprint,
    }
