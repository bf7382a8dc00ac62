"""Endpoint-corrected Hilbert transform with optimal scalar calibration."""

from .calibration import (
    CalibrationFactor,
    EndpointGains,
    NoiseModel,
    calibrate,
    compute_endpoint_gains,
    empirical_calibration,
    endpoint_gain_F,
    endpoint_group_delay,
    general_optimal_calibration,
    noise_gain,
    optimal_calibration,
    predicted_phase_sigma,
)
from .config import EchtConfig, default_config
from .engine import EchtStream, PhaseEstimate, echt_endpoint, echt_window
from .filters import BandpassSpec, DigitalFilter, design_bandpass, frequency_response

__version__ = "0.1.0"
