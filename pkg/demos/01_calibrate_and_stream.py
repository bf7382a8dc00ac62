"""Design an ecHT, calibrate it, and run it causally over a noisy tone.

Run with ``python demos/01_calibrate_and_stream.py``.
"""

import math

import numpy as np

from cecht import EchtStream, calibrate, compute_endpoint_gains, default_config
from cecht.signals import SignalSpec, synthesize
from cecht.stats import summarize_errors

cfg = default_config()
gains = compute_endpoint_gains(cfg)
print(f"design: f0={cfg.f0} Hz, fs={cfg.sampling_rate} Hz, N={cfg.window_length}")
print(f"bias alpha = {math.degrees(gains.alpha):.3f} deg, leakage ratio r = {gains.r:.5f}")
print(f"group delay tau_g = {gains.tau_g:.2f} samples")

cal_cfg = calibrate(cfg)
print(f"C = {cal_cfg.calibration.C:.5f}, residual MSE J = {cal_cfg.calibration.J:.2e}")

x, ref = synthesize(SignalSpec("tone", f0=10.0, duration=20, phi0=0.7, snr_in=100, seed=1))
for label, c in (("ecHT", cfg), ("c-ecHT", cal_cfg)):
    ests = EchtStream(c).push_many(x)
    idx = np.array([e.sample_index for e in ests])
    err = np.angle([e.value for e in ests]) - ref.theta[idx]
    s = summarize_errors(err).to_dict(degrees=True)
    print(f"{label:7s} bias {s['circular_mean']:+7.3f} deg   spread {s['circular_std']:.3f} deg")
