import csv
import time

import numpy as np
import pytest

from cecht.calibration import compute_endpoint_gains, gains_at_frequency
from cecht.config import ConfigError, EchtConfig
from cecht.engine import EchtStream, echt_endpoint
from cecht.signals import SignalSpec, synthesize
from cecht.stats import summarize_errors, wrap
from cecht.tracking import (
    FrequencyTracker,
    NoPeakError,
    TrackerConfig,
    estimate_f0,
    retune,
)


def cos(f, n, fs=256, ph=0.0):
    return np.cos(2 * np.pi * f * np.arange(n) / fs + ph)


class TestEstimate:
    def test_on_bin_tone(self):
        assert estimate_f0(cos(10, 1024), 256, (6, 14)) == pytest.approx(10, abs=0.025)

    def test_off_bin_sub_bin_accuracy(self):
        rng = np.random.default_rng(0)
        for f in rng.uniform(7, 13, 50):
            est = estimate_f0(cos(f, 1024, ph=rng.uniform(0, 6)), 256, (6, 14))
            assert abs(est - f) < 0.1 * 256 / 1024

    def test_white_noise(self):
        with pytest.raises(NoPeakError):
            estimate_f0(np.random.default_rng(1).standard_normal(1024), 256, (6, 14))

    def test_band_restriction(self):
        x = cos(8, 2048) + cos(12, 2048)
        try:
            f = estimate_f0(x, 256, (9, 11))
        except NoPeakError:
            return
        assert 9 < f < 11 and abs(f - 8) > 0.5 and abs(f - 12) > 0.5

    def test_too_short(self):
        with pytest.raises(ValueError):
            estimate_f0(cos(10, 100), 256, (6, 14))

    def test_tracker_config_validation(self):
        with pytest.raises(ValueError):
            TrackerConfig((0, 14), 256)
        with pytest.raises(ValueError):
            TrackerConfig((6, 14), 256, update_interval=0)
        with pytest.raises(ValueError):
            TrackerConfig((6, 14), 256, analysis_length=100)


class TestRetune:
    def test_same_f0_is_bit_identical(self, cfg10):
        x = np.random.default_rng(2).standard_normal(200)
        a, b = EchtStream(cfg10), EchtStream(cfg10)
        retune(a, 10.0, calibrate=False)
        assert [e.value for e in a.push_many(x)] == [e.value for e in b.push_many(x)]

    def test_redesigns_filter_and_calibration(self, cfg10):
        s = EchtStream(cfg10)
        ev = retune(s, 11.0)
        assert s.config.bandpass.band_hz == pytest.approx((7.7, 14.3))
        g = compute_endpoint_gains(s.config.uncalibrated(), group_delay=False)
        assert s.config.calibration.C == pytest.approx(np.conj(g.G_plus) / g.power)
        assert ev.alpha_deg == pytest.approx(np.degrees(g.alpha))

    def test_rejects(self, cfg10):
        with pytest.raises(ConfigError):
            retune(EchtStream(cfg10), 200.0)

    def test_shift_law_after_retune(self, cfg10):
        s = EchtStream(cfg10)
        retune(s, 11.0)
        cfg = s.config
        g = compute_endpoint_gains(cfg.uncalibrated())
        for rel in (-0.02, -0.01, 0.01, 0.02):
            dw = rel * cfg.omega0
            resid = np.angle(cfg.calibration.C * gains_at_frequency(cfg, cfg.omega0 + dw)[0])
            assert resid == pytest.approx(-dw * g.tau_g, rel=0.05)

    def test_gains_cheaper_than_design_scaling(self):
        # gains + calibration cost grows linearly in L
        from cecht.calibration import optimal_calibration

        def cost(L):
            cfg = EchtConfig.from_f0(10, 256, dft_length=L)
            cfg.endpoint_weights
            t = time.perf_counter()
            for _ in range(20):
                optimal_calibration(compute_endpoint_gains(cfg, group_delay=False))
            return (time.perf_counter() - t) / 20

        small, large = min(cost(4096) for _ in range(3)), min(cost(65536) for _ in range(3))
        assert large / small < 16 * 2


class TestTracker:
    def test_causal(self, cfg10):
        x, _ = synthesize(SignalSpec("linear_chirp", f_start=9.5, f_end=10.5, duration=20))
        tk = TrackerConfig((6, 14), 256, update_interval=2.0)
        full = FrequencyTracker(cfg10, tk).run(x)
        part = FrequencyTracker(cfg10, tk).run(x[:3000])
        n = len(part[0])
        assert np.array_equal(full[1][:n], part[1]) and np.array_equal(full[2][:n], part[2])

    def test_follows_chirp_and_beats_fixed(self, cfg10):
        spec = SignalSpec("linear_chirp", f_start=9.5, f_end=10.5, duration=60)
        x, ref = synthesize(spec)
        tk = TrackerConfig((6, 14), 256)
        trk = FrequencyTracker(cfg10.retuned(9.5), tk)
        idx, z, f0 = trk.run(x)
        fixed = FrequencyTracker(cfg10.retuned(9.5), tk, track=False)
        _, zf, _ = fixed.run(x)
        assert len(trk.events) > 3 and f0[-1] > 10.2
        e_tr = np.abs(wrap(np.angle(z) - ref.theta[idx]))
        e_fx = np.abs(wrap(np.angle(zf) - ref.theta[idx]))
        assert e_tr.mean() < e_fx.mean()

    def test_event_log(self, cfg10, tmp_path):
        x, _ = synthesize(SignalSpec("linear_chirp", f_start=9.5, f_end=10.5, duration=30))
        trk = FrequencyTracker(cfg10, TrackerConfig((6, 14), 256))
        trk.run(x)
        p = trk.write_event_log(tmp_path / "ev.csv")
        rows = list(csv.reader(p.open()))
        assert rows[0] == ["time_s", "f0_hz", "alpha_deg", "C_re", "C_im", "J"]
        assert len(rows) == len(trk.events) + 1 and float(rows[1][0]) == 0.0

    def test_no_op_on_steady_tone(self, cfg10):
        x = cos(10, 256 * 20)
        trk = FrequencyTracker(cfg10, TrackerConfig((6, 14), 256))
        fixed = FrequencyTracker(cfg10, TrackerConfig((6, 14), 256), track=False)
        assert np.array_equal(trk.run(x)[1], fixed.run(x)[1]) and len(trk.events) == 1
