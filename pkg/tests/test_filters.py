import json

import numpy as np
import pytest

from cecht.filters import (
    FAMILIES,
    BandpassSpec,
    DigitalFilter,
    UnstableFilterError,
    design_bandpass,
    effective_response,
    frequency_response,
    impulse_response,
)
from cecht.spectral import FrequencyGrid


def expanded_response(filt, omega):
    """Evaluate b(z)/a(z) from the fully multiplied-out polynomials."""
    b, a = filt.to_ba()
    zi = np.exp(-1j * np.asarray(omega))
    num = sum(c * zi**i for i, c in enumerate(b))
    den = sum(c * zi**i for i, c in enumerate(a))
    return num / den


def mag_at(filt, f, fs):
    return abs(frequency_response(filt, np.array([2 * np.pi * f / fs]))[0])


class TestSpec:
    @pytest.mark.parametrize("lo, hi", [(0, 10), (13, 7), (7, 128), (7, 200), (-1, 5)])
    def test_rejects_bad_band(self, lo, hi):
        with pytest.raises(ValueError):
            BandpassSpec(lo, hi, 256.0)

    def test_rejects_order_and_family(self):
        with pytest.raises(ValueError):
            BandpassSpec(7, 13, 256.0, order=0)
        with pytest.raises(ValueError):
            BandpassSpec(7, 13, 256.0, family="fir")

    def test_around(self):
        assert BandpassSpec.around(10, 256).band_hz == pytest.approx((7, 13))


class TestDesign:
    def test_butterworth_half_power_edges(self):
        filt = design_bandpass(BandpassSpec(7, 13, 256.0))
        for f in (7, 13):
            assert mag_at(filt, f, 256) == pytest.approx(1 / np.sqrt(2), rel=0.02)

    def test_chebyshev1_ripple_edges(self):
        filt = design_bandpass(BandpassSpec(7, 13, 256.0, family="chebyshev1", ripple_db=1.0))
        for f in (7, 13):
            assert 20 * np.log10(mag_at(filt, f, 256)) == pytest.approx(-1.0, abs=0.05)

    @pytest.mark.parametrize("family", ["butterworth", "chebyshev1", "bessel"])
    def test_kills_dc_and_nyquist(self, family):
        filt = design_bandpass(BandpassSpec(7, 13, 256.0, family=family))
        H = frequency_response(filt, np.array([0.0, np.pi]))
        assert np.all(np.abs(H) < 1e-6)

    @pytest.mark.parametrize("family", ["chebyshev2", "elliptic"])
    def test_equiripple_stopband_floor(self, family):
        # even-order equiripple stopbands sit at the attenuation floor at DC and Nyquist
        filt = design_bandpass(BandpassSpec(7, 13, 256.0, family=family, attenuation_db=40))
        H = frequency_response(filt, np.array([0.0, np.pi]))
        assert np.all(np.abs(H) <= 10 ** (-40 / 20) * (1 + 1e-9))

    def test_higher_order_falls_faster(self):
        lo = design_bandpass(BandpassSpec(7, 13, 256.0, order=2))
        hi = design_bandpass(BandpassSpec(7, 13, 256.0, order=4))
        assert mag_at(hi, 26, 256) < mag_at(lo, 26, 256)

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("order", range(1, 9))
    @pytest.mark.parametrize("rel_bw", [0.1, 0.3, 0.6, 1.0])
    def test_stable_across_sweep(self, family, order, rel_bw):
        f0 = 10.0
        spec = BandpassSpec(f0 * (1 - rel_bw / 2), f0 * (1 + rel_bw / 2), 256.0, order=order, family=family)
        filt = design_bandpass(spec)
        assert np.all(np.abs(filt.poles) < 1)
        assert len(filt.poles) == 2 * order

    def test_rejects_marginal_design(self, monkeypatch):
        from cecht import filters

        def bad(*args, **kwargs):
            return np.array([[1.0, 0, 0, 1.0, -2.0, 1.0]])  # double pole at z = 1

        monkeypatch.setattr(filters.signal, "butter", bad)
        with pytest.raises(UnstableFilterError):
            design_bandpass(BandpassSpec(7, 13, 256.0))


class TestResponse:
    def test_identity(self):
        H = frequency_response(DigitalFilter.identity(), FrequencyGrid(16))
        np.testing.assert_array_equal(H, np.ones(16))

    def test_unit_delay(self):
        g = FrequencyGrid(16)
        H = frequency_response(DigitalFilter([[0, 1, 0, 1, 0, 0]]), g)
        np.testing.assert_allclose(H, np.exp(-1j * g.bins), atol=1e-15)
        slope = -np.diff(np.unwrap(np.angle(H[:8]))) / np.diff(g.bins[:8])
        np.testing.assert_allclose(slope, 1.0)

    @pytest.mark.parametrize("family", ["butterworth", "chebyshev1"])
    def test_matches_expanded_polynomials(self, family):
        filt = design_bandpass(BandpassSpec(7, 13, 256.0, family=family))
        g = FrequencyGrid(54, 256.0)
        np.testing.assert_allclose(frequency_response(filt, g), expanded_response(filt, g.bins),
                                   rtol=1e-10, atol=1e-10)

    def test_never_rounds_bin_frequencies(self):
        fs, L = 256.0, 54
        filt = design_bandpass(BandpassSpec(7, 13, fs))
        g = FrequencyGrid(L, fs)
        exact = frequency_response(filt, g)
        rounded = frequency_response(filt, 2 * np.pi * np.ceil(g.frequencies) / fs)
        k = g.frequencies != np.ceil(g.frequencies)
        assert k.sum() > 40
        assert np.all(exact[k] != rounded[k])
        assert np.max(np.abs(exact - rounded)) > 1e-2

    def test_effective_response_zeroes_negative_bins(self):
        filt = design_bandpass(BandpassSpec(7, 13, 256.0))
        for L in (54, 55):
            H = effective_response(filt, FrequencyGrid(L, 256.0))
            assert np.all(H[L // 2 + 1:] == 0)


class TestImpulseResponse:
    def test_causal(self):
        filt = design_bandpass(BandpassSpec(7, 13, 256.0, order=3))
        d = 20
        h = impulse_response(filt, 200, delay=d)
        assert np.all(h[:d] == 0)
        assert np.any(h[d:] != 0)
        # shifting the impulse shifts the response
        np.testing.assert_allclose(h[d:], impulse_response(filt, 200 - d), atol=1e-15)

    def test_response_is_transform_of_impulse_response(self):
        filt = design_bandpass(BandpassSpec(7, 13, 256.0))
        h = impulse_response(filt, 4096)
        w = np.array([0.1, 0.25, 0.4])
        dtft = np.array([np.sum(h * np.exp(-1j * wi * np.arange(4096))) for wi in w])
        np.testing.assert_allclose(dtft, frequency_response(filt, w), atol=1e-9)


def test_json_export():
    filt = design_bandpass(BandpassSpec(7, 13, 256.0))
    d = json.loads(json.dumps(filt.to_dict()))
    assert d["family"] == "butterworth" and d["order"] == 2 and d["band_hz"] == [7, 13]
    rebuilt = DigitalFilter(d["sections"])
    assert rebuilt == filt


def test_filter_is_immutable():
    filt = design_bandpass(BandpassSpec(7, 13, 256.0))
    with pytest.raises(ValueError):
        filt.sos[0, 0] = 2.0
