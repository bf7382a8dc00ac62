import json
import math

import numpy as np
import pytest

from cecht import experiments as ex
from cecht.calibration import compute_endpoint_gains
from cecht.config import ConfigError
from conftest import identity_config

REQUIRED_COLUMNS = ("axis_value", "echt_mean_deg", "echt_std_deg", "cecht_mean_deg", "cecht_std_deg", "seed")


@pytest.fixture(scope="module")
def panels():
    return {name: ex.run_sweep(name) for name in ex.PANELS.values()}


@pytest.fixture(scope="module")
def drift():
    return ex.run_track_drift()


def rows_by_axis(result):
    return {r[0]: dict(zip(result.columns, r)) for r in result.rows}


class TestManifest:
    def test_csv_header(self):
        r = ex.run_sweep("B", grid=[1, 2])
        lines = r.to_csv().splitlines()
        assert lines[0] == "# schema: cecht.sweep-order/1"
        man = json.loads(lines[1][len("# manifest: "):])
        assert man["experiment"] == "sweep-order"
        assert man["config"]["window_length"] == 54
        assert man["axes"]["order"] == [1, 2]
        assert man["seed"] == 0 and man["version"]
        assert lines[2].split(",") == list(ex.SWEEP_COLUMNS)

    def test_round_trip(self, tmp_path):
        r = ex.run_sweep("E", grid=["butterworth", "bessel"])
        path = r.write_csv(tmp_path / "e.csv")
        m = ex.read_manifest(path)
        assert m == r.manifest
        again = ex.rerun(m)
        assert again.to_csv() == path.read_text()

    def test_rerun_noise_panel_bit_identical(self, tmp_path):
        r = ex.run_sweep("D", grid=[1.0, 10.0], noise_trials=500, seed=3)
        path = r.write_csv(tmp_path / "d.csv")
        assert ex.rerun(ex.read_manifest(path)).to_csv() == path.read_text()

    def test_rerun_mc_table(self, tmp_path):
        r = ex.run_mc_table(trials=10_000, snrs=(1.0,), seed=5)
        path = r.write_csv(tmp_path / "mc.csv")
        assert ex.rerun(ex.read_manifest(path)).to_csv() == path.read_text()

    def test_json_output_carries_manifest(self, tmp_path):
        r = ex.run_bench(lengths=(64,), min_time=0.001)
        p = tmp_path / "b.json"
        p.write_text(r.to_json())
        assert ex.read_manifest(p).experiment == "bench"

    def test_source_date_epoch(self, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        assert ex.make_manifest("x", None).timestamp == "1970-01-01T00:00:00+00:00"

    def test_missing_manifest(self, tmp_path):
        p = tmp_path / "plain.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigError):
            ex.read_manifest(p)

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            ex.rerun(ex.ExperimentManifest("nope", None))


class TestSweep:
    def test_panel_aliases(self):
        a = ex.run_sweep("A", grid=[0.6])
        b = ex.run_sweep("bandwidth", grid=[0.6])
        assert a.rows == b.rows

    def test_unknown_panel(self):
        with pytest.raises(ConfigError):
            ex.run_sweep("G")

    def test_needs_bandpass(self):
        with pytest.raises(ConfigError):
            ex.run_sweep("order", identity_config())

    def test_columns(self, panels):
        for r in panels.values():
            assert r.columns[:6] == REQUIRED_COLUMNS
            assert len(r.rows) == len(ex.DEFAULT_GRIDS[r.manifest.params["panel"]])

    def test_worker_count_irrelevant(self, monkeypatch):
        rows = []
        for n in ("1", "4"):
            monkeypatch.setenv("ECHT_THREADS", n)
            rows.append(ex.run_sweep("D", grid=[0.3, 3.0], noise_trials=400).rows)
        assert rows[0] == rows[1]

    def test_noise_seeded(self):
        a = ex.run_sweep("D", grid=[1.0], noise_trials=400, seed=1).rows
        b = ex.run_sweep("D", grid=[1.0], noise_trials=400, seed=2).rows
        assert a != b

    def test_default_point_matches_analysis(self, panels, cfg10):
        # the default design appears in panels A (0.6), B (2), E (butterworth), F (2.1)
        g = compute_endpoint_gains(cfg10, group_delay=False)
        for name, key in (("bandwidth", 0.6), ("order", 2), ("family", "butterworth"),
                          ("window-cycles", 2.1), ("detuning", 0.0)):
            row = rows_by_axis(panels[name])[key]
            assert row["echt_bias_deg"] == pytest.approx(math.degrees(g.alpha), abs=1e-9)
            assert abs(row["cecht_bias_deg"]) < 1e-9
            assert row["cecht_max_deg"] <= math.degrees(g.ripple_bound) + 1e-9

    @pytest.mark.parametrize("name", ["bandwidth", "order", "snr", "family", "window-cycles"])
    def test_calibration_never_hurts(self, panels, name):
        for row in rows_by_axis(panels[name]).values():
            assert row["cecht_mean_deg"] <= row["echt_mean_deg"] + 0.1

    def test_detuning_centre_bias_removed(self, panels):
        row = rows_by_axis(panels["detuning"])[0.0]
        assert abs(row["cecht_bias_deg"]) < 0.1

    def test_detuning_centre_mean_abs_is_ripple(self, panels, cfg10):
        # with the bias gone what remains is |asin(r) sin(.)|-like ripple, mean 2/pi of its peak
        g = compute_endpoint_gains(cfg10, group_delay=False)
        row = rows_by_axis(panels["detuning"])[0.0]
        assert row["cecht_mean_deg"] == pytest.approx(2 / np.pi * math.degrees(g.ripple_bound), rel=0.02)

    @pytest.mark.xfail(strict=True, reason="mean |error| at zero detuning is the leakage ripple, about 0.47 deg")
    def test_detuning_centre_mean_abs_below_tenth(self, panels):
        assert rows_by_axis(panels["detuning"])[0.0]["cecht_mean_deg"] < 0.1

    @pytest.mark.xfail(strict=True, reason="off-centre the fixed calibration can add to a bias that detuning had cancelled")
    def test_detuning_calibration_never_hurts(self, panels):
        for row in rows_by_axis(panels["detuning"]).values():
            assert row["cecht_mean_deg"] <= row["echt_mean_deg"] + 0.1

    def test_detuning_small_offsets(self, panels):
        # within the locally linear range the calibrated error is the smaller one
        for d, row in rows_by_axis(panels["detuning"]).items():
            if 0 <= d <= 0.2:
                assert row["cecht_mean_deg"] <= row["echt_mean_deg"] + 0.1

    def test_snr_ten(self, panels):
        row = rows_by_axis(panels["snr"])[10.0]
        assert row["cecht_std_deg"] == pytest.approx(3.9, rel=0.15)

    def test_snr_monotone(self, panels):
        stds = panels["snr"].column("cecht_std_deg")
        assert all(a > b for a, b in zip(stds, stds[1:]))

    def test_window_cycles_echt_spread(self, panels):
        m = panels["window-cycles"].column("echt_mean_deg")
        assert max(m) - min(m) > 3

    @pytest.mark.filterwarnings("ignore:window holds")
    def test_window_cycles_cecht_bounded_by_ripple(self, panels, cfg10):
        for row in rows_by_axis(panels["window-cycles"]).values():
            N = row["window_length"]
            g = compute_endpoint_gains(cfg10.replace(window_length=N, dft_length=None), group_delay=False)
            assert row["cecht_max_deg"] <= math.degrees(g.ripple_bound) + 1e-9

    @pytest.mark.xfail(strict=True, reason="leakage near 1.3 cycles leaves about 2.7 deg of calibrated ripple")
    def test_window_cycles_cecht_spread(self, panels):
        m = panels["window-cycles"].column("cecht_mean_deg")
        assert max(m) - min(m) < 1


@pytest.fixture(scope="module")
def table():
    return ex.run_mc_table(trials=20_000)


class TestMcTable:
    def test_rejects_few_trials(self):
        with pytest.raises(ConfigError):
            ex.run_mc_table(trials=999)

    def test_monte_carlo_matches_exact_integral(self, table):
        for row in table.rows:
            r = dict(zip(table.columns, row))
            assert r["mc_deg"] == pytest.approx(r["exact_deg"], rel=0.02)

    def test_simple_form_underestimates_at_low_snr(self, table):
        r = dict(zip(table.columns, table.rows[0]))
        assert r["simple_deg"] < 0.85 * r["exact_deg"]

    def test_leakage_adds_to_total(self, table):
        for row in table.rows:
            r = dict(zip(table.columns, row))
            assert r["exact_leak_deg"] >= r["exact_deg"]
            assert r["mc_total_deg"] == pytest.approx(r["exact_leak_deg"], rel=0.03)

    def test_doubling_trials(self):
        a = ex.run_mc_table(trials=50_000, snrs=(1.0, 10.0, 100.0))
        b = ex.run_mc_table(trials=100_000, snrs=(1.0, 10.0, 100.0))
        for ra, rb in zip(a.rows, b.rows):
            assert abs(rb[1] / ra[1] - 1) < 0.005

    def test_worker_count_irrelevant(self):
        a = ex.run_mc_table(trials=10_000, snrs=(1.0,), workers=1)
        b = ex.run_mc_table(trials=10_000, snrs=(1.0,), workers=3)
        assert a.rows == b.rows


class TestChirp:
    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            ex.run_chirp_replication(mode="x")

    @pytest.mark.parametrize("mode", ["sweep", "chirp"])
    def test_calibration_helps(self, mode):
        r = ex.run_chirp_replication(mode=mode, n_points=100)
        unc, cal = (dict(zip(r.columns, row)) for row in r.rows)
        assert cal["phase_mean_deg"] < unc["phase_mean_deg"] / 5
        assert cal["amp_mean_pct"] < unc["amp_mean_pct"]

    def test_sweep_deterministic(self):
        a = ex.run_chirp_replication(n_points=50).rows
        assert a == ex.run_chirp_replication(n_points=50).rows


class TestDrift:
    def test_rows(self, drift):
        assert [r[:2] for r in drift.rows[:4]] == [("drift", c) for c, _, _ in ex.DRIFT_CONDITIONS]

    def test_orderings(self, drift):
        assert drift.summary["tracked_cecht_best"]
        assert drift.summary["tracked_echt_worse_than_fixed_echt"]

    def test_tracked_bias_small(self, drift):
        row = dict(zip(drift.columns, drift.rows[1]))
        assert row["abs_bias_deg"] < 0.5 and row["retunes"] > 0

    def test_frequency_shift_slope(self, drift):
        fs = drift.summary["frequency_shift"]
        assert fs["relative_error"] < 0.05

    def test_zero_drift_tracking_is_noop(self, drift):
        gaps = drift.summary["zero_drift_tracking_gap_deg"]
        assert gaps["cecht"] < 0.2 and gaps["echt"] < 0.2

    @pytest.mark.xfail(strict=True, reason="the uncalibrated condition keeps its static bias alpha without drift")
    def test_zero_drift_all_conditions_together(self, drift):
        b = [r[2] for r in drift.rows if r[0] == "zero-drift" and r[1] != "fixed-echt"]
        assert max(b) - min(b) < 0.2

    def test_fixed_bias_tracks_mean_offset(self, drift, cfg10):
        # fixed c-ecHT bias follows -tau_g * dw at the mean signal frequency
        g = compute_endpoint_gains(cfg10)
        dw = 2 * np.pi * (9.6 - 10.0) / 256
        row = dict(zip(drift.columns, drift.rows[0]))
        assert row["bias_deg"] == pytest.approx(math.degrees(-g.tau_g * dw), rel=0.1)


class TestBench:
    def test_rows_and_summary(self):
        r = ex.run_bench(lengths=(64, 256), min_time=0.005)
        assert [row[0] for row in r.rows] == [64, 256]
        assert all(row[1] > 0 and row[2] > 0 and row[3] > 0 for row in r.rows)
        assert "median_overhead" in r.summary and "complexity_ok" not in r.summary
