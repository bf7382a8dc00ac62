"""Non-stationary inputs: a slow chirp and a drifting rhythm.

Run with ``python demos/04_chirp_and_drift.py``.
"""

from cecht.experiments import run_chirp_replication, run_track_drift

chirp = run_chirp_replication(n_points=200)
for row in chirp.rows:
    r = dict(zip(chirp.columns, row))
    print(f"{r['estimator']:7s} phase {r['phase_mean_deg']:.3f} +/- {r['phase_std_deg']:.3f} deg, "
          f"amplitude {r['amp_mean_pct']:.2f}%")

drift = run_track_drift(duration=60, drift_period=30)
for row in drift.rows:
    r = dict(zip(drift.columns, row))
    print(f"{r['scenario']:10s} {r['condition']:13s} bias {r['bias_deg']:+7.2f} deg")
print("tracked c-ecHT has the smallest bias:", drift.summary["tracked_cecht_best"])
