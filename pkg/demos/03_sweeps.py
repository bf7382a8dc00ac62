"""Robustness sweeps over filter and window parameters.

Run with ``python demos/03_sweeps.py``. Each panel also exists as
``cecht sweep <panel>``.
"""

from cecht.experiments import PANELS, run_sweep

for key, name in PANELS.items():
    r = run_sweep(name, noise_trials=500)
    echt = r.column("echt_mean_deg")
    cecht = r.column("cecht_mean_deg")
    print(f"panel {key} ({name}): mean |error| ecHT {min(echt):.2f}..{max(echt):.2f} deg, "
          f"c-ecHT {min(cecht):.2f}..{max(cecht):.2f} deg")
