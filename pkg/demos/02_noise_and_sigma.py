"""How input noise maps to phase spread, checked by Monte Carlo.

Run with ``python demos/02_noise_and_sigma.py``.
"""

from cecht import default_config
from cecht.experiments import run_mc_table

table = run_mc_table(default_config(), trials=20_000)
print(f"noise gain {table.summary['G_noise']:.5f}, SNR gain {table.summary['G_SNR']:.3f}")
print(f"{'SNR':>6} {'MC':>8} {'exact':>8} {'simple':>8}  (deg)")
for row in table.rows:
    r = dict(zip(table.columns, row))
    print(f"{r['snr_in']:6g} {r['mc_deg']:8.3f} {r['exact_deg']:8.3f} {r['simple_deg']:8.3f}")
print("the simple sqrt(J/2) form is only trustworthy once J is small")
