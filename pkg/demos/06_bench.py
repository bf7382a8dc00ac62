"""Runtime of the calibrated ecHT against scipy.signal.hilbert.

Run with ``python demos/06_bench.py``. Numbers depend on the machine.
"""

from cecht.experiments import run_bench

r = run_bench(lengths=(256, 1024, 16384))
for row in r.rows:
    d = dict(zip(r.columns, row))
    print(f"N={d['n']:6d}  hilbert {d['hilbert_us']:8.1f} us  c-ecHT {d['echt_us']:8.1f} us  "
          f"endpoint {d['endpoint_us']:8.1f} us")
print({k: v for k, v in r.summary.items()})
