"""Trade prediction speed against probabilistic accuracy by computing
affinities on a subset of trees (first-to-last usually works best)."""
import numpy as np

from treeuq import PosteriorConfig, benchmark_timing, build_index
from treeuq.harness import write_timing_csv
from treeuq.scenarios import make_scenario

sc = make_scenario("dense-leaf")  # depth-2 trees, n=10000, T=500: big leaves
probes = sc.test.subset(range(100))
cfg = PosteriorConfig(k=31, rho=1e-6)

taus = [500, 250, 100, 50, 25]
rows = benchmark_timing(sc.model, sc.index, probes, taus, "first-to-last",
                        cfg)
print(f"{'tau':>5} {'pred ms':>9} {'affinity ms':>12} {'mean NLL':>9}")
for r in rows:
    print(f"{r['tau']:5d} {1e3 * r['mean_pred_time']:9.2f} "
          f"{1e3 * r['mean_affinity_time']:12.2f} {r['mean_nll']:9.4f}")

write_timing_csv("/tmp/tau_sweep.csv", rows)
print("\nwrote /tmp/tau_sweep.csv (tau, mean_pred_time, "
      "mean_affinity_time, mean_nll)")
