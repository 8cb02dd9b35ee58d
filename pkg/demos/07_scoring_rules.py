"""Tour of the scoring rules: NLL, CRPS (closed form vs quadrature),
pinball loss, interval score, and calibration diagnostics."""
import numpy as np

from treeuq import (NeighborSet, calibration_diagnostics, check_score, crps,
                    crps_quadrature, fit_distribution, interval_score, nll)

rng = np.random.default_rng(2)
nb = NeighborSet(np.arange(60), rng.gamma(2.0, 1.0, 60), 60)

normal = fit_distribution("normal", nb, 2.0, 1.0)
kde = fit_distribution("kde", nb, 2.0, 1.0)
y = 2.6

print(f"{'score':<15} {'normal':>10} {'kde':>10}")
for name, fn in [("nll", nll), ("crps", crps), ("check", check_score),
                 ("interval", interval_score)]:
    print(f"{name:<15} {fn(normal, y):10.4f} {fn(kde, y):10.4f}")

# the normal CRPS has a closed form; quadrature agrees
closed = crps(normal, y)
quad = crps_quadrature(normal, y)
print(f"\nnormal CRPS closed form {closed:.8f} vs quadrature {quad:.8f} "
      f"(|diff| = {abs(closed - quad):.2e})")

# calibration: well-specified forecasts vs too-wide forecasts
m = 4000
mus = rng.uniform(-1, 1, m)
ys = mus + rng.standard_normal(m)
good = [fit_distribution("normal", nb, mu, 1.0) for mu in mus]
wide = [fit_distribution("normal", nb, mu, 4.0) for mu in mus]
print("\nwell-calibrated:", calibration_diagnostics(good, ys))
print("variance x4    :", calibration_diagnostics(wide, ys))
