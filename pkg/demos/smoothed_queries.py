"""Release smoothed histograms through shifted product queries.

A product query scores each row by a per-attribute window evaluated at
the circular offset between the row and the target.  With an indicator
window this is an ordinary marginal; with a triangular window each
released cell becomes a locally averaged count, which suits noisy
small-domain histograms.  The budget machinery is identical, only the
window spectra change the per-frequency allocation.
"""

import numpy as np

from fourier_marginals import budget, core, mechanism

rng = np.random.default_rng(5)

universe = core.build_universe((12, 2))
rows = np.column_stack([
    np.clip(np.round(rng.normal(6.0, 2.0, size=600)), 0, 11).astype(int),
    rng.integers(0, 2, size=600)])
data = core.Dataset(universe=universe, rows=rows)

# triangular window of halfwidth 2 on the first attribute, indicator
# on the second; weights sum to 1 so cells stay on the count scale
window = np.zeros(12)
for offset, value in ((0, 0.4), (1, 0.2), (2, 0.1), (10, 0.1), (11, 0.2)):
    window[offset] = value
phi = (tuple(window), (1.0, 0.0))

workload = core.Workload(universe=universe, sets=((0,), (0, 1)),
                         weights=np.array([0.5, 0.5]), kind="product",
                         phi=phi)

result = mechanism.release_product(
    data, workload, mu=1.0, sampler=budget.SeededSampler(17))

exact_hist = np.bincount(rows[:, 0], minlength=12).astype(float)
smoothed = np.array([(window[(t - np.arange(12)) % 12] * exact_hist).sum()
                     for t in range(12)])

print("smoothed histogram of attribute 0 (triangular window):")
print(f"{'t':>3}  {'released':>9}  {'exact smoothed':>14}  {'raw count':>9}")
released = result.table((0,))
for t in range(12):
    print(f"{t:>3}  {released[t]:>9.1f}  {smoothed[t]:>14.1f}  "
          f"{int(exact_hist[t]):>9}")

sigma = result.per_set_sigma
print(f"\nper-query sigma: single {sigma[(0,)]:.3f}, "
      f"joint {sigma[(0, 1)]:.3f}")
print("an indicator window on both attributes reproduces the plain")
print("marginal release, noise stream included")
