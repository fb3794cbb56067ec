"""Decay orders along radius ladders and volume growth of the Kähler family.

The metric deviation decays like r^{-(n-2)} and the curvature like r^{-n},
except for the Ricci-flat member (p = m) where both gain two orders.  The
volume of {rho <= r} is exactly |S^{2m-1}| (r^{2m} - a^{2m}) / (2m).
"""

import numpy as np

from alecurv.analysis_lab import decay_fit, volume_expansion_fit
from alecurv.metric_zoo import kahler_chart, kahler_profile, schwarzschild_chart

for chart in (schwarzschild_chart(4, 1.0), kahler_chart(kahler_profile(2, 1, 1.0)),
              kahler_chart(kahler_profile(2, 2, 1.0)), kahler_chart(kahler_profile(3, 1, 1.0))):
    for q in ("metric_deviation", "rm_norm", "grad_rm_norm"):
        fit = decay_fit(chart, q, 10.0, 2.0, 8, 16, seed=1)
        print(f"{chart.spec():28s} {q:18s} exponent {fit.exponent:7.4f} +- {fit.stderr:.1e}")

print()
radii = np.geomspace(10, 100, 8)
for p in (1, 2, 3):
    fit = volume_expansion_fit(kahler_profile(2, p, 1.0), radii)
    print(f"m=2 p={p}: c_lead {fit.c_lead:.8f} (expected {fit.expected_lead:.8f}), c_sub {fit.c_sub:+.3e}, "
          f"max |Vol / first integral - 1| = {np.max(np.abs(fit.volumes / fit.first_integral - 1)):.1e}")
