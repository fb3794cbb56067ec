"""Curvature of the explicit ALE metrics.

Builds the Schwarzschild and scalar-flat Kähler charts, evaluates the
curvature at a few points and prints scalar flatness, the Bianchi
identities and the divergence of Rm.  The divergence vanishes for
Schwarzschild and for the Ricci-flat Kähler member only.
"""

import numpy as np

from alecurv.curvature_engine import bianchi_residuals, curvature_batch
from alecurv.metric_zoo import kahler_chart, kahler_profile, schwarzschild_chart


def norm(t):
    return np.sqrt(np.sum(t.reshape(t.shape[0], -1) ** 2, axis=1))


rng = np.random.default_rng(0)
charts = [schwarzschild_chart(4, 1.0), kahler_chart(kahler_profile(2, 1, 1.0)),
          kahler_chart(kahler_profile(2, 2, 1.0)), kahler_chart(kahler_profile(3, 4, 1.0))]
for chart in charts:
    pts = chart.random_points(rng, 5, 2.0, 20.0)
    b = curvature_batch(chart, pts)
    res = bianchi_residuals(b)
    print(chart.spec())
    print(f"  |Rm|            {np.array2string(norm(b['rm']), precision=3)}")
    print(f"  |R| / |Rm|      {np.max(np.abs(b['r_scalar']) / norm(b['rm'])):.1e}")
    print(f"  |Rc| / |Rm|     {np.max(norm(b['rc']) / norm(b['rm'])):.1e}")
    print(f"  |div Rm|/|dRm|  {np.max(norm(b['div_rm']) / norm(b['grad_rm'])):.1e}")
    print(f"  Bianchi         first {np.max(res['first']):.1e}, second {np.max(res['second']):.1e}, "
          f"contracted {np.max(res['contracted']):.1e}")
