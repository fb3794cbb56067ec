"""The Pohozaev identity by quadrature and the comparison ODE.

Every term of the identity is integrated separately over an annulus; the
residual shrinks at the rate of the Gauss-Legendre rule under refinement.
The comparison ODE is integrated in log-radius and matched against its
closed-form envelope.
"""

from alecurv.analysis_lab import covector_power_field, ode_envelope, pohozaev_residual, radial_power_field
from alecurv.metric_zoo import flat_chart, schwarzschild_chart

cases = [(flat_chart(4), radial_power_field(-1.0), 1.0, 3.0),
         (schwarzschild_chart(4, 1.0), radial_power_field(-1.0), 2.0, 4.0),
         (schwarzschild_chart(4, 1.0), covector_power_field(0, -2.0), 2.0, 4.0)]
for chart, field, r_in, r_out in cases:
    res = pohozaev_residual(chart, field, r_in, r_out, quad_order=3, panels=4)
    t = res.terms
    print(f"{chart.spec()}  T = {field.label}")
    print(f"  lhs {t['lhs']:.10f} = bulk {t['bulk']:.6f} + Gamma {t['gamma_term']:.6f} "
          f"+ Rm {t['rm_term']:.6f} + boundary {t['boundary']:.6f}")
    print(f"  residual {res.residual:.2e}, estimate {res.error_estimate:.2e}, rate {res.rate:.2f} "
          f"(nominal {res.nominal_rate:.0f})")

print()
for a, b in ((2, 3), (3, 2), (2, 2), (4, 4)):
    env = ode_envelope(a, b, 1.0, 1.0, 1e6)
    tail = f"log coefficient {env.log_coefficient:.6f}" if a == b else f"tail exponent {env.tail_exponent:.4f}"
    print(f"a={a} b={b}: max rel. error {env.max_rel_error:.1e}, {tail}")
