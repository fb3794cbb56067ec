"""Directional-derivative bounds as exact eigenvalue problems.

For each constrained tensor space the largest value of |T(e_1)|^2 / |T|^2
is the top eigenvalue of a small symmetric matrix.  Every bound turns out
to be attained, so the gap column is zero to rounding.
"""

from alecurv.inequality_lab import constraint_space_build, directional_ratio_max, matrix_claim_max

print(f"{'kind':24s} {'n':>3s} {'dim':>5s} {'lambda_max':>12s} {'bound':>10s} {'gap':>10s}")
for kind, dims in [("rm-deriv-divfree", (3, 4, 5)), ("weyl-deriv-divfree", (4, 5)), ("kahler-ricci", (2, 3)),
                   ("selfdual-ricci", (4,)), ("rm-deriv-unconstrained", (4,))]:
    for n in dims:
        space = constraint_space_build(kind, n)
        res = directional_ratio_max(space)
        print(f"{kind:24s} {res.n:3d} {space.dim:5d} {res.lambda_max:12.9f} {res.bound:10.6f} {res.gap:10.1e}")

print("\nmatrix claim: zero diagonal, zero row sums")
for d in range(2, 8):
    print(f"  d={d}: lambda_max = {matrix_claim_max(d)[0]:.12f}")
