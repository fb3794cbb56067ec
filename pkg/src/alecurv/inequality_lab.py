"""Sharp Kato-type inequalities as exact eigenvalue problems.

Each inequality ``sup_v |T(v)|^2 <= c |T|^2`` over a linear space of tensors
(last slot = derivative direction) becomes a symmetric eigenproblem: with an
orthonormal basis ``Phi`` of the space and ``v = e_1``, the largest
eigenvalue of ``S^T S`` (``S`` = rows of ``Phi`` whose last index is 1) is
the best constant.  Fixing ``v`` is legitimate because each constraint set
is invariant under a group acting transitively on unit directions
(SO(n) for Riemannian kinds, U(m) for the Kähler kind, SO(4) for the
self-dual kind); :func:`invariance_audit` checks this numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import (
    DenseTensor,
    ExplicitRows,
    SymmetryClass,
    antisymmetric,
    curvature_class,
    cyclic,
    null_space_basis,
    pair_symmetric,
    random_orthogonal,
    rotate,
    symmetric,
    trace_free,
    weyl_class,
)

__all__ = [
    "KINDS",
    "ConstraintSpace",
    "RatioResult",
    "ConstantFit",
    "EmptySpaceError",
    "constraint_space_build",
    "directional_ratio_max",
    "directional_ratio",
    "invariance_audit",
    "matrix_claim_max",
    "matrix_claim_spectrum",
    "fit_minimal_C",
    "claimed_bound",
]

KINDS = (
    "rm-deriv-divfree",
    "weyl-deriv-divfree",
    "kahler-ricci",
    "selfdual-ricci",
    "rm-deriv-unconstrained",
)


class EmptySpaceError(ValueError):
    """A constraint system left only the zero tensor."""


def claimed_bound(kind, n):
    """Claimed sharp constant for ``kind`` in real dimension ``n``."""
    if kind in ("rm-deriv-divfree", "kahler-ricci", "rm-deriv-unconstrained"):
        return n / (n + 2)
    if kind == "weyl-deriv-divfree":
        return (n - 1) / (n + 1)
    if kind == "selfdual-ricci":
        return 2 / 3
    raise ValueError(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class ConstraintSpace:
    """Orthonormal basis (columns) of a constrained tensor space."""

    kind: str
    n: int
    order: int
    ambient_dim: int
    basis: np.ndarray = field(repr=False)
    symmetry: SymmetryClass = field(repr=False)
    hypotheses: str = ""

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def has_bound(self):
        return self.kind != "rm-deriv-unconstrained"

    def element(self, coeffs):
        return DenseTensor(self.n, self.order, self.basis @ np.asarray(coeffs, dtype=float))

    def elements(self):
        return [DenseTensor(self.n, self.order, col) for col in self.basis.T]

    def residual(self, arrays):
        """Max constraint residual for component arrays (batched)."""
        res = self.symmetry.residual(arrays)
        return float(np.max(np.abs(res))) if res.size else 0.0

    def gram_error(self):
        g = self.basis.T @ self.basis
        return float(np.max(np.abs(g - np.eye(self.dim)))) if self.dim else 0.0


def _deriv_space(kind, n):
    """Second-Bianchi (and divergence) constrained 5-tensors."""
    base_cls = weyl_class(n) if kind == "weyl-deriv-divfree" else curvature_class(n)
    base = base_cls.basis()
    ambient = np.kron(base, np.eye(n))
    extra = [cyclic(5, (2, 3, 4))]
    hyp = ["curvature symmetries in slots 1-4", "second Bianchi in slots 3-5"]
    if kind != "rm-deriv-unconstrained":
        extra.append(trace_free(0, 4))
        hyp.append("zero divergence over slots 1,5")
    if kind == "weyl-deriv-divfree":
        hyp.insert(1, "total trace-freeness in slots 1-4")
    four = base_cls.constraints
    lifted = tuple(_lift_to_order5(c) for c in four)
    sym = SymmetryClass(n, 5, lifted + tuple(extra), name=kind)
    cols = ambient.T.reshape((-1,) + (n,) * 5)
    resid = np.concatenate([c.residual(cols) for c in extra], axis=1)
    coeffs = null_space_basis(resid.T)
    basis = ambient @ coeffs
    if basis.shape[1]:
        basis, _ = np.linalg.qr(basis)
    return basis, sym, base.shape[1] * n, "; ".join(hyp)


def _lift_to_order5(rel):
    """Reuse an order-4 relation on the first four slots of a 5-tensor."""
    if rel.trace is not None:
        return trace_free(*rel.trace)
    terms = tuple((c, pat + "e") for c, pat in rel.terms)
    return type(rel)(terms, None, rel.name)


def _complex_structure(m):
    j = np.zeros((2 * m, 2 * m))
    j[m:, :m] = np.eye(m)
    j[:m, m:] = -np.eye(m)
    return j


def _kahler_space(m):
    n = 2 * m
    j = _complex_structure(m)
    eye = np.eye(n)
    # T(Je_i, Je_j, e_k) = T(e_i, e_j, e_k)
    j_rows = np.eye(n**3) - np.kron(np.kron(j.T, j.T), eye)
    zvec = [(eye[i] - 1j * eye[m + i]) / np.sqrt(2) for i in range(m)]
    rows = []
    for i in range(m):
        for jj in range(m):
            for k in range(i + 1, m):
                c = (
                    np.einsum("a,b,c->abc", zvec[i], zvec[jj].conj(), zvec[k])
                    - np.einsum("a,b,c->abc", zvec[k], zvec[jj].conj(), zvec[i])
                ).reshape(-1)
                rows.append(c.real)
                rows.append(c.imag)
    bianchi = np.array(rows) if rows else np.zeros((0, n**3))
    sym = SymmetryClass(
        n,
        3,
        (
            symmetric(3, 0, 1),
            ExplicitRows(j_rows, "J-invariance"),
            ExplicitRows(bianchi, "Kahler Bianchi"),
            trace_free(0, 1),
        ),
        name="kahler-ricci",
    )
    hyp = "Rc symmetric and J-invariant; S(Z_i, Zbar_j, Z_k) symmetric in i,k; constant scalar curvature"
    return sym.basis(), sym, n * n * (n + 1) // 2, hyp


def _selfdual_rows():
    """The twelve relations for R_{ij,k} (0-based), i = 0..3."""
    rows = []
    triples = [((1, 0), (0, 1), (2, 3), (3, 2)), ((2, 0), (0, 2), (3, 1), (1, 3)), ((3, 0), (0, 3), (1, 2), (2, 1))]
    for i in range(4):
        for lhs, a, b, c in triples:
            r = np.zeros((4, 4, 4))
            # R_{i,lhs0, lhs1} - R_{i,a0,a1} - R_{i,b0,b1} + R_{i,c0,c1} = 0
            r[i, lhs[0], lhs[1]] += 1
            r[i, a[0], a[1]] -= 1
            r[i, b[0], b[1]] -= 1
            r[i, c[0], c[1]] += 1
            rows.append(r.reshape(-1))
    return np.array(rows)


def _selfdual_space(contracted_bianchi=False):
    cons = [symmetric(3, 0, 1), ExplicitRows(_selfdual_rows(), "twelve relations"), trace_free(0, 1)]
    hyp = "Rc symmetric; dRc orthogonal to Lambda^2_+ (twelve relations); constant scalar curvature"
    if contracted_bianchi:
        cons.append(trace_free(0, 2))
        hyp += "; contracted Bianchi"
    sym = SymmetryClass(4, 3, tuple(cons), name="selfdual-ricci")
    return sym.basis(), sym, 40, hyp


_SPACE_CACHE = {}


def constraint_space_build(kind, n_or_m, allow_empty=False, contracted_bianchi=False):
    """Build the admissible tensor space for ``kind``.

    ``n_or_m`` is the real dimension, except for ``"kahler-ricci"`` where it
    is the complex dimension ``m``.  ``"selfdual-ricci"`` requires 4.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    if not isinstance(n_or_m, (int, np.integer)):
        raise ValueError("dimension parameter must be an integer")
    key = (kind, int(n_or_m), contracted_bianchi)
    if key in _SPACE_CACHE:
        space = _SPACE_CACHE[key]
    else:
        if kind == "kahler-ricci":
            if not 1 <= n_or_m <= 4:
                raise ValueError("kahler-ricci needs 1 <= m <= 4")
            basis, sym, amb, hyp = _kahler_space(int(n_or_m))
            n, order = 2 * int(n_or_m), 3
        elif kind == "selfdual-ricci":
            if n_or_m != 4:
                raise ValueError("selfdual-ricci is defined for n = 4 only")
            basis, sym, amb, hyp = _selfdual_space(contracted_bianchi)
            n, order = 4, 3
        else:
            if not 2 <= n_or_m <= 8:
                raise ValueError("n must lie in 2..8")
            basis, sym, amb, hyp = _deriv_space(kind, int(n_or_m))
            n, order = int(n_or_m), 5
        basis.setflags(write=False)
        space = ConstraintSpace(kind, n, order, amb, basis, sym, hyp)
        _SPACE_CACHE[key] = space
    if space.dim == 0 and not allow_empty:
        raise EmptySpaceError(f"{kind} with parameter {n_or_m} has an empty admissible space")
    return space


@dataclass(frozen=True)
class RatioResult:
    kind: str
    n: int
    lambda_max: float
    maximizer: DenseTensor | None
    bound: float
    space_dim: int
    eigenvalues: np.ndarray = field(repr=False, default=None)

    @property
    def gap(self):
        return self.bound - self.lambda_max

    def within_bound(self, tol=1e-9):
        return self.lambda_max <= self.bound + tol


def _last_slot_rows(basis, n, order, direction):
    cols = basis.T.reshape((-1, n ** (order - 1), n))
    return cols @ direction  # (d, n^(order-1))


def directional_ratio_max(space, direction=None):
    """Largest ``|T(v)|^2 / |T|^2`` over the space, ``v = e_1`` by default."""
    n = space.n
    v = np.eye(n)[0] if direction is None else np.asarray(direction, dtype=float)
    if space.dim == 0:
        return RatioResult(space.kind, n, 0.0, None, claimed_bound(space.kind, n), 0, np.zeros(0))
    s = _last_slot_rows(space.basis, n, space.order, v)
    form = s @ s.T
    evals, evecs = np.linalg.eigh(0.5 * (form + form.T))
    top = evecs[:, -1]
    maximizer = DenseTensor(n, space.order, space.basis @ top)
    return RatioResult(space.kind, n, float(evals[-1]), maximizer, claimed_bound(space.kind, n), space.dim, evals)


def directional_ratio(t, order=None):
    """``sup_v |t(v)|^2 / |t|^2`` with the derivative slot last.

    ``t`` is a tensor or a batch of component arrays whose trailing
    ``order`` axes form the tensor (default: all axes).
    """
    if isinstance(t, DenseTensor):
        arr, order = t.array, t.order
    else:
        arr = np.asarray(t, dtype=float)
        order = arr.ndim if order is None else order
    n = arr.shape[-1]
    lead = arr.shape[: arr.ndim - order]
    flat = arr.reshape(lead + (-1, n))
    gram = np.einsum("...ia,...ib->...ab", flat, flat)
    total = np.trace(gram, axis1=-2, axis2=-1)
    top = np.linalg.eigvalsh(gram)[..., -1]
    return top / np.maximum(total, 1e-300)


def random_unitary_real(m, rng):
    """Real 2m x 2m image of a Haar-random unitary; commutes with J."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return np.block([[q.real, -q.imag], [q.imag, q.real]])


def invariance_audit(space, rng, trials=3):
    """Rotate the space by admissible frame changes and compare.

    Returns ``(max_residual, max_lambda_change)`` over the trials: the
    constraint residual of rotated basis tensors, and the change of
    ``lambda_max`` computed in the rotated frame.
    """
    n = space.n
    base = directional_ratio_max(space).lambda_max
    worst_res, worst_dl = 0.0, 0.0
    for _ in range(trials):
        if space.kind == "kahler-ricci":
            q = random_unitary_real(n // 2, rng)
        else:
            q = random_orthogonal(n, rng, special=True)
        cols = space.basis.T.reshape((-1,) + (n,) * space.order)
        rotated = rotate(cols, q).reshape(space.dim, -1)
        worst_res = max(worst_res, space.residual(rotated))
        ortho, _ = np.linalg.qr(rotated.T)
        moved = ConstraintSpace(space.kind, n, space.order, space.ambient_dim, ortho, space.symmetry)
        worst_dl = max(worst_dl, abs(directional_ratio_max(moved).lambda_max - base))
    return worst_res, worst_dl


# matrix claim -------------------------------------------------------------------
def _claim_form(d):
    """Orthonormal basis of the constrained matrices and the restricted form."""
    if not isinstance(d, (int, np.integer)) or not 2 <= d <= 12:
        raise ValueError("d must be an integer in 2..12")
    size = d * d
    idx = np.arange(size).reshape(d, d)
    unit = np.eye(size)
    cons = [unit[idx[a, a]] for a in range(d)]
    cons += [unit[idx[a]].sum(axis=0) for a in range(d)]
    space = null_space_basis(np.array(cons))
    ops = [unit[idx[:, a]].sum(axis=0) for a in range(d)]
    ops += [unit[idx[b, a]] + unit[idx[a, b]] for a in range(d) for b in range(a + 1, d)]
    op = np.array(ops) @ space
    return space, op.T @ op


def matrix_claim_max(d):
    """Top eigenvalue of the claim's quadratic form over constrained matrices.

    The form is ``sum_a (sum_c M_ca)^2 + sum_{a<b} (M_ba + M_ab)^2`` on
    ``d x d`` matrices with zero diagonal and zero row sums, measured
    against ``|M|^2``.  Returns ``(lambda_max, witness)``.
    """
    space, form = _claim_form(d)
    if space.shape[1] == 0:
        return 0.0, np.zeros((d, d))
    evals, evecs = np.linalg.eigh(form)
    witness = (space @ evecs[:, -1]).reshape(d, d)
    return float(evals[-1]), witness


def matrix_claim_spectrum(d):
    """All eigenvalues of the restricted form (ascending)."""
    _, form = _claim_form(d)
    return np.linalg.eigvalsh(form) if form.size else np.zeros(0)


# constant fitting -------------------------------------------------------------------
@dataclass(frozen=True)
class ConstantFit:
    """Empirical lower bound for the inequality's constant C (an estimate only)."""

    kind: str
    n: int
    c_hat: float
    samples: int
    bound: float
    estimate_only: bool = True


def _fit_samples(kind, n, rng, count):
    space = constraint_space_build("rm-deriv-unconstrained", n)
    coeffs = rng.standard_normal((count, space.dim))
    t = coeffs @ space.basis.T  # (count, n^5)
    if kind == "weyl-deriv":
        wb = weyl_class(n).basis()
        t4 = t.reshape(count, n**4, n)
        t = np.einsum("pa,qa,cqm->cpm", wb, wb, t4, optimize=True).reshape(count, -1)
    return t


def fit_minimal_C(kind, n, samples, seed=0, chunk=4096, divergence_free=False):
    """Smallest C with ``L <= c + C (x + x^2)`` over random samples.

    For each sampled tensor ``T`` normalized to ``|T| = 1``, ``L`` is the
    directional sup ratio and ``x = |delta T|``.  ``kind`` is
    ``"rm-deriv"`` or ``"weyl-deriv"``.  With ``divergence_free`` the
    samples are drawn from the divergence-free space, where the clean
    bound applies and the fitted constant is 0.

    Samples are drawn in fixed-size chunks from one seeded stream, so a
    run with fewer samples sees a prefix of a longer run.
    """
    if kind not in ("rm-deriv", "weyl-deriv"):
        raise ValueError("kind must be 'rm-deriv' or 'weyl-deriv'")
    c = (n - 1) / (n + 1) if kind == "weyl-deriv" else n / (n + 2)
    rng = np.random.default_rng(seed)
    best = 0.0
    done = 0
    space = None
    if divergence_free:
        space = constraint_space_build(kind + "-divfree", n)
    while done < samples:
        take = min(chunk, samples - done)
        if space is None:
            t = _fit_samples(kind, n, rng, chunk)[:take]
        else:
            t = (rng.standard_normal((chunk, space.dim)) @ space.basis.T)[:take]
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        arr = t.reshape((take,) + (n,) * 5)
        ratio = directional_ratio(arr, order=5)
        div = np.trace(arr, axis1=1, axis2=5).reshape(take, -1)
        x = np.linalg.norm(div, axis=1)
        excess = ratio - c
        mask = excess > 1e-12
        if np.any(mask):
            best = max(best, float(np.max(excess[mask] / (x[mask] + x[mask] ** 2 + 1e-300))))
        done += take
    return ConstantFit(kind, n, best, samples, c)
