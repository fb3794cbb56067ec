"""Dense tensors over R^n, symmetry classes and curvature algebra.

Tensors are fully covariant component arrays.  Inner products are the
Euclidean ones on components, so callers working at a point where the
metric is not the identity pass to an orthonormal frame first.

Symmetry classes are described by linear relations between index slots.
The admissible subspace is the null space of the stacked relation matrix,
computed by SVD with a relative threshold, which gives exact orthogonal
projectors without symbolic algebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

__all__ = [
    "MAX_DIM",
    "MAX_ORDER",
    "NULL_RTOL",
    "DenseTensor",
    "Relation",
    "ExplicitRows",
    "SymmetryClass",
    "antisymmetric",
    "symmetric",
    "cyclic",
    "trace_free",
    "curvature_class",
    "weyl_class",
    "null_space_basis",
    "project_to_symmetry",
    "kulkarni_nomizu",
    "weyl_decompose",
    "directional_norm_sq",
    "curvature_dimension",
]

MAX_DIM = 8
MAX_ORDER = 5
NULL_RTOL = 1e-10
_LETTERS = "abcdefghij"


@dataclass(frozen=True)
class DenseTensor:
    """Covariant tensor with ``n ** order`` row-major components."""

    dim: int
    order: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 2 <= self.dim <= MAX_DIM:
            raise ValueError(f"dimension {self.dim} outside 2..{MAX_DIM}")
        if not 0 <= self.order <= MAX_ORDER:
            raise ValueError(f"order {self.order} outside 0..{MAX_ORDER}")
        arr = np.array(self.entries, dtype=float).reshape(-1)
        if arr.size != self.dim**self.order:
            raise ValueError(f"expected {self.dim ** self.order} entries, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array, dtype=float)
        if array.ndim == 0:
            raise ValueError("use order >= 1 arrays; scalars need an explicit dim")
        dim = array.shape[0]
        if any(s != dim for s in array.shape):
            raise ValueError(f"tensor array must be hypercubic, got shape {array.shape}")
        return cls(dim, array.ndim, array.reshape(-1))

    @property
    def array(self):
        return self.entries.reshape((self.dim,) * self.order)

    def norm(self):
        return float(np.linalg.norm(self.entries))

    def __add__(self, other):
        self._check_compatible(other)
        return DenseTensor(self.dim, self.order, self.entries + other.entries)

    def __sub__(self, other):
        self._check_compatible(other)
        return DenseTensor(self.dim, self.order, self.entries - other.entries)

    def __mul__(self, scalar):
        return DenseTensor(self.dim, self.order, self.entries * float(scalar))

    __rmul__ = __mul__

    def _check_compatible(self, other):
        if (self.dim, self.order) != (other.dim, other.order):
            raise ValueError("tensor dim/order mismatch")

    def contract(self, slot_a, slot_b):
        """Euclidean trace over two slots (0-based)."""
        if slot_a == slot_b:
            raise ValueError("cannot trace a slot with itself")
        traced = np.trace(self.array, axis1=slot_a, axis2=slot_b)
        return DenseTensor(self.dim, self.order - 2, np.ravel(traced))


# relations -----------------------------------------------------------------
@dataclass(frozen=True)
class Relation:
    """Linear relation ``sum_t coef_t * T[perm_t(I)] = 0`` for every index I.

    ``terms`` holds ``(coef, pattern)`` pairs; ``pattern`` is a string of
    slot letters giving which input slot feeds each position, e.g. the
    antisymmetry ``T_jikl + T_ijkl = 0`` is ``((1, "bacd"), (1, "abcd"))``.
    With ``trace`` set, the relation is instead a single trace over the
    two slots and the result must vanish.
    """

    terms: tuple = ()
    trace: tuple | None = None
    name: str = ""

    def residual(self, t):
        """Relation residual for arrays of shape ``(batch,) + (n,) * order``."""
        order = t.ndim - 1
        if self.trace is not None:
            return np.trace(t, axis1=self.trace[0] + 1, axis2=self.trace[1] + 1).reshape(t.shape[0], -1)
        ident = _LETTERS[:order]
        out = 0.0
        for coef, pattern in self.terms:
            out = out + coef * np.einsum(f"Z{pattern}->Z{ident}", t)
        return np.asarray(out).reshape(t.shape[0], -1)


@dataclass(frozen=True)
class ExplicitRows:
    """Relation given as explicit coefficient rows on flattened components."""

    rows: np.ndarray
    name: str = ""

    def residual(self, t):
        return t.reshape(t.shape[0], -1) @ np.asarray(self.rows).T


def antisymmetric(order, a, b):
    """Antisymmetry in slots ``a`` and ``b`` (0-based)."""
    ident = _LETTERS[:order]
    swapped = list(ident)
    swapped[a], swapped[b] = swapped[b], swapped[a]
    return Relation(((1.0, ident), (1.0, "".join(swapped))), name=f"antisym({a},{b})")


def symmetric(order, a, b):
    ident = _LETTERS[:order]
    swapped = list(ident)
    swapped[a], swapped[b] = swapped[b], swapped[a]
    return Relation(((1.0, ident), (-1.0, "".join(swapped))), name=f"sym({a},{b})")


def pair_symmetric(order=4):
    ident = _LETTERS[:order]
    swapped = ident[2:4] + ident[0:2] + ident[4:]
    return Relation(((1.0, ident), (-1.0, swapped)), name="pair")


def cyclic(order, slots):
    """Cyclic sum over the given slots vanishes."""
    ident = list(_LETTERS[:order])
    terms = []
    for shift in range(len(slots)):
        pat = list(ident)
        for pos, s in enumerate(slots):
            pat[s] = ident[slots[(pos + shift) % len(slots)]]
        terms.append((1.0, "".join(pat)))
    return Relation(tuple(terms), name=f"cyclic{tuple(slots)}")


def trace_free(a, b):
    return Relation(trace=(a, b), name=f"trace({a},{b})")


@dataclass(frozen=True)
class SymmetryClass:
    """Subspace of order-``order`` tensors cut out by linear relations."""

    dim: int
    order: int
    constraints: tuple
    name: str = ""
    # optional factory for an orthonormal superset basis that already
    # satisfies some of the constraints; only speeds up the null space
    ambient: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not 2 <= self.dim <= MAX_DIM or not 0 <= self.order <= MAX_ORDER:
            raise ValueError("symmetry class outside the dense cap")

    def residual(self, arrays):
        """Stacked relation residuals for a batch of component arrays."""
        arrays = np.asarray(arrays, dtype=float)
        arrays = arrays.reshape((-1,) + (self.dim,) * self.order)
        if not self.constraints:
            return np.zeros((arrays.shape[0], 0))
        return np.concatenate([c.residual(arrays) for c in self.constraints], axis=1)

    def basis(self, within=None):
        """Orthonormal basis (columns) of the admissible subspace.

        ``within`` optionally restricts the search to the column span of an
        orthonormal matrix, which keeps large constraint systems small.
        """
        if within is None:
            return _cached_basis(self)
        return _basis(self, within)

    def projector_apply(self, arrays):
        b = self.basis()
        flat = np.asarray(arrays, dtype=float).reshape(-1, self.dim**self.order)
        return (flat @ b) @ b.T


def null_space_basis(matrix, rtol=NULL_RTOL):
    """Orthonormal null-space basis with threshold ``rtol * sigma_max``."""
    matrix = np.asarray(matrix, dtype=float)
    ncols = matrix.shape[1]
    if matrix.shape[0] == 0 or not np.any(matrix):
        return np.eye(ncols)
    if matrix.shape[0] > ncols:
        # a triangular factor has the same null space and is square
        matrix = scipy.linalg.qr(matrix, mode="r")[0][:ncols]
    try:
        _, s, vt = scipy.linalg.svd(matrix, full_matrices=True, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        _, s, vt = scipy.linalg.svd(matrix, full_matrices=True, lapack_driver="gesvd")
    rank = int(np.sum(s > rtol * s[0]))
    return vt[rank:].T.copy()


def _basis(sym, within):
    n, k = sym.dim, sym.order
    ambient = np.eye(n**k) if within is None else np.asarray(within, dtype=float)
    cols = ambient.T.reshape((-1,) + (n,) * k)
    resid = sym.residual(cols)  # (ncols, nrows)
    coeffs = null_space_basis(resid.T)
    basis = ambient @ coeffs
    # re-orthonormalize to wash out rounding from the product
    if basis.shape[1]:
        basis, _ = np.linalg.qr(basis)
    return basis


_BASIS_CACHE = {}


def _cached_basis(sym):
    # keyed by identity; the class object is kept alive alongside its basis
    hit = _BASIS_CACHE.get(id(sym))
    if hit is None or hit[0] is not sym:
        b = _basis(sym, None if sym.ambient is None else sym.ambient(sym.dim))
        b.setflags(write=False)
        hit = _BASIS_CACHE[id(sym)] = (sym, b)
    return hit[1]


# curvature classes -----------------------------------------------------------
@lru_cache(maxsize=None)
def _pair_symmetric_basis(n):
    """Orthonormal basis of Sym^2(Lambda^2): antisymmetric pairs, symmetric swap."""
    pairs = list(itertools.combinations(range(n), 2))
    two_forms = []
    for i, j in pairs:
        e = np.zeros((n, n))
        e[i, j], e[j, i] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        two_forms.append(e.reshape(-1))
    cols = []
    for p, q in itertools.combinations_with_replacement(range(len(pairs)), 2):
        t = np.outer(two_forms[p], two_forms[q])
        if p != q:
            t = (t + t.T) / np.sqrt(2)
        cols.append(t.reshape(-1))
    out = np.array(cols).T
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def curvature_class(n):
    """Algebraic curvature tensors: antisymmetries, pair symmetry, first Bianchi."""
    return SymmetryClass(
        n,
        4,
        (antisymmetric(4, 0, 1), antisymmetric(4, 2, 3), pair_symmetric(), cyclic(4, (1, 2, 3))),
        name="curvature",
        ambient=_pair_symmetric_basis,
    )


@lru_cache(maxsize=None)
def weyl_class(n):
    """Totally trace-free algebraic curvature tensors."""
    base = curvature_class(n)
    return SymmetryClass(n, 4, base.constraints + (trace_free(0, 2),), name="weyl", ambient=lambda _: base.basis())


def curvature_dimension(n):
    return n * n * (n * n - 1) // 12


def project_to_symmetry(t, sym):
    """Orthogonal projection of ``t`` onto the subspace of ``sym``."""
    if (t.dim, t.order) != (sym.dim, sym.order):
        raise ValueError(f"tensor (dim={t.dim}, order={t.order}) does not match class (dim={sym.dim}, order={sym.order})")
    b = sym.basis()
    return DenseTensor(t.dim, t.order, b @ (b.T @ t.entries))


def _require_symmetric(arr, name):
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square order-2 tensor")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.T)) > 1e-12 * scale:
        raise ValueError(f"{name} must be symmetric")


def kulkarni_nomizu_array(a, g):
    """(a ⊙ g)_ijkl = a_ik g_jl + a_jl g_ik - a_il g_jk - a_jk g_il, batched."""
    return (
        np.einsum("...ik,...jl->...ijkl", a, g)
        + np.einsum("...jl,...ik->...ijkl", a, g)
        - np.einsum("...il,...jk->...ijkl", a, g)
        - np.einsum("...jk,...il->...ijkl", a, g)
    )


def kulkarni_nomizu(a, g):
    a_arr = np.asarray(a.array if isinstance(a, DenseTensor) else a, dtype=float)
    g_arr = np.asarray(g.array if isinstance(g, DenseTensor) else g, dtype=float)
    _require_symmetric(a_arr, "a")
    _require_symmetric(g_arr, "g")
    if a_arr.shape != g_arr.shape:
        raise ValueError("a and g must have the same dimension")
    return DenseTensor.from_array(kulkarni_nomizu_array(a_arr, g_arr))


def weyl_decompose_array(rm, g, rc, r):
    """Batched Schouten tensor and Weyl part; ``rm = W + A ⊙ g``."""
    n = g.shape[-1]
    r = np.asarray(r)[..., None, None]
    if n == 2:
        a = r * g / 4.0
        return np.zeros_like(rm), a
    a = (rc - r * g / (2.0 * (n - 1))) / (n - 2)
    w = rm - kulkarni_nomizu_array(a, g)
    return w, a


def weyl_decompose(rm, g, rc, r, rtol=1e-10):
    """Split ``rm`` into its Weyl part and the Schouten tensor A.

    Returns
    -------
    W, A : DenseTensor
    """
    rm_arr = rm.array if isinstance(rm, DenseTensor) else np.asarray(rm, dtype=float)
    g_arr = g.array if isinstance(g, DenseTensor) else np.asarray(g, dtype=float)
    rc_arr = rc.array if isinstance(rc, DenseTensor) else np.asarray(rc, dtype=float)
    ginv = np.linalg.inv(g_arr)
    scale = max(float(np.max(np.abs(rm_arr))), 1e-300)
    rc_check = np.einsum("ik,ijkl->jl", ginv, rm_arr)
    if np.max(np.abs(rc_check - rc_arr)) > rtol * max(scale, float(np.max(np.abs(rc_arr)))) * rm_arr.shape[0]:
        raise ValueError("rc is not the (1,3)-trace of rm: max mismatch "
                         f"{np.max(np.abs(rc_check - rc_arr)):.3e}")
    r_check = float(np.einsum("ij,ij->", ginv, rc_arr))
    if abs(r_check - float(r)) > rtol * max(scale, abs(float(r))) * rm_arr.shape[0] ** 2:
        raise ValueError(f"r={float(r)!r} is not the trace of rc ({r_check!r})")
    w, a = weyl_decompose_array(rm_arr, g_arr, rc_arr, float(r))
    return DenseTensor.from_array(w), DenseTensor.from_array(a)


def directional_norm_sq(t, v, tol=1e-12):
    """Squared norm of ``t`` with its last slot contracted against ``v``."""
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise ValueError("direction must be a unit vector")
    arr = t.array if isinstance(t, DenseTensor) else np.asarray(t, dtype=float)
    if arr.ndim < 1:
        raise ValueError("tensor order must be at least 1")
    if arr.shape[-1] != v.size:
        raise ValueError("direction dimension mismatch")
    contracted = arr @ v
    return float(np.sum(contracted * contracted))


def random_orthogonal(n, rng, special=True):
    """Haar-random orthogonal matrix (det +1 if ``special``)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if special and np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rotate(arrays, q):
    """Apply ``q`` to every slot of a batch of order-k component arrays."""
    arrays = np.asarray(arrays, dtype=float)
    order = arrays.ndim - 1
    out = arrays
    for slot in range(order):
        out = np.moveaxis(np.tensordot(out, q, axes=([slot + 1], [1])), -1, slot + 1)
    return out


def all_index_tuples(n, order):
    return itertools.product(range(n), repeat=order)
